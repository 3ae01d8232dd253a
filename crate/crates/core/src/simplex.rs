//! Dense two-phase primal simplex for `min c.x  s.t.  A x <= b, x >= 0`.
//!
//! Pivoting follows Bland's rule (lowest eligible index enters, ties in the
//! ratio test leave by lowest basic index), so the method terminates on
//! degenerate problems. Meant for small dense instances.

const PIVOT_EPS: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexError {
    /// Phase one ended with a positive sum of artificials.
    Infeasible { residual: f64 },
    Unbounded,
    IterationLimit,
    BadShape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, tij) in r.iter_mut().zip(&self.rows[i]) {
                    *rj -= cb * tij;
                }
            }
        }
        r
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }

    /// Minimizes `cost` over the current basis; columns with `allowed[j] == false` never enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<(), SimplexError> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(SimplexError::IterationLimit);
            }
            let reduced = self.reduced_costs(cost);
            let Some(enter) = (0..self.width).find(|&j| allowed[j] && reduced[j] < -PIVOT_EPS)
            else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_EPS
                                || (ratio <= lr + PIVOT_EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Err(SimplexError::Unbounded),
            }
        }
    }
}

/// Solves `min cost.x` subject to `a x <= b`, `x >= 0`.
pub fn minimize(cost: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOptimum, SimplexError> {
    let n = cost.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(SimplexError::BadShape);
    }

    // Columns: structural (n), slack (m), artificial (one per negative rhs).
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let width = n + m + negative.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[width] = sign * b[i];
        if b[i] < 0.0 {
            row[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis,
        width,
        pivots: 0,
    };

    let is_artificial = |j: usize| j >= n + m;
    if !negative.is_empty() {
        let phase_one: Vec<f64> = (0..width).map(|j| if is_artificial(j) { 1.0 } else { 0.0 }).collect();
        t.optimize(&phase_one, &vec![true; width])?;
        let residual = t.objective(&phase_one);
        if residual > FEAS_TOL {
            return Err(SimplexError::Infeasible { residual });
        }
        // Drive zero-level artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if is_artificial(t.basis[i]) {
                match (0..n + m).find(|&j| t.rows[i][j].abs() > PIVOT_EPS) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut phase_two = vec![0.0; width];
    phase_two[..n].copy_from_slice(cost);
    let allowed: Vec<bool> = (0..width).map(|j| !is_artificial(j)).collect();
    t.optimize(&phase_two, &allowed)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rhs(i);
        }
    }
    let objective = cost.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpOptimum {
        x,
        objective,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let opt = minimize(&[-3.0, -5.0], &a, &[4.0, 12.0, 18.0]).unwrap();
        assert!((opt.objective + 36.0).abs() < 1e-9);
        assert!((opt.x[0] - 2.0).abs() < 1e-9 && (opt.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y >= 2, x <= 3, y <= 3
        let a = vec![vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let opt = minimize(&[1.0, 1.0], &a, &[-2.0, 3.0, 3.0]).unwrap();
        assert!((opt.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        match minimize(&[0.0, 0.0], &a, &[-3.0, 1.0, 1.0]) {
            Err(SimplexError::Infeasible { residual }) => assert!((residual - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let a = vec![vec![1.0, -1.0]];
        assert_eq!(minimize(&[0.0, -1.0], &a, &[1.0]), Err(SimplexError::Unbounded));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under the textbook largest-coefficient rule.
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let opt = minimize(&[-0.75, 150.0, -0.02, 6.0], &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((opt.objective + 0.05).abs() < 1e-9);
    }
}

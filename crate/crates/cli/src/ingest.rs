use std::fs::File;
use std::path::Path;

use covthresh::estimation::{dichotomize_top_quantile, LabeledSample};
use serde::{Deserialize, Serialize};

use crate::config::ColumnMapping;
use crate::error::{CliError, CliResult};

/// Row accounting for one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub path: String,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub n: usize,
    /// Cutoff used when the class column was dichotomized.
    #[serde(default)]
    pub dichotomy_cutoff: Option<f64>,
    pub class_counts: Vec<(String, usize)>,
}

struct Row {
    line: u64,
    x: f64,
    z: String,
    y: Option<bool>,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
        CliError::Validation(format!(
            "{}: no column named {name:?} (columns: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn parse_number(raw: &str, line: u64, name: &str) -> CliResult<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Validation(format!("line {line}: column {name:?}: cannot parse {raw:?} as a finite number")))
}

fn parse_outcome(raw: &str, line: u64, name: &str) -> CliResult<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(CliError::Validation(format!(
            "line {line}: column {name:?}: outcome must be 0/1, true/false or yes/no, got {raw:?}"
        ))),
    }
}

/// Reads a delimited file with a header row into a labeled sample.
///
/// `cutoff` fixes the dichotomization cutoff (for a screening file that must
/// be split like the learning file); otherwise it is the empirical quantile
/// of the retained rows.
pub fn ingest(
    path: &Path,
    columns: &ColumnMapping,
    cutoff: Option<f64>,
) -> CliResult<(LabeledSample, IngestSummary)> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: cannot read header: {e}", path.display())))?
        .clone();
    let xi = column(&headers, &columns.x, path)?;
    let zi = column(&headers, &columns.z, path)?;
    let yi = columns.y.as_deref().map(|y| column(&headers, y, path)).transpose()?;
    let drop: Vec<(usize, &str)> = columns
        .drop_nonpositive
        .iter()
        .map(|c| column(&headers, c, path).map(|i| (i, c.as_str())))
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::new();
    let mut rows_read = 0;
    for record in reader.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(format!("{}: {e}", path.display())),
            _ => CliError::Validation(format!("{}: {e}", path.display())),
        })?;
        rows_read += 1;
        let line = record.position().map_or(0, |p| p.line());
        let mut keep = true;
        for &(i, name) in &drop {
            if parse_number(&record[i], line, name)? <= 0.0 {
                keep = false;
            }
        }
        if !keep {
            continue;
        }
        rows.push(Row {
            line,
            x: parse_number(&record[xi], line, &columns.x)?,
            z: record[zi].trim().to_string(),
            y: yi
                .map(|i| parse_outcome(&record[i], line, columns.y.as_deref().unwrap_or_default()))
                .transpose()?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Core(covthresh::Error::EmptySample));
    }

    let (labels, dichotomy_cutoff, declared) = match columns.dichotomize {
        Some(q) => {
            let values = rows
                .iter()
                .map(|r| parse_number(&r.z, r.line, &columns.z))
                .collect::<CliResult<Vec<f64>>>()?;
            let [high, low] = &columns.dichotomize_labels;
            let cut = match cutoff {
                Some(c) => c,
                None => dichotomize_top_quantile(&values, q)?.cutoff,
            };
            let labels: Vec<String> = values
                .iter()
                .map(|&v| if v > cut { high.clone() } else { low.clone() })
                .collect();
            (labels, Some(cut), Some(vec![high.clone(), low.clone()]))
        }
        None => (rows.iter().map(|r| r.z.clone()).collect(), None, columns.labels.clone()),
    };
    let records = rows.iter().zip(&labels).map(|(r, z)| (r.x, z.as_str(), r.y));
    let sample = LabeledSample::from_records(records, declared)?;
    let summary = IngestSummary {
        path: path.display().to_string(),
        rows_read,
        rows_dropped: rows_read - rows.len(),
        n: sample.len(),
        dichotomy_cutoff,
        class_counts: sample.labels().iter().cloned().zip(sample.counts()).collect(),
    };
    Ok((sample, summary))
}

use std::fmt;

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input contents.
    Validation(String),
    /// Error raised by the library.
    Core(covthresh::Error),
    /// Unreadable input or unwritable output.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_infeasible() => 3,
            CliError::Core(covthresh::Error::ReplicateRejection { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 4,
        }
    }

    fn hint(&self) -> Option<&'static str> {
        use covthresh::Error as E;
        match self {
            CliError::Core(E::Inadmissible { .. }) => Some(
                "raise alpha, use a gamma rule with a smaller gamma, or the modified rule",
            ),
            CliError::Core(E::Infeasible { .. }) => {
                Some("relax the type II budgets or raise alpha")
            }
            CliError::Core(E::InsufficientData { .. } | E::DegenerateScale { .. }) => {
                Some("merge sparse classes or use --mode marginal")
            }
            CliError::Core(E::UnknownClass(_)) => {
                Some("declare every class with --labels or check the class column")
            }
            CliError::Core(E::MissingGroundTruth) => Some("pass the outcome column with --y"),
            CliError::Core(E::ReplicateRejection { .. }) => {
                Some("the estimate is close to inadmissible; raise alpha or use more data")
            }
            _ => None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}")?,
            CliError::Core(e) => write!(f, "{e}")?,
            CliError::Io(m) => write!(f, "i/o error: {m}")?,
        }
        if let Some(h) = self.hint() {
            write!(f, "\nhint: {h}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

impl From<covthresh::Error> for CliError {
    fn from(e: covthresh::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

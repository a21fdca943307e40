use std::fmt;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Lib(perclab::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for insufficient data,
    /// 4 for internal numeric inconsistencies.
    pub fn exit_code(&self) -> i32 {
        use perclab::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                E::InvalidArgument(_) | E::OutOfDomain(_) | E::DivergentIntegral(_) => 2,
                E::InsufficientData(_) | E::SearchFailed(_) => 3,
                E::NumericInconsistency(_) | E::LemmaViolation(_) | E::HypothesisNotMet(_) => 4,
            },
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            2 => "config-error",
            3 => "insufficient-data",
            _ => "numeric-inconsistency",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<perclab::Error> for CliError {
    fn from(e: perclab::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

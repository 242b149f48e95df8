use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Engine(asianhedge::Error),
    /// Engine failures reported as text, e.g. from a partially failed study.
    Estimator(String),
    Io(std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 4 for sample-quality failures, 3 for
    /// everything else the engines or the file system report.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Engine(asianhedge::Error::InvalidParameter { .. }) => ExitCode::from(2),
            CliError::Engine(e) if e.is_sample_quality() => ExitCode::from(4),
            CliError::Engine(_) | CliError::Estimator(_) | CliError::Io(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Engine(e) if e.is_sample_quality() => write!(f, "sample-quality error: {e}"),
            CliError::Engine(e) => write!(f, "estimator error: {e}"),
            CliError::Estimator(msg) => write!(f, "estimator error: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<asianhedge::Error> for CliError {
    fn from(e: asianhedge::Error) -> Self {
        CliError::Engine(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Engine(e.into())
    }
}

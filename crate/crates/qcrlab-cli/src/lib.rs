//! Support library for the `qcrlab` command-line tool: configuration
//! loading, dataset ingestion, sweep orchestration, and machine-readable
//! result emission.

pub mod config;
pub mod csvio;
pub mod sweep;

use thiserror::Error;

/// CLI-level errors, split by exit code: usage/validation problems exit
/// with 1, numerical failures with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Data(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<qcrlab::quadrature::QuadratureError> for CliError {
    fn from(e: qcrlab::quadrature::QuadratureError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<qcrlab::estimation::EstimationError> for CliError {
    fn from(e: qcrlab::estimation::EstimationError) -> Self {
        use qcrlab::estimation::EstimationError as E;
        match e {
            E::InvalidInput(msg) => CliError::Data(msg),
            E::DataOutOfRange(msg) => CliError::Data(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<qcrlab::resonator::ResonatorError> for CliError {
    fn from(e: qcrlab::resonator::ResonatorError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<qcrlab::spectroscopy::SpectroscopyError> for CliError {
    fn from(e: qcrlab::spectroscopy::SpectroscopyError) -> Self {
        use qcrlab::spectroscopy::SpectroscopyError as S;
        match e {
            S::InvalidTrace(msg) => CliError::Data(msg),
            S::InvalidPeakModel(msg) => CliError::Data(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

use std::io;
use std::path::PathBuf;

use kiss_control::model::ModelError;
use kiss_control::oracle::OracleError;
use kiss_control::scalar::ScalarError;
use kiss_control::sim::SimError;
use kiss_control::staged::StagedError;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DISAGREEMENT: u8 = 3;
pub const EXIT_UNCONTROLLABLE: u8 = 4;
pub const EXIT_TRANSIENT: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Uncontrollable(String),
    #[error(transparent)]
    Transient(SimError),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) | Self::Model(_) => EXIT_VALIDATION,
            Self::Uncontrollable(_) => EXIT_UNCONTROLLABLE,
            Self::Transient(_) => EXIT_TRANSIENT,
            Self::Numerical(_) | Self::Io { .. } => EXIT_FAILURE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::Uncontrollable(_) | ScalarError::InsufficientMortality { .. } => {
                Self::Uncontrollable(e.to_string())
            }
            ScalarError::Oracle(o) => o.into(),
            ScalarError::Layout(m) => Self::Model(m),
            ScalarError::InvalidInput { .. } | ScalarError::NonpositiveGrowth(_) | ScalarError::NotScalar => {
                Self::Validation(e.to_string())
            }
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Layout(m) => Self::Model(m),
            OracleError::TooFewLevels(_) => Self::Validation(e.to_string()),
            OracleError::NoConvergence { .. } | OracleError::Breakdown { .. } => Self::Numerical(e.to_string()),
        }
    }
}

impl From<StagedError> for CliError {
    fn from(e: StagedError) -> Self {
        match e {
            StagedError::Scalar(s) => s.into(),
            StagedError::Layout(m) => Self::Model(m),
            StagedError::Linalg(_) | StagedError::SingularBasis => Self::Numerical(e.to_string()),
            StagedError::AssumptionViolated(_) | StagedError::NonpositiveLeadEigenvalue(_) | StagedError::NotStaged => {
                Self::Validation(e.to_string())
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::TransientNotResolved { .. } => Self::Transient(e),
            SimError::Layout(m) => Self::Model(m),
            SimError::InvalidRun(_) => Self::Validation(e.to_string()),
            SimError::Instability { .. } | SimError::Singular => Self::Numerical(e.to_string()),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::cwt::CwtError;
use crate::dwt::DwtError;
use crate::grid::{GridError, UnfoldDirection};
use crate::mfdfa::MfdfaError;
use crate::synth::SynthError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Invalid configuration or arguments.
    Usage,
    /// Unreadable, malformed or too-small input data.
    Input,
    /// The data is well-formed but numerically degenerate.
    Degenerate,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Dwt(#[from] DwtError),
    #[error(transparent)]
    Cwt(#[from] CwtError),
    #[error(transparent)]
    Mfdfa(#[from] MfdfaError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{direction} unfolding: {source}")]
    Unfolding {
        direction: UnfoldDirection,
        #[source]
        source: Box<Error>,
    },
    #[error("analyses were produced with different configurations: {0}")]
    ConfigMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        use ErrorCategory::*;
        match self {
            Error::Grid(e) => match e {
                GridError::InvalidShape(_) => Usage,
                _ => Input,
            },
            Error::Dwt(e) => match e {
                DwtError::DegenerateSignal => Degenerate,
                DwtError::TooShort { .. } => Input,
                DwtError::BadLevels(_)
                | DwtError::UnknownWavelet(_)
                | DwtError::ShapeMismatch(_) => Usage,
            },
            Error::Cwt(e) => match e {
                CwtError::ZeroPower { .. } => Degenerate,
                CwtError::BadScale(_) | CwtError::BadOmega(_) | CwtError::NoScales => Usage,
            },
            Error::Mfdfa(e) => match e {
                MfdfaError::ZeroVariance
                | MfdfaError::AllSegmentsDegenerate { .. }
                | MfdfaError::NegativeMomentOnZero { .. }
                | MfdfaError::FitFailure { .. } => Degenerate,
                MfdfaError::TooShort { .. } => Input,
                MfdfaError::BadScale { .. }
                | MfdfaError::SingularFit { .. }
                | MfdfaError::BadConfig(_)
                | MfdfaError::TooFewPoints(_) => Usage,
            },
            Error::Synth(e) => match e {
                SynthError::EmbeddingFailure { .. } => Degenerate,
                _ => Usage,
            },
            Error::Unfolding { source, .. } => source.category(),
            Error::ConfigMismatch(_) | Error::InvalidConfig(_) => Usage,
            Error::Parse { .. } | Error::Io { .. } | Error::Json(_) => Input,
        }
    }
}

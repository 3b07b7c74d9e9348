use std::io;
use std::path::Path;

use ranger_core::envelope::EnvelopeError;
use ranger_core::homerange::HomeRangeError;
use ranger_core::ingest::IngestError;
use ranger_core::ppstats::PpError;
use ranger_core::variogram::VariogramError;
use ranger_core::DataError;
use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "class": self.class(), "message": self.message() })
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<VariogramError> for CliError {
    fn from(e: VariogramError) -> Self {
        use VariogramError::*;
        let msg = e.to_string();
        match e {
            InvalidParams(_) | UnsupportedAnisotropy(_) => CliError::Usage(msg),
            UnevenSampling { .. } | TooShort | InsufficientLags { .. } | Data(_) => CliError::Data(msg),
            DegenerateVariogram | NonConvergence => CliError::Numerical(msg),
        }
    }
}

impl From<HomeRangeError> for CliError {
    fn from(e: HomeRangeError) -> Self {
        use HomeRangeError::*;
        let msg = e.to_string();
        match e {
            InvalidLevel(_) | InvalidGrid | UnsupportedFamily(_) => CliError::Usage(msg),
            TooFewPoints { .. } | DegenerateGeometry => CliError::Data(msg),
            SingularCovariance | InvalidBandwidth | UnnormalizedGrid(_) => CliError::Numerical(msg),
        }
    }
}

impl From<PpError> for CliError {
    fn from(e: PpError) -> Self {
        use PpError::*;
        let msg = e.to_string();
        match e {
            InsufficientPoints(_) | EmptyComponent(_) | Data(_) => CliError::Data(msg),
            NotConverged(_) | DivisionDomain | InvalidIntensity => CliError::Numerical(msg),
            SameMark | InvalidQuadrature | InvalidRGrid | GridMismatch => CliError::Usage(msg),
        }
    }
}

impl From<EnvelopeError> for CliError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::Pp(p) => p.into(),
            EnvelopeError::NoCommonDomain => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

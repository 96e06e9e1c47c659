//! Error taxonomy of the driver, mapped onto the documented exit codes:
//! 2 config, 3 data, 4 numeric.

use mmflow::flow::FlowError;
use mmflow::geom3d::GeomError;
use mmflow::metrics::MetricError;
use mmflow::nn::NnError;
use mmflow::surface::SurfaceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::Geom(g) => CliError::Numeric(g.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::CheckpointMismatch(_) | NnError::Io { .. } | NnError::EmptyBatch => {
                CliError::Data(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

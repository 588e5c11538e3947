use crate::braid::BraidError;
use crate::config::ConfigError;
use crate::circuit::{CircuitError, ParseError, SynthError};
use crate::estimator::EstimatorError;
use crate::layout::LayoutError;
use crate::qec::QecError;
use crate::teleport::TeleportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error; each variant names the pipeline stage that failed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("circuit: {0}")]
    Circuit(#[from] CircuitError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("qec: {0}")]
    Qec(#[from] QecError),
    #[error("place: {0}")]
    Layout(#[from] LayoutError),
    #[error("braid: {0}")]
    Braid(#[from] BraidError),
    #[error("teleport: {0}")]
    Teleport(#[from] TeleportError),
    #[error("estimate: {0}")]
    Estimator(#[from] EstimatorError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Pipeline stage name, as used in the message prefix.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Circuit(_) => "circuit",
            Error::Synth(_) => "synth",
            Error::Qec(_) => "qec",
            Error::Layout(_) => "place",
            Error::Braid(_) => "braid",
            Error::Teleport(_) => "teleport",
            Error::Estimator(_) => "estimate",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

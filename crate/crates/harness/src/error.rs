use std::io;
use std::path::Path;

use rte_core::neural::NeuralError;
use rte_core::optimize::OptimizeError;
use rte_core::te::TeError;
use rte_core::topology::TopologyError;
use rte_core::traffic::TrafficError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    /// Process exit code: 1 config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) => 2,
            HarnessError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::NotFound {
            HarnessError::Config(format!("{}: file not found", path.display()))
        } else {
            HarnessError::Data(format!("{}: {e}", path.display()))
        }
    }
}

impl From<TopologyError> for HarnessError {
    fn from(e: TopologyError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<TrafficError> for HarnessError {
    fn from(e: TrafficError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<TeError> for HarnessError {
    fn from(e: TeError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

impl From<OptimizeError> for HarnessError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Infeasible { .. } | OptimizeError::InvalidBound(_) => HarnessError::Config(e.to_string()),
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<NeuralError> for HarnessError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::InvalidOption(_) => HarnessError::Config(e.to_string()),
            NeuralError::Te(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

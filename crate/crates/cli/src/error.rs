use std::path::Path;

use polaris_core::automaton::AutomatonError;
use polaris_core::models::ModelError;
use polaris_core::sim::SimError;
use polaris_core::synthesis::SynthesisError;
use thiserror::Error;

use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write report: {0}")]
    Report(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Format {
        path: String,
        #[source]
        source: AutomatonError,
    },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 when the inputs were fine but a checked property turned out false,
    /// 2 for usage, input and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Synthesis(SynthesisError::NotDecomposable(_) | SynthesisError::NotControllable(_)) => 1,
            CliError::Model(ModelError::NotDecomposable(_)) => 1,
            CliError::Sim(SimError::InvalidConfig(_)) => 2,
            CliError::Sim(_) => 1,
            _ => 2,
        }
    }
}

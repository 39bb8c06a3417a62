use std::path::PathBuf;

use deadbeat_sync::{DesignError, GraphError, SyncError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed spec: {0}")]
    Malformed(String),
    #[error("{0}")]
    Controllability(DesignError),
    #[error("{0}")]
    SpanningTree(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Malformed(_) => 2,
            CliError::Controllability(_) => 3,
            CliError::SpanningTree(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }

    pub fn malformed(msg: impl Into<String>) -> Self {
        CliError::Malformed(msg.into())
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::LosesControllability { .. } => CliError::Controllability(e),
            DesignError::InvalidSystem(_) => CliError::Malformed(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NoSpanningTree => CliError::SpanningTree(e.to_string()),
            GraphError::Mat(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<SyncError> for CliError {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::NoSpanningTree { index } => {
                CliError::SpanningTree(format!("graph {index} does not contain a spanning tree"))
            }
            SyncError::NonPositiveLambda2 { .. } => CliError::SpanningTree(e.to_string()),
            SyncError::InvalidMu(_) | SyncError::InvalidRun(_) => CliError::Malformed(e.to_string()),
            SyncError::Design(d) => d.into(),
            SyncError::Graph(g) => g.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("{op}: zero-sized dimension in shape {shape:?}")]
    EmptyDimension { op: &'static str, shape: Vec<usize> },

    #[error("{op}: expected {expected} channels, got {got}")]
    ChannelCount {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("backward: loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("backward: node {node} depends on later node {parent}")]
    GraphCycle { node: usize, parent: usize },

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("could not place {agents} agents without overlap after {attempts} attempts")]
    Placement { agents: usize, attempts: usize },

    #[error("malformed {format} data at byte offset {offset}: {reason}")]
    Format {
        format: &'static str,
        offset: u64,
        reason: String,
    },

    #[error("track row {row}: {reason}")]
    TrackRow { row: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("training diverged at epoch {epoch}; last good epoch {last_good_epoch:?}")]
    Diverged {
        epoch: usize,
        last_good_epoch: Option<usize>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. }
            | Error::EmptyDimension { .. }
            | Error::ChannelCount { .. } => "shape",
            Error::NotScalar(_) | Error::GraphCycle { .. } => "graph",
            Error::NonFiniteGradient(_) | Error::Diverged { .. } => "diverged",
            Error::InvalidConfig(_) => "config",
            Error::Placement { .. } => "placement",
            Error::Format { .. } => "format",
            Error::TrackRow { .. } => "tracks",
            Error::Io { .. } | Error::Stream(_) => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

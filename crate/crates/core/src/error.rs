use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { id: usize, num_nodes: usize },

    #[error("node {0} appears in more than one split")]
    DuplicateSplit(usize),

    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("feature matrix has {rows} rows but graph has {num_nodes} nodes")]
    FeatureRows { rows: usize, num_nodes: usize },

    #[error("label vector has length {len} but graph has {num_nodes} nodes")]
    LabelCount { len: usize, num_nodes: usize },

    #[error("edge ({0}, {1}) does not exist")]
    MissingEdge(usize, usize),

    #[error("edge ({0}, {1}) already exists")]
    EdgeExists(usize, usize),

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("node set is empty")]
    EmptyNodeSet,

    #[error("worker {0} has an empty training pool")]
    EmptyPool(usize),

    #[error("distribution is empty")]
    EmptyDistribution,

    #[error("node {0} has no partition assignment")]
    MissingAssignment(usize),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-provided configuration rather than a
    /// runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidProbability { .. } | Error::InvalidArgument(_)
        )
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {actual} values, grid expects {expected}")]
    FieldLength { expected: usize, actual: usize },

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("boundary condition violated at node {node}: {what}")]
    BoundaryCondition { node: usize, what: &'static str },

    #[error("invalid continuation schedule: {0}")]
    InvalidSchedule(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid scenario parameter: {0}")]
    InvalidScenario(String),

    #[error("unknown test vector field `{0}`")]
    UnknownTestField(String),

    #[error("segment ({a}, {b}) x {{{y}}} lies outside the domain")]
    SegmentOutsideDomain { a: f64, b: f64, y: f64 },

    #[error("strip exits the domain: {0}")]
    StripOutsideDomain(String),

    #[error("test function must vanish on the boundary (node {node} has {value})")]
    TestFunctionNotZeroOnBoundary { node: usize, value: f64 },

    #[error("flow map left the domain at ({x}, {y})")]
    FlowLeftDomain { x: f64, y: f64 },

    #[error("block count must be at least 1")]
    InvalidBlockCount,

    #[error("profile half-width {half_width} is below 5 eps = {min}; truncation error exceeds 1%")]
    ProfileTruncated { half_width: f64, min: f64 },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("corrupt state dump: {0}")]
    CorruptDump(String),

    #[error("state dump truncated or oversized: expected {expected} bytes, found {actual}")]
    DumpSize { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

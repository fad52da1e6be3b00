use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unreadable file {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("zero-dimension image")]
    ZeroDimension,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown thinning method {0:?}")]
    UnknownMethod(String),
    #[error("degenerate drawing")]
    DegenerateDrawing,
    #[error("ground truth raster is {gt_w}x{gt_h}, drawing is {w}x{h}")]
    DimensionMismatch {
        w: u32,
        h: u32,
        gt_w: u32,
        gt_h: u32,
    },
    #[error("no ground-truth votes for nodes {0:?}")]
    NoVotes(Vec<usize>),
    #[error("malformed graph file: {0}")]
    MalformedGraph(String),
    #[error("empty graph")]
    EmptyGraph,
    #[error("version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("class count mismatch: model has {model}, graph scheme has {graph}")]
    ClassCountMismatch { model: usize, graph: usize },
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing forward cache")]
    MissingCache,
    #[error("empty input")]
    EmptyInput,
    #[error("all-zero confusion matrix")]
    ZeroConfusion,
    #[error("geometry overflow: {0}")]
    GeometryOverflow(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

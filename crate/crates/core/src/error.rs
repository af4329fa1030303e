use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("numerical failure at epoch {epoch}: {reason}")]
    Numerical { epoch: usize, reason: String },

    #[error("degenerate clustering: {distinct} distinct vectors for {k} clusters")]
    DegenerateClustering { distinct: usize, k: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("{path}: {source}")]
    File { path: String, source: io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Attaches the path to a bare IO error.
    pub fn at_path(self, path: &std::path::Path) -> Self {
        match self {
            Error::Io(source) => Error::File {
                path: path.display().to_string(),
                source,
            },
            other => other,
        }
    }

    /// Short stable tag, used for machine-parseable CLI errors and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::Numerical { .. } => "numerical",
            Error::DegenerateClustering { .. } => "degenerate_clustering",
            Error::Invariant(_) => "invariant",
            Error::Config { .. } => "config",
            Error::Format(_) => "format",
            Error::Version { .. } => "version",
            Error::Io(_) | Error::File { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid link record: {0}")]
    InvalidLink(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("link has no paths to encode")]
    EmptyLink,

    #[error("link has {0} paths; keep the 25 earliest before encoding")]
    TooManyPaths(usize),

    #[error("feature `{0}` is constant over the dataset")]
    DegenerateFeature(&'static str),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: u64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("unsupported {what} format version {found}")]
    Version { what: &'static str, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl ToString) -> Self {
        Error::Format {
            what,
            detail: detail.to_string(),
        }
    }
}

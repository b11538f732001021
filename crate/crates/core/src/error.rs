use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index:?} lies outside the box with caps {caps:?}")]
    OutOfBox { index: Vec<i64>, caps: Vec<usize> },

    #[error("interior is empty: shifting caps {caps:?} by {m} in directions {directions:?}")]
    EmptyInterior {
        caps: Vec<usize>,
        m: usize,
        directions: Vec<usize>,
    },

    #[error("duplicate coefficient at frequency {0:?}")]
    DuplicateIndex(Vec<i64>),

    #[error("grid of size {grid} along axis {axis} aliases a frequency span of {span}")]
    Aliasing { axis: usize, grid: usize, span: usize },

    #[error("Blaschke parameter must satisfy |a| < 1, got |a| = {0}")]
    BlaschkeParameter(f64),

    #[error("symbol is not analytic: coefficient at {0:?} has a negative frequency")]
    NotAnalytic(Vec<i64>),

    #[error("symbol failed the inner certificate: deviation {deviation:e} exceeds {allowed:e}")]
    NotInner { deviation: f64, allowed: f64 },

    #[error("layer index m = {m} is outside 0..={max}")]
    LayerOutOfRange { m: usize, max: usize },

    #[error("operator structure mismatch: {0}")]
    Structure(String),

    #[error("basis columns are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("malformed input in field `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

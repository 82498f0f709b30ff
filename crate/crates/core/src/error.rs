use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unphysical source{}: v_min * v_max = {product} < 1", .index.map(|i| format!(" {}", i + 1)).unwrap_or_default())]
    UnphysicalSource { index: Option<usize>, product: f64 },

    /// The separability program could not be decided at some scale `x`; the
    /// true optimum lies somewhere in `[x_low, x_high]`.
    #[error("indeterminate feasibility for x in [{x_low}, {x_high}] (achieved margin {margin:e})")]
    Indeterminate { x_low: f64, x_high: f64, margin: f64 },

    #[error("search exhausted after {draws} draws without a bound entangled seed")]
    SearchExhausted { draws: u64 },

    #[error("unidentifiable model: unconstrained entries {}", .0.join(", "))]
    Unidentifiable(Vec<String>),

    #[error("format error in field `{field}`: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format { field: field.into(), message: message.into() }
    }
}

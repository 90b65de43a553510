use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("non-symmetric slice {slice}: asymmetry {asymmetry:e}")]
    NotSymmetric { slice: usize, asymmetry: f64 },
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    Unstable { dt: f64, bound: f64 },
    #[error("immersion lost at t = {t}: {detail}")]
    Immersion { t: f64, detail: String },
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { op, detail: detail.into() }
}

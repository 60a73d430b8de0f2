use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid [{x_min}, {x_max}] does not span the box [0, {length}]")]
    DomainMismatch { x_min: f64, x_max: f64, length: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("comparison refused: {0}")]
    ConfigMismatch(String),

    #[error("density must be strictly positive (found {value} at index {index})")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("need at least {needed} time samples, got {got}")]
    Arity { needed: usize, got: usize },

    #[error("spectral resolution insufficient: norm drifted by {drift:.3e}")]
    SpectralResolution { drift: f64 },

    #[error("wavepackets not yet separated: {0}")]
    NotAsymptotic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

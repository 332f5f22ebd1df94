use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter is out of range; carries the parameter name.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A configuration entry could not be used; carries the key.
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Evaluation requested outside the sampled domain. Paths are never extrapolated.
    #[error("point {x} lies outside the sampled domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("grids are not aligned: {0}")]
    MisalignedGrid(String),

    /// Circulant embedding produced too much negative spectral mass.
    #[error("circulant embedding failed: clipped spectral mass {clipped:e} of total {total:e}")]
    EmbeddingFailure { clipped: f64, total: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Whether this error stems from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EmbeddingFailure { .. } | Error::Numerical(_) | Error::OutOfDomain { .. }
        )
    }
}

pub(crate) fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "H",
            format!("Hurst index must lie in (0,1), got {h}"),
        ))
    }
}

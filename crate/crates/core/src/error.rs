use thiserror::Error;

/// Errors reported by every numerical routine in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("{func} did not converge after {terms} terms (last relative change {last_rel:e})")]
    NonConvergence {
        func: &'static str,
        terms: usize,
        last_rel: f64,
    },

    #[error("quadrature did not reach tolerance: estimate {value:e}, error estimate {abs_error:e}")]
    Quadrature { value: f64, abs_error: f64 },

    #[error("density came out negative ({value:e}) beyond the clamping band {band:e}")]
    NegativeDensity { value: f64, band: f64 },

    #[error("insufficient samples: {found} in selection, at least {required} required")]
    InsufficientSamples { found: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { func, msg: msg.into() }
}

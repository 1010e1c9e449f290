use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimator, oracle and file loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {value} ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("unsupported expansion order {0} (supported: 0, 2, 4)")]
    UnsupportedOrder(u32),

    #[error("integrand has non-negligible imaginary part {imag:e} (real part {real:e})")]
    ComplexResidue { real: f64, imag: f64 },

    #[error("total photon number {photons} exceeds the exact-oracle budget of {limit}")]
    ResourceLimit { photons: usize, limit: usize },

    #[error("malformed unitary file: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain { name, value, expected }
}

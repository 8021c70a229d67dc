use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("beam grid needs K >= N_a (got K = {k}, N_a = {n})")]
    GridTooCoarse { n: usize, k: usize },

    #[error("closed-form grid results assume half-wavelength spacing (got {0} wavelengths)")]
    UnsupportedSpacing(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("{irs} IRS links need at least as many RF chains (have {rf_chains})")]
    TooFewRfChains { irs: usize, rf_chains: usize },

    #[error("missing estimate for IRS {0}")]
    MissingEstimate(usize),

    #[error("all channel gains are zero")]
    AllGainsZero,

    #[error("config error: {0}")]
    Config(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

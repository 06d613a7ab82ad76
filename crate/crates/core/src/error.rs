use thiserror::Error;

/// Errors raised by the exact and numerical cores.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial degree {0} is below 2")]
    DegreeTooSmall(usize),

    #[error("predicted degree {predicted} exceeds the configured cap {cap}")]
    DegreeCapExceeded { predicted: u128, cap: u128 },

    #[error("family is not in normal form: {0}")]
    NotNormalForm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hypothesis not satisfied: {0}")]
    HypothesisFailed(String),

    #[error("the scaling c_d^(-1/(d-1)) has no real value for leading coefficient {0}")]
    NonRealScaling(String),

    #[error("point lies outside the certified domain: {0}")]
    OutsideCertifiedDomain(String),

    #[error("root refinement did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize },

    #[error("p-adic orbit undecided at precision {precision}")]
    PAdicUndecided { precision: i64 },

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the covariance, estimator, lattice and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("power profile is not finite at x = {x} (value {value})")]
    NonFiniteProfile { x: f64, value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dense materialization of {rows} rows exceeds the cap of {cap} rows")]
    MaterializationCap { rows: usize, cap: usize },

    #[error("reference matrix has zero Frobenius norm")]
    ZeroNorm,

    #[error("linear system is numerically singular ({context})")]
    Singular { context: &'static str },

    #[error("degenerate lattice: {found} distinct residues on the grid, expected {expected}")]
    DegenerateLattice { expected: usize, found: usize },

    #[error("factor is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

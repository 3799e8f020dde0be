//! LMMSE pilot-pattern design for OFDM over doubly dispersive channels.
//!
//! The crate builds the separable channel covariance `C_g = γ (C_ν ⊗ C_τ)`,
//! approximates each Toeplitz factor by a truncated DFT eigenbasis, evaluates
//! exact and approximate LMMSE error covariances, and designs lattice pilot
//! patterns whose approximate error attains the closed-form lower bound
//! `D / (TF/S₀ + β/(M σ_n²))`.
//!
//! Module map:
//! - [`covariance`]: grid/channel types, Toeplitz factors, Kronecker assembly,
//!   DFT diagonalization.
//! - [`estimator`]: pilot patterns, LMMSE estimate, exact and approximate
//!   error covariances, Gram matrix.
//! - [`lattice`]: sampling-matrix pilot lattices, feasibility checks, the
//!   lower bound, sublattice search.
//! - [`montecarlo`]: channel sampling and empirical MSE.
//! - [`sweeps`]: approximation-error sweeps over dimension and spread.

pub mod covariance;
pub mod error;
pub mod estimator;
pub mod lattice;
mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod sweeps;

pub use covariance::{
    ChannelProfile, Domain, GridConfig, HermitianToeplitz, KroneckerCovariance, PowerProfile,
    TruncatedDftFactor,
};
pub use error::{Error, Result};
pub use estimator::{ErrorReport, NoiseDataStats, PilotPattern};
pub use lattice::{FeasibilityRegion, LatticeSpec, RegionBoundary};

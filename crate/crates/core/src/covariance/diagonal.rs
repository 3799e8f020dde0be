//! Truncated DFT diagonalization of sinc-generated Toeplitz factors.
//!
//! A Toeplitz factor generated by `sinc(k p)` has the rectangular spectral
//! density `f(ω) = rect(ω / 2πp) / p`. For large dimensions its eigenvectors
//! approach DFT vectors and its eigenvalues approach samples of `f`, so the
//! factor is approximated by `Fᴴ Λ F` with `F` keeping only the `r` DFT rows
//! whose frequencies fall inside the spectral support.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{ChannelProfile, Domain, GridConfig, HermitianToeplitz};
use crate::error::{Error, Result};

/// `rect(u)`: 1 for `|u| ≤ 1/2` (closed at the edge), else 0.
pub fn rect(u: f64) -> f64 {
    if u.abs() <= 0.5 + 1e-12 {
        1.0
    } else {
        0.0
    }
}

/// Spectral density of the normalized sinc sequence `sinc(k · product)`.
pub fn spectral_density(product: f64, omega: f64) -> f64 {
    rect(omega / (2.0 * PI * product)) / product
}

/// [`spectral_density`] for one domain of a channel on a grid.
pub fn channel_spectral_density(
    profile: &ChannelProfile,
    grid: &GridConfig,
    domain: Domain,
    omega: f64,
) -> Result<f64> {
    if !(-PI..=PI).contains(&omega) {
        return Err(Error::invalid("omega", "must lie in [-pi, pi]"));
    }
    Ok(spectral_density(profile.normalized_spread(grid, domain), omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankChoice {
    pub rank: usize,
    /// The ceiling was even and was bumped to the next odd integer.
    pub raised_to_odd: bool,
    /// `dim · S · spread` reached the dimension; rank clamped to the largest odd `≤ dim`.
    pub full_rank_regime: bool,
}

/// Odd truncation rank `⌈dim · S · spread⌉`, rounded up to odd and clamped to `dim`.
///
/// `product` is `dim · S · spread`.
pub fn truncation_rank(dim: usize, product: f64) -> Result<RankChoice> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    if !(product.is_finite() && product > 0.0) {
        return Err(Error::invalid("product", "must be positive and finite"));
    }
    let largest_odd = if dim % 2 == 1 { dim } else { dim - 1 };
    // absorb rounding noise such as 16 * (3/16) = 3.0000000000000004
    let mut rank = (product - 1e-9 * product.max(1.0)).ceil().max(1.0) as usize;
    let mut raised_to_odd = false;
    if rank % 2 == 0 {
        rank += 1;
        raised_to_odd = true;
    }
    if rank > dim || product >= dim as f64 {
        return Ok(RankChoice {
            rank: largest_odd,
            raised_to_odd,
            full_rank_regime: true,
        });
    }
    Ok(RankChoice {
        rank,
        raised_to_odd,
        full_rank_regime: false,
    })
}

/// Rank-`r` DFT approximation `Fᴴ Diag(λ) F` of one covariance factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDftFactor {
    dim: usize,
    frequencies: Vec<i64>,
    basis: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
}

impl TruncatedDftFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.frequencies.len()
    }

    /// DFT frequency index of each basis row, `(1-r)/2 ..= (r-1)/2`.
    pub fn frequencies(&self) -> &[i64] {
        &self.frequencies
    }

    /// `r × dim`; row `i` is `conj(f_k) / √dim` for `k = frequencies[i]`.
    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.basis.clone();
        for (mut row, &l) in scaled.row_iter_mut().zip(&self.eigenvalues) {
            row *= Complex64::new(l, 0.0);
        }
        self.basis.adjoint() * scaled
    }

    /// `max |F Fᴴ - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = &self.basis * self.basis.adjoint();
        let r = self.rank();
        (0..r)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (g[(i, j)] - Complex64::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the truncated DFT approximation of `factor`.
///
/// `product` is `S · spread` of the factor's domain (`F τ_D` or `T ν_D`).
/// Eigenvalues are `gen[0] · f(2πk/dim)`, i.e. the spectral density samples
/// for a normalized factor.
pub fn dft_diagonalize(
    factor: &HermitianToeplitz,
    rank: usize,
    product: f64,
) -> Result<TruncatedDftFactor> {
    let dim = factor.dim();
    if rank % 2 == 0 || rank == 0 {
        return Err(Error::invalid("rank", "truncation rank must be odd"));
    }
    if rank > dim {
        return Err(Error::invalid("rank", format!("rank {rank} exceeds dimension {dim}")));
    }
    if !(product.is_finite() && product > 0.0) {
        return Err(Error::invalid("product", "must be positive and finite"));
    }
    let half = (rank as i64 - 1) / 2;
    let frequencies: Vec<i64> = (-half..=half).collect();
    let norm = 1.0 / (dim as f64).sqrt();
    let basis = DMatrix::from_fn(rank, dim, |i, m| {
        let k = frequencies[i];
        // reduce k·m modulo dim before forming the angle
        let phase = ((k * m as i64).rem_euclid(dim as i64)) as f64 / dim as f64;
        Complex64::cis(-2.0 * PI * phase) * norm
    });
    let amplitude = factor.generator()[0].re;
    let eigenvalues = frequencies
        .iter()
        .map(|&k| {
            // u = ω / (2π p) with ω = 2πk/dim
            amplitude * rect(k as f64 / (dim as f64 * product)) / product
        })
        .collect();
    Ok(TruncatedDftFactor {
        dim,
        frequencies,
        basis,
        eigenvalues,
    })
}

/// `‖A - A_approx‖_F / ‖A‖_F`.
pub fn rel_fro_error(a: &DMatrix<Complex64>, approx: &DMatrix<Complex64>) -> Result<f64> {
    if a.shape() != approx.shape() {
        return Err(Error::DimensionMismatch {
            context: "rel_fro_error",
            expected: a.len(),
            found: approx.len(),
        });
    }
    let denom = a.norm();
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((a - approx).norm() / denom)
}

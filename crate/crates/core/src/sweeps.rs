//! Approximation-error sweeps: DFT diagonalization error against dimension,
//! and zero-th order integration error against the spread factor `Δ_D`.

use serde::{Deserialize, Serialize};

use crate::covariance::{
    build_factor_sinc, dft_diagonalize, rel_fro_error, truncation_rank, ChannelProfile, Domain,
    GridConfig, HermitianToeplitz, KroneckerCovariance, PowerProfile,
};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizationPoint {
    pub dim: usize,
    pub spread_product: f64,
    pub rank: usize,
    pub rel_error: f64,
}

/// Relative F-norm error of the rank-`⌈dim·p⌉` DFT approximation of the
/// normalized sinc Toeplitz matrix with spread product `p`.
pub fn diagonalization_error(dim: usize, spread_product: f64) -> Result<DiagonalizationPoint> {
    if !(spread_product > 0.0 && spread_product <= 1.0) {
        return Err(Error::invalid("spread_product", "must lie in (0, 1]"));
    }
    let rank = truncation_rank(dim, dim as f64 * spread_product)?.rank;
    let s = HermitianToeplitz::sinc(dim, spread_product);
    let approx = dft_diagonalize(&s, rank, spread_product)?.reconstruct();
    Ok(DiagonalizationPoint {
        dim,
        spread_product,
        rank,
        rel_error: rel_fro_error(&s.to_dense(), &approx)?,
    })
}

pub fn diagonalization_sweep(dims: &[usize], spread_product: f64) -> Result<Vec<DiagonalizationPoint>> {
    if dims.is_empty() {
        return Err(Error::invalid("dims", "sweep list is empty"));
    }
    dims.iter().map(|&d| diagonalization_error(d, spread_product)).collect()
}

/// Relative F-norm error between the integrated covariance and the zero-th
/// order sinc covariance `P_τ(0)τ_D sinc(·) ⊗ P_ν(0)ν_D sinc(·)`.
pub fn integration_error(
    profile: &ChannelProfile,
    grid: &GridConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let exact = KroneckerCovariance::exact_model(profile, grid, quad)?;
    let approx = KroneckerCovariance::new(
        build_factor_sinc(profile, grid, Domain::Doppler),
        build_factor_sinc(profile, grid, Domain::Delay),
        1.0,
    )?;
    exact.rel_fro_error(&approx)
}

/// Profile family used by [`spread_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepShape {
    Rectangular,
    /// Unit-peak triangles of fixed physical half-width `T` (delay) and `F`
    /// (Doppler), truncated to the support. The shape inside the support
    /// flattens as the spread shrinks.
    Triangular,
}

impl SweepShape {
    /// Profile with `τ_D F = ν_D T = √(Δ_D · TF)`, so that `τ_D ν_D = Δ_D`.
    pub fn profile(self, grid: &GridConfig, delta_d: f64) -> Result<ChannelProfile> {
        if !(delta_d > 0.0 && delta_d < 1.0) {
            return Err(Error::invalid("delta_D", "must lie in (0, 1)"));
        }
        let c = (delta_d * grid.tf()).sqrt();
        let (tau_d, nu_d) = (c / grid.f(), c / grid.t());
        match self {
            SweepShape::Rectangular => ChannelProfile::rectangular(tau_d, nu_d, 1.0),
            SweepShape::Triangular => ChannelProfile::new(
                tau_d,
                nu_d,
                PowerProfile::Triangular {
                    peak: 1.0,
                    half_width: Some(grid.t()),
                },
                PowerProfile::Triangular {
                    peak: 1.0,
                    half_width: Some(grid.f()),
                },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadPoint {
    pub delta_d: f64,
    pub rel_error: f64,
}

pub fn spread_sweep(
    grid: &GridConfig,
    shape: SweepShape,
    deltas: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<SpreadPoint>> {
    if deltas.is_empty() {
        return Err(Error::invalid("delta_D", "sweep list is empty"));
    }
    deltas
        .iter()
        .map(|&delta_d| {
            let profile = shape.profile(grid, delta_d)?;
            Ok(SpreadPoint {
                delta_d,
                rel_error: integration_error(&profile, grid, quad)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support_product_is_circulant_exact_for_unit_spread() {
        // p = 1 gives the identity, which the full-rank DFT basis reproduces
        let pt = diagonalization_error(9, 1.0).unwrap();
        assert_eq!(pt.rank, 9);
        assert!(pt.rel_error < 1e-12);
    }

    #[test]
    fn larger_dimension_improves_on_smallest() {
        let p = 1.0 / 32.0;
        let e32 = diagonalization_error(32, p).unwrap().rel_error;
        let e256 = diagonalization_error(256, p).unwrap().rel_error;
        assert!(e256 < e32, "{e256} vs {e32}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(diagonalization_error(16, 0.0).is_err());
        assert!(diagonalization_sweep(&[], 0.1).is_err());
        let g = GridConfig::new(8, 8, 1.0, 1.0).unwrap();
        assert!(SweepShape::Rectangular.profile(&g, 1.5).is_err());
        assert!(spread_sweep(&g, SweepShape::Rectangular, &[], &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn sweep_profile_has_requested_spread() {
        let g = GridConfig::new(8, 8, 1.07e-4, 1e4).unwrap();
        for shape in [SweepShape::Rectangular, SweepShape::Triangular] {
            let p = shape.profile(&g, 1e-3).unwrap();
            assert!((p.spread_factor() / 1e-3 - 1.0).abs() < 1e-12);
            assert!((p.tau_d() * g.f() - p.nu_d() * g.t()).abs() < 1e-15);
        }
    }

    #[test]
    fn rectangular_integration_is_exact() {
        let g = GridConfig::new(16, 8, 1.07e-4, 1e4).unwrap();
        let pts = spread_sweep(&g, SweepShape::Rectangular, &[1e-4, 1e-2], &QuadratureSpec::default()).unwrap();
        assert!(pts.iter().all(|p| p.rel_error < 1e-8), "{pts:?}");
    }
}

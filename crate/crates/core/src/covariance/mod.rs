//! Channel covariance construction: separable Toeplitz factors, their
//! Kronecker assembly, and the truncated DFT diagonalization.
//!
//! With column-major vectorization `k = n·M + m` the channel covariance is
//! `C_g = scale · (C_ν ⊗ C_τ)`, where the delay factor `C_τ` (M × M) and the
//! Doppler factor `C_ν` (N × N) are Hermitian Toeplitz.

mod diagonal;
mod profile;
mod toeplitz;

pub use diagonal::{
    channel_spectral_density, dft_diagonalize, rect, rel_fro_error, spectral_density,
    truncation_rank, RankChoice, TruncatedDftFactor,
};
pub use profile::{ChannelProfile, PowerProfile};
pub use toeplitz::{sinc, HermitianToeplitz};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_vector, QuadratureSpec};

/// Default limit on the number of rows of any dense `MN × MN` matrix.
pub const DEFAULT_MATERIALIZATION_CAP: usize = 1 << 16;

/// Time-frequency grid: `M` subcarriers spaced `F` apart, `N` symbols of duration `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    m: usize,
    n: usize,
    t: f64,
    f: f64,
}

impl GridConfig {
    pub fn new(m: usize, n: usize, t: f64, f: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("M", "must be at least 1"));
        }
        if n == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("T", "symbol duration must be positive"));
        }
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::invalid("F", "subcarrier spacing must be positive"));
        }
        if t * f < 1.0 - 1e-12 {
            return Err(Error::invalid("TF", format!("TF = {} is below 1", t * f)));
        }
        Ok(GridConfig { m, n, t, f })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn tf(&self) -> f64 {
        self.t * self.f
    }

    /// `MN`, the length of the vectorized grid.
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lag step of the domain's phase: `F` for delay, `T` for Doppler.
    pub fn step(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Delay => self.f,
            Domain::Doppler => self.t,
        }
    }

    pub fn dim(&self, domain: Domain) -> usize {
        match domain {
            Domain::Delay => self.m,
            Domain::Doppler => self.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Delay,
    Doppler,
}

impl Domain {
    /// The delay factor integrates `e^{-j2πkFτ}`, the Doppler factor `e^{+j2πkTν}`.
    fn phase_sign(self) -> f64 {
        match self {
            Domain::Delay => -1.0,
            Domain::Doppler => 1.0,
        }
    }
}

/// A factor computed by quadrature, with convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFactor {
    pub factor: HermitianToeplitz,
    pub nodes: usize,
    pub rel_change: f64,
    /// `false` when the node budget ran out before the tolerance was met.
    pub converged: bool,
}

/// `gen[k] = ∫ P(x) e^{∓j2πkSx} dx` over the support, by composite Gauss–Legendre.
pub fn build_factor_exact(
    profile: &ChannelProfile,
    grid: &GridConfig,
    domain: Domain,
    quad: &QuadratureSpec,
) -> Result<ExactFactor> {
    let dim = grid.dim(domain);
    let spread = profile.spread(domain);
    let step = grid.step(domain);
    let shape = profile.power_profile(domain);
    let sign = domain.phase_sign();
    let breaks = shape.breakpoints(spread);
    let integral = integrate_vector(&breaks, dim, quad, |x, out| {
        let p = shape.eval(x, spread);
        if !p.is_finite() {
            return Err(Error::NonFiniteProfile { x, value: p });
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = Complex64::cis(sign * 2.0 * PI * k as f64 * step * x) * p;
        }
        Ok(())
    })?;
    Ok(ExactFactor {
        factor: HermitianToeplitz::new(integral.values)?,
        nodes: integral.nodes,
        rel_change: integral.rel_change,
        converged: integral.converged,
    })
}

/// Zero-th order factor `gen[k] = P(0) · spread · sinc(k · S · spread)`.
pub fn build_factor_sinc(
    profile: &ChannelProfile,
    grid: &GridConfig,
    domain: Domain,
) -> HermitianToeplitz {
    let spread = profile.spread(domain);
    let amplitude = profile.power_profile(domain).at_origin(spread) * spread;
    let product = profile.normalized_spread(grid, domain);
    HermitianToeplitz::sinc(grid.dim(domain), product).scaled(amplitude)
}

/// Lazy `scale · (C_ν ⊗ C_τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerCovariance {
    doppler: HermitianToeplitz,
    delay: HermitianToeplitz,
    scale: f64,
}

impl KroneckerCovariance {
    pub fn new(c_nu: HermitianToeplitz, c_tau: HermitianToeplitz, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::invalid("scale", "must be finite and non-negative"));
        }
        Ok(KroneckerCovariance {
            doppler: c_nu,
            delay: c_tau,
            scale,
        })
    }

    /// `γ (S_ν ⊗ S_τ)` with normalized sinc factors and `γ = S_0 τ_D ν_D`.
    pub fn sinc_model(profile: &ChannelProfile, grid: &GridConfig) -> Self {
        KroneckerCovariance {
            doppler: HermitianToeplitz::sinc(grid.n(), profile.normalized_spread(grid, Domain::Doppler)),
            delay: HermitianToeplitz::sinc(grid.m(), profile.normalized_spread(grid, Domain::Delay)),
            scale: profile.gamma(),
        }
    }

    /// `C_ν ⊗ C_τ` with both factors integrated from the profiles.
    pub fn exact_model(
        profile: &ChannelProfile,
        grid: &GridConfig,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let c_nu = build_factor_exact(profile, grid, Domain::Doppler, quad)?.factor;
        let c_tau = build_factor_exact(profile, grid, Domain::Delay, quad)?.factor;
        Self::new(c_nu, c_tau, 1.0)
    }

    pub fn doppler_factor(&self) -> &HermitianToeplitz {
        &self.doppler
    }

    pub fn delay_factor(&self) -> &HermitianToeplitz {
        &self.delay
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn m(&self) -> usize {
        self.delay.dim()
    }

    pub fn n(&self) -> usize {
        self.doppler.dim()
    }

    pub fn len(&self) -> usize {
        self.m() * self.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entry `(k, l)` with `k = n1·M + m1`, `l = n2·M + m2`.
    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        let m = self.m();
        let (n1, m1) = (k / m, k % m);
        let (n2, m2) = (l / m, l % m);
        self.doppler.entry(n1, n2) * self.delay.entry(m1, m2) * self.scale
    }

    pub fn trace(&self) -> f64 {
        self.scale
            * self.n() as f64
            * self.doppler.generator()[0].re
            * self.m() as f64
            * self.delay.generator()[0].re
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_cap(DEFAULT_MATERIALIZATION_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        let rows = self.len();
        if rows > cap {
            return Err(Error::MaterializationCap { rows, cap });
        }
        Ok(DMatrix::from_fn(rows, rows, |k, l| self.entry(k, l)))
    }

    /// Dense submatrix `C_g[rows, cols]`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entry(rows[i], cols[j]))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.scale * self.scale * self.doppler.frobenius_norm_sq() * self.delay.frobenius_norm_sq()
    }

    /// `‖self - approx‖_F / ‖self‖_F` from factor inner products, without
    /// materializing either matrix.
    ///
    /// With `X = sA`, `Y = s'C` the difference is expanded as
    /// `(X - Y) ⊗ B + Y ⊗ (B - D)`, so small errors do not cancel.
    pub fn rel_fro_error(&self, approx: &Self) -> Result<f64> {
        let a = self.frobenius_norm_sq();
        if a == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let x = self.doppler.scaled(self.scale);
        let y = approx.doppler.scaled(approx.scale);
        let dx = x.difference(&y)?;
        let dd = self.delay.difference(&approx.delay)?;
        let b = &self.delay;
        let cross = dx.frobenius_inner(&y)? * b.frobenius_inner(&dd)?;
        let diff = dx.frobenius_norm_sq() * b.frobenius_norm_sq()
            + y.frobenius_norm_sq() * dd.frobenius_norm_sq()
            + 2.0 * cross.re;
        Ok((diff.max(0.0) / a).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridConfig {
        GridConfig::new(8, 4, 1.07e-4, 1e4).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridConfig::new(0, 4, 1.0, 1.0).is_err());
        assert!(GridConfig::new(4, 4, 1.0, 0.5).is_err());
        assert!(GridConfig::new(4, 4, -1.0, 1.0).is_err());
        let g = grid();
        assert_eq!(g.len(), 32);
        assert!((g.tf() - 1.07).abs() < 1e-12);
    }

    #[test]
    fn sinc_factor_examples() {
        let g = grid();
        // F τ_D = 0.25 so lag 4 hits the first zero crossing
        let ch = ChannelProfile::new(
            0.25 / g.f(),
            0.1 / g.t(),
            PowerProfile::Rectangular { level: 3.0 },
            PowerProfile::Rectangular { level: 1.0 },
        )
        .unwrap();
        let c_tau = build_factor_sinc(&ch, &g, Domain::Delay);
        assert_eq!(c_tau.generator()[0].re, 3.0 * ch.tau_d());
        assert_eq!(c_tau.generator()[4].re, 0.0);
        assert!((c_tau.generator()[1].re - 3.0 * ch.tau_d() * sinc(0.25)).abs() < 1e-18);
    }

    #[test]
    fn kronecker_entry_matches_dense_and_hand_oracle() {
        let c_nu = HermitianToeplitz::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.2)]).unwrap();
        let c_tau = HermitianToeplitz::new(vec![Complex64::new(2.0, 0.0), Complex64::new(-0.5, 0.1)]).unwrap();
        let kc = KroneckerCovariance::new(c_nu.clone(), c_tau.clone(), 1.5).unwrap();
        let dense = kc.to_dense().unwrap();
        let (a, b) = (c_nu.to_dense(), c_tau.to_dense());
        // textbook block layout: block (i, j) is a[i, j] · b
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let want = a[(i, j)] * b[(p, q)] * 1.5;
                        assert!((dense[(2 * i + p, 2 * j + q)] - want).norm() < 1e-15);
                    }
                }
            }
        }
        assert!((kc.trace() - 1.5 * 2.0 * 1.0 * 2.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn kronecker_index_sweep_on_3x2_grid() {
        let c_nu = HermitianToeplitz::from_real(&[1.0, 0.4]).unwrap();
        let c_tau = HermitianToeplitz::from_real(&[1.0, 0.5, 0.2]).unwrap();
        let kc = KroneckerCovariance::new(c_nu.clone(), c_tau.clone(), 1.0).unwrap();
        let dense = kc.to_dense().unwrap();
        for n1 in 0..2 {
            for m1 in 0..3 {
                for n2 in 0..2 {
                    for m2 in 0..3 {
                        let want = c_nu.entry(n1, n2) * c_tau.entry(m1, m2);
                        assert_eq!(dense[(n1 * 3 + m1, n2 * 3 + m2)], want);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_doppler_spread_limit_is_rank_one_in_time() {
        let g = grid();
        let ch = ChannelProfile::rectangular(0.1 / g.f(), 1e-12, 1.0).unwrap();
        let c_nu = HermitianToeplitz::sinc(g.n(), ch.normalized_spread(&g, Domain::Doppler));
        assert!(c_nu.generator().iter().all(|x| (x.re - 1.0).abs() < 1e-15));
        let ev = c_nu.eigenvalues();
        assert!((ev[g.n() - 1] - g.n() as f64).abs() < 1e-12);
        assert!(ev[..g.n() - 1].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn materialization_cap_is_enforced() {
        let kc = KroneckerCovariance::sinc_model(
            &ChannelProfile::rectangular(1e-6, 10.0, 1.0).unwrap(),
            &GridConfig::new(300, 300, 1.0, 1.0).unwrap(),
        );
        assert_eq!(
            kc.to_dense(),
            Err(Error::MaterializationCap {
                rows: 90_000,
                cap: DEFAULT_MATERIALIZATION_CAP
            })
        );
        assert!(kc.to_dense_with_cap(1000).is_err());
    }

    #[test]
    fn factored_rel_error_matches_dense() {
        let g = grid();
        let ch = ChannelProfile::new(
            0.3 / g.f(),
            0.2 / g.t(),
            PowerProfile::Triangular { peak: 1.0, half_width: None },
            PowerProfile::Rectangular { level: 2.0 },
        )
        .unwrap();
        let exact = KroneckerCovariance::exact_model(&ch, &g, &QuadratureSpec::default()).unwrap();
        let approx = KroneckerCovariance::new(
            build_factor_sinc(&ch, &g, Domain::Doppler),
            build_factor_sinc(&ch, &g, Domain::Delay),
            1.0,
        )
        .unwrap();
        let dense = rel_fro_error(&exact.to_dense().unwrap(), &approx.to_dense().unwrap()).unwrap();
        let fact = exact.rel_fro_error(&approx).unwrap();
        assert!((dense - fact).abs() < 1e-12, "{dense} vs {fact}");
        assert!(dense > 0.1);
    }
}

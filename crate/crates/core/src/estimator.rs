//! LMMSE channel estimation on the time-frequency grid.
//!
//! Observations follow `y = B g + n` with `B = Diag(x_p + x_d)`. The estimator
//! uses only the pilot part: `ĝ = C_g B_pᴴ C_y⁻¹ y`. Because `C_g B_pᴴ` has zero
//! columns at data positions and `C_y` is block diagonal between pilot and
//! data positions, data-position observations receive zero weight and the
//! data-interference term `σ_d² Diag(c_d) ⊙ C_g` never changes the estimate or
//! the error covariance. Everything below therefore works on the `K × K`
//! pilot block.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::covariance::{KroneckerCovariance, TruncatedDftFactor, DEFAULT_MATERIALIZATION_CAP};
use crate::error::{Error, Result};
use crate::lattice::mask_2dfft;
use crate::linalg::cholesky_with_jitter;

/// Binary pilot mask on an `M × N` grid with per-pilot power `σ_p²`.
///
/// Vectorization is column-major: grid cell `(m, n)` has index `n·M + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPattern {
    m: usize,
    n: usize,
    mask: Vec<bool>,
    pilots: Vec<usize>,
    sigma_p2: f64,
}

impl PilotPattern {
    pub fn from_mask(m: usize, n: usize, mask: Vec<bool>, sigma_p2: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("grid", "M and N must be positive"));
        }
        if mask.len() != m * n {
            return Err(Error::DimensionMismatch {
                context: "pilot mask",
                expected: m * n,
                found: mask.len(),
            });
        }
        if !(sigma_p2.is_finite() && sigma_p2 > 0.0) {
            return Err(Error::invalid("sigma_p2", "pilot power must be positive"));
        }
        let pilots = mask
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| p.then_some(k))
            .collect();
        Ok(PilotPattern {
            m,
            n,
            mask,
            pilots,
            sigma_p2,
        })
    }

    /// Pattern with pilots at the given `(m, n)` cells; duplicates are merged.
    pub fn from_positions(
        m: usize,
        n: usize,
        positions: &[(usize, usize)],
        sigma_p2: f64,
    ) -> Result<Self> {
        let mut mask = vec![false; m * n];
        for &(pm, pn) in positions {
            if pm >= m || pn >= n {
                return Err(Error::invalid(
                    "positions",
                    format!("({pm}, {pn}) lies outside the {m} x {n} grid"),
                ));
            }
            mask[pn * m + pm] = true;
        }
        Self::from_mask(m, n, mask, sigma_p2)
    }

    pub fn empty(m: usize, n: usize, sigma_p2: f64) -> Result<Self> {
        Self::from_mask(m, n, vec![false; m * n], sigma_p2)
    }

    pub fn full(m: usize, n: usize, sigma_p2: f64) -> Result<Self> {
        Self::from_mask(m, n, vec![true; m * n], sigma_p2)
    }

    /// Applies the power equality `K σ_p² = N β`.
    pub fn with_power_budget(mut self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", "power budget must be positive"));
        }
        if self.pilots.is_empty() {
            return Err(Error::invalid("beta", "cannot spread a power budget over zero pilots"));
        }
        self.sigma_p2 = self.n as f64 * beta / self.pilots.len() as f64;
        Ok(self)
    }

    pub fn with_sigma_p2(self, sigma_p2: f64) -> Result<Self> {
        Self::from_mask(self.m, self.n, self.mask, sigma_p2)
    }

    /// Copy with one more pilot at vectorized index `k`.
    pub fn with_pilot(&self, k: usize) -> Result<Self> {
        let mut mask = self.mask.clone();
        *mask.get_mut(k).ok_or_else(|| Error::invalid("k", "index outside the grid"))? = true;
        Self::from_mask(self.m, self.n, mask, self.sigma_p2)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `K`.
    pub fn pilot_count(&self) -> usize {
        self.pilots.len()
    }

    pub fn sigma_p2(&self) -> f64 {
        self.sigma_p2
    }

    /// Vectorized mask `c_p`.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `I_p`, ascending.
    pub fn pilot_indices(&self) -> &[usize] {
        &self.pilots
    }

    /// `I_d`, ascending.
    pub fn data_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.mask[k]).collect()
    }

    pub fn is_pilot(&self, m: usize, n: usize) -> bool {
        self.mask[n * self.m + m]
    }

    pub fn pilot_positions(&self) -> Vec<(usize, usize)> {
        self.pilots.iter().map(|&k| (k % self.m, k / self.m)).collect()
    }

    /// Pilot symbols on `I_p` with modulus `σ_p`.
    pub fn pilot_symbols(&self, phases: PilotPhases) -> Vec<Complex64> {
        let amp = self.sigma_p2.sqrt();
        match phases {
            PilotPhases::Ones => vec![Complex64::new(amp, 0.0); self.pilots.len()],
            PilotPhases::PseudoRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.pilots
                    .iter()
                    .map(|_| Complex64::from_polar(amp, 2.0 * PI * rng.random::<f64>()))
                    .collect()
            }
        }
    }
}

/// Phase convention for the constant-modulus pilot symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotPhases {
    #[default]
    Ones,
    PseudoRandom { seed: u64 },
}

/// Noise variance, data power and the average pilot power budget `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDataStats {
    pub sigma_n2: f64,
    pub sigma_d2: f64,
    pub beta: f64,
}

impl NoiseDataStats {
    pub fn new(sigma_n2: f64, sigma_d2: f64, beta: f64) -> Result<Self> {
        if !(sigma_n2.is_finite() && sigma_n2 > 0.0) {
            return Err(Error::invalid("sigma_n2", "noise variance must be positive"));
        }
        if !(sigma_d2.is_finite() && sigma_d2 >= 0.0) {
            return Err(Error::invalid("sigma_d2", "data power must be non-negative"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", "power budget must be positive"));
        }
        Ok(NoiseDataStats {
            sigma_n2,
            sigma_d2,
            beta,
        })
    }

    /// Pilot SNR `α = σ_p² / σ_n²`.
    pub fn alpha(&self, pattern: &PilotPattern) -> f64 {
        pattern.sigma_p2() / self.sigma_n2
    }
}

/// Error covariance summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub trace_mse: f64,
    /// `diag(C_e)` in vectorized order.
    pub per_symbol_mse: Vec<f64>,
    pub full: Option<DMatrix<Complex64>>,
}

fn check_shapes(pattern: &PilotPattern, cg: &KroneckerCovariance) -> Result<()> {
    if pattern.m() != cg.m() {
        return Err(Error::DimensionMismatch {
            context: "pattern M vs covariance",
            expected: cg.m(),
            found: pattern.m(),
        });
    }
    if pattern.n() != cg.n() {
        return Err(Error::DimensionMismatch {
            context: "pattern N vs covariance",
            expected: cg.n(),
            found: pattern.n(),
        });
    }
    Ok(())
}

/// Precomputed LMMSE gain `C_g B_pᴴ (B_p C_g B_pᴴ + σ_n² I)⁻¹` restricted to pilot columns.
#[derive(Debug, Clone)]
pub struct LmmseFilter {
    pilots: Vec<usize>,
    /// `MN × K`
    gain: DMatrix<Complex64>,
}

impl LmmseFilter {
    pub fn new(
        pattern: &PilotPattern,
        pilot_values: &[Complex64],
        cg: &KroneckerCovariance,
        stats: &NoiseDataStats,
    ) -> Result<Self> {
        check_shapes(pattern, cg)?;
        let pilots = pattern.pilot_indices().to_vec();
        if pilot_values.len() != pilots.len() {
            return Err(Error::DimensionMismatch {
                context: "pilot values",
                expected: pilots.len(),
                found: pilot_values.len(),
            });
        }
        let amp = pattern.sigma_p2().sqrt();
        if pilot_values
            .iter()
            .any(|x| (x.norm() - amp).abs() > 1e-9 * amp)
        {
            return Err(Error::invalid("pilots", "pilot symbols must have modulus sigma_p"));
        }
        let all: Vec<usize> = (0..cg.len()).collect();
        if pilots.is_empty() {
            return Ok(LmmseFilter {
                pilots,
                gain: DMatrix::zeros(cg.len(), 0),
            });
        }
        let c_pp = cg.select(&pilots, &pilots);
        let mut a = DMatrix::from_fn(pilots.len(), pilots.len(), |i, j| {
            pilot_values[i] * c_pp[(i, j)] * pilot_values[j].conj()
        });
        for i in 0..pilots.len() {
            a[(i, i)] += Complex64::new(stats.sigma_n2, 0.0);
        }
        let chol = cholesky_with_jitter(a, "pilot observation covariance")?;
        // A⁻¹ B_p C_g[P, :], whose adjoint is the gain
        let mut rhs = cg.select(&pilots, &all);
        for (mut row, x) in rhs.row_iter_mut().zip(pilot_values) {
            row *= *x;
        }
        let solved = chol.solve(&rhs);
        Ok(LmmseFilter {
            pilots,
            gain: solved.adjoint(),
        })
    }

    pub fn apply(&self, y: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if y.len() != self.gain.nrows() {
            return Err(Error::DimensionMismatch {
                context: "observation vector",
                expected: self.gain.nrows(),
                found: y.len(),
            });
        }
        let y_p = DVector::from_iterator(self.pilots.len(), self.pilots.iter().map(|&k| y[k]));
        Ok(&self.gain * y_p)
    }
}

/// `ĝ = C_g B_pᴴ C_y⁻¹ y`.
pub fn lmmse_estimate(
    y: &DVector<Complex64>,
    pattern: &PilotPattern,
    pilot_values: &[Complex64],
    cg: &KroneckerCovariance,
    stats: &NoiseDataStats,
) -> Result<DVector<Complex64>> {
    LmmseFilter::new(pattern, pilot_values, cg, stats)?.apply(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    /// Add `σ_d² Diag(c_d) ⊙ C_g` to `C_y`. It leaves `C_e` unchanged (see module docs).
    pub include_data_term: bool,
    /// Also return the dense `C_e`.
    pub keep_full: bool,
    pub materialization_cap: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            include_data_term: false,
            keep_full: false,
            materialization_cap: DEFAULT_MATERIALIZATION_CAP,
        }
    }
}

/// `C_e = C_g - C_g B_pᴴ (B_p C_g B_pᴴ + σ_n² I)⁻¹ B_p C_g`.
pub fn error_covariance_exact(
    pattern: &PilotPattern,
    cg: &KroneckerCovariance,
    stats: &NoiseDataStats,
    options: ExactOptions,
) -> Result<ErrorReport> {
    check_shapes(pattern, cg)?;
    let len = cg.len();
    if len > options.materialization_cap {
        return Err(Error::MaterializationCap {
            rows: len,
            cap: options.materialization_cap,
        });
    }
    let pilots = pattern.pilot_indices();
    let diag: Vec<f64> = (0..len).map(|k| cg.entry(k, k).re).collect();
    if pilots.is_empty() {
        let full = if options.keep_full { Some(cg.to_dense_with_cap(options.materialization_cap)?) } else { None };
        return Ok(ErrorReport {
            trace_mse: diag.iter().sum(),
            per_symbol_mse: diag,
            full,
        });
    }
    let all: Vec<usize> = (0..len).collect();
    let sp2 = pattern.sigma_p2();
    let mut a = cg.select(pilots, pilots) * Complex64::new(sp2, 0.0);
    for i in 0..pilots.len() {
        a[(i, i)] += Complex64::new(stats.sigma_n2, 0.0);
    }
    let chol = cholesky_with_jitter(a, "pilot observation covariance")?;
    // Z = L⁻¹ σ_p C_g[P, :] so that C_e = C_g - Zᴴ Z
    let mut z = cg.select(pilots, &all) * Complex64::new(sp2.sqrt(), 0.0);
    if !chol.l_dirty().solve_lower_triangular_mut(&mut z) {
        return Err(Error::Singular {
            context: "triangular solve",
        });
    }
    let per_symbol_mse: Vec<f64> = z
        .column_iter()
        .zip(&diag)
        .map(|(col, d)| d - col.norm_squared())
        .collect();
    let full = if options.keep_full {
        Some(cg.to_dense_with_cap(options.materialization_cap)? - z.adjoint() * &z)
    } else {
        None
    };
    Ok(ErrorReport {
        trace_mse: per_symbol_mse.iter().sum(),
        per_symbol_mse,
        full,
    })
}

/// `tr(C_e)` only, for grids too large for the per-symbol path.
///
/// Uses `tr(C_e) = tr(C_g) - σ_p² tr(A⁻¹ (C_g²)[P, P])` with `A = σ_p² C_g[P, P] + σ_n² I`
/// and `C_g² = scale² (C_ν² ⊗ C_τ²)`, so the cost is cubic in `K` only.
pub fn error_trace_exact(
    pattern: &PilotPattern,
    cg: &KroneckerCovariance,
    stats: &NoiseDataStats,
) -> Result<f64> {
    check_shapes(pattern, cg)?;
    let pilots = pattern.pilot_indices();
    let prior = cg.trace();
    if pilots.is_empty() {
        return Ok(prior);
    }
    let m = cg.m();
    let nu = cg.doppler_factor().to_dense();
    let tau = cg.delay_factor().to_dense();
    let nu_sq = &nu * &nu;
    let tau_sq = &tau * &tau;
    let s2 = cg.scale() * cg.scale();
    let q = DMatrix::from_fn(pilots.len(), pilots.len(), |i, j| {
        let (ki, kj) = (pilots[i], pilots[j]);
        nu_sq[(ki / m, kj / m)] * tau_sq[(ki % m, kj % m)] * s2
    });
    let sp2 = pattern.sigma_p2();
    let mut a = cg.select(pilots, pilots) * Complex64::new(sp2, 0.0);
    for i in 0..pilots.len() {
        a[(i, i)] += Complex64::new(stats.sigma_n2, 0.0);
    }
    let chol = cholesky_with_jitter(a, "pilot observation covariance")?;
    let solved = chol.solve(&q);
    let reduction: f64 = (0..pilots.len()).map(|i| solved[(i, i)].re).sum();
    Ok(prior - sp2 * reduction)
}

/// How [`gram_matrix_with`] evaluates `U Diag(c_p) Uᴴ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramMethod {
    /// Index lookup into the 2D-DFT of the mask.
    #[default]
    Fft,
    /// Direct sum over the grid using the DFT basis rows.
    Direct,
}

fn check_factors(
    pattern: &PilotPattern,
    dft_tau: &TruncatedDftFactor,
    dft_nu: &TruncatedDftFactor,
) -> Result<()> {
    if dft_tau.dim() != pattern.m() {
        return Err(Error::DimensionMismatch {
            context: "delay DFT factor",
            expected: pattern.m(),
            found: dft_tau.dim(),
        });
    }
    if dft_nu.dim() != pattern.n() {
        return Err(Error::DimensionMismatch {
            context: "Doppler DFT factor",
            expected: pattern.n(),
            found: dft_nu.dim(),
        });
    }
    Ok(())
}

/// `U Diag(c_p) Uᴴ` with `U = F_ν ⊗ F_τ`; row/column `k = b + a·r_τ`.
pub fn gram_matrix(
    pattern: &PilotPattern,
    dft_tau: &TruncatedDftFactor,
    dft_nu: &TruncatedDftFactor,
) -> Result<DMatrix<Complex64>> {
    gram_matrix_with(pattern, dft_tau, dft_nu, GramMethod::Fft)
}

pub fn gram_matrix_with(
    pattern: &PilotPattern,
    dft_tau: &TruncatedDftFactor,
    dft_nu: &TruncatedDftFactor,
    method: GramMethod,
) -> Result<DMatrix<Complex64>> {
    check_factors(pattern, dft_tau, dft_nu)?;
    let (m, n) = (pattern.m() as i64, pattern.n() as i64);
    let (r_tau, r_nu) = (dft_tau.rank(), dft_nu.rank());
    let size = r_tau * r_nu;
    let ft = dft_tau.frequencies();
    let fv = dft_nu.frequencies();
    match method {
        GramMethod::Fft => {
            let spectrum = mask_2dfft(pattern);
            let norm = 1.0 / (m * n) as f64;
            Ok(DMatrix::from_fn(size, size, |k, l| {
                let (a, b) = (k / r_tau, k % r_tau);
                let (c, d) = (l / r_tau, l % r_tau);
                let mi = (ft[b] - ft[d]).rem_euclid(m) as usize;
                let ni = (fv[a] - fv[c]).rem_euclid(n) as usize;
                spectrum[(mi, ni)] * norm
            }))
        }
        GramMethod::Direct => {
            let bt = dft_tau.basis();
            let bv = dft_nu.basis();
            let positions = pattern.pilot_positions();
            Ok(DMatrix::from_fn(size, size, |k, l| {
                let (a, b) = (k / r_tau, k % r_tau);
                let (c, d) = (l / r_tau, l % r_tau);
                positions
                    .iter()
                    .map(|&(pm, pn)| {
                        bv[(a, pn)] * bt[(b, pm)] * (bv[(c, pn)] * bt[(d, pm)]).conj()
                    })
                    .sum()
            }))
        }
    }
}

/// `C_e ≈ Uᴴ (γ⁻¹Λ⁻¹ + α U Diag(c_p) Uᴴ)⁻¹ U`.
pub fn error_covariance_approx(
    pattern: &PilotPattern,
    dft_tau: &TruncatedDftFactor,
    dft_nu: &TruncatedDftFactor,
    gamma: f64,
    stats: &NoiseDataStats,
) -> Result<ErrorReport> {
    error_covariance_approx_with(pattern, dft_tau, dft_nu, gamma, stats, GramMethod::Fft)
}

pub fn error_covariance_approx_with(
    pattern: &PilotPattern,
    dft_tau: &TruncatedDftFactor,
    dft_nu: &TruncatedDftFactor,
    gamma: f64,
    stats: &NoiseDataStats,
    method: GramMethod,
) -> Result<ErrorReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    let lt = dft_tau.eigenvalues();
    let lv = dft_nu.eigenvalues();
    if lt.iter().chain(lv).any(|&l| !(l > 0.0)) {
        return Err(Error::invalid(
            "eigenvalues",
            "truncated eigenvalues must be positive; the rank exceeds the spectral support",
        ));
    }
    let alpha = stats.alpha(pattern);
    let r_tau = dft_tau.rank();
    let mut inner = gram_matrix_with(pattern, dft_tau, dft_nu, method)? * Complex64::new(alpha, 0.0);
    for k in 0..inner.nrows() {
        let lambda = lv[k / r_tau] * lt[k % r_tau];
        inner[(k, k)] += Complex64::new(1.0 / (gamma * lambda), 0.0);
    }
    let chol = cholesky_with_jitter(inner, "approximate inner matrix")?;
    let trace_mse: f64 = chol.inverse().diagonal().iter().map(|x| x.re).sum();

    let (m, n) = (pattern.m(), pattern.n());
    let l = chol.l();
    let bt = dft_tau.basis();
    let bv = dft_nu.basis();
    let size = inner_size(dft_tau, dft_nu);
    let column = |i: usize| -> f64 {
        let (pm, pn) = (i % m, i / m);
        let mut u = DVector::from_fn(size, |k, _| bv[(k / r_tau, pn)] * bt[(k % r_tau, pm)]);
        l.solve_lower_triangular_mut(&mut u);
        u.norm_squared()
    };
    #[cfg(feature = "parallel")]
    let per_symbol_mse: Vec<f64> = {
        use rayon::prelude::*;
        (0..m * n).into_par_iter().map(column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_symbol_mse: Vec<f64> = (0..m * n).map(column).collect();
    Ok(ErrorReport {
        trace_mse,
        per_symbol_mse,
        full: None,
    })
}

fn inner_size(dft_tau: &TruncatedDftFactor, dft_nu: &TruncatedDftFactor) -> usize {
    dft_tau.rank() * dft_nu.rank()
}

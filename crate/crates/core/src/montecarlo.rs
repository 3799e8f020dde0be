//! Channel realizations, frame simulation and empirical LMMSE error.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), so results do not depend on how trials are scheduled.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::covariance::{HermitianToeplitz, KroneckerCovariance};
use crate::error::{Error, Result};
use crate::estimator::{
    error_covariance_exact, ExactOptions, LmmseFilter, NoiseDataStats, PilotPattern, PilotPhases,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub phases: PilotPhases,
    /// Progress callback granularity in trials; 0 disables reporting.
    #[serde(default)]
    pub report_interval: usize,
    /// Forwarded to the exact error covariance used as the theoretical value.
    #[serde(default)]
    pub include_data_term: bool,
}

impl SimConfig {
    pub fn new(trials: usize, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            trials,
            seed,
            phases: PilotPhases::Ones,
            report_interval: 0,
            include_data_term: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Independent random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws from `CN(0, variance)`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    if variance == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    Complex64::new(normal.sample(rng), normal.sample(rng))
}

/// Square root `L = Q diag(√max(λ, 0))` of a Hermitian PSD factor.
fn factor_sqrt(factor: &HermitianToeplitz) -> Result<DMatrix<Complex64>> {
    let eig = SymmetricEigen::new(factor.to_dense());
    let tol = factor.psd_tolerance();
    if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -tol {
            return Err(Error::NotPsd {
                eigenvalue: min,
                tolerance: tol,
            });
        }
    }
    let mut l = eig.eigenvectors;
    for (mut col, &lambda) in l.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= Complex64::new(lambda.max(0.0).sqrt(), 0.0);
    }
    Ok(l)
}

/// Precomputed square roots of the Kronecker factors.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    l_tau: DMatrix<Complex64>,
    l_nu: DMatrix<Complex64>,
    amp: f64,
}

impl ChannelSampler {
    pub fn new(cg: &KroneckerCovariance) -> Result<Self> {
        Ok(ChannelSampler {
            l_tau: factor_sqrt(cg.delay_factor())?,
            l_nu: factor_sqrt(cg.doppler_factor())?,
            amp: cg.scale().sqrt(),
        })
    }

    pub fn m(&self) -> usize {
        self.l_tau.nrows()
    }

    pub fn n(&self) -> usize {
        self.l_nu.nrows()
    }

    /// Dense `(L_ν ⊗ L_τ)`.
    pub fn kronecker_sqrt(&self) -> DMatrix<Complex64> {
        self.l_nu.kronecker(&self.l_tau) * Complex64::new(self.amp, 0.0)
    }

    /// `g = √s vec(L_τ W L_νᵀ)`, which equals `√s (L_ν ⊗ L_τ) vec(W)`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> DVector<Complex64> {
        let (m, n) = (self.m(), self.n());
        let w = DMatrix::from_fn(m, n, |_, _| complex_gaussian(rng, 1.0));
        let g = &self.l_tau * w * self.l_nu.transpose() * Complex64::new(self.amp, 0.0);
        DVector::from_column_slice(g.as_slice())
    }
}

/// One channel realization with covariance `C_g`.
pub fn sample_channel<R: rand::Rng + ?Sized>(
    cg: &KroneckerCovariance,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    Ok(ChannelSampler::new(cg)?.sample(rng))
}

/// Transmitted symbols and received observations of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub x: DVector<Complex64>,
    pub y: DVector<Complex64>,
}

/// `y = x ⊙ g + n` with pilots on `I_p`, `CN(0, σ_d²)` data elsewhere and `CN(0, σ_n²)` noise.
pub fn simulate_frame<R: rand::Rng + ?Sized>(
    pattern: &PilotPattern,
    pilot_values: &[Complex64],
    g: &DVector<Complex64>,
    stats: &NoiseDataStats,
    rng: &mut R,
) -> Result<Frame> {
    simulate_frame_with_noise(pattern, pilot_values, g, stats.sigma_d2, stats.sigma_n2, rng)
}

/// [`simulate_frame`] with explicit data and noise powers, either of which may be zero.
pub fn simulate_frame_with_noise<R: rand::Rng + ?Sized>(
    pattern: &PilotPattern,
    pilot_values: &[Complex64],
    g: &DVector<Complex64>,
    sigma_d2: f64,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<Frame> {
    if g.len() != pattern.len() {
        return Err(Error::DimensionMismatch {
            context: "channel vector",
            expected: pattern.len(),
            found: g.len(),
        });
    }
    if pilot_values.len() != pattern.pilot_count() {
        return Err(Error::DimensionMismatch {
            context: "pilot values",
            expected: pattern.pilot_count(),
            found: pilot_values.len(),
        });
    }
    if !(sigma_d2 >= 0.0 && sigma_n2 >= 0.0) {
        return Err(Error::invalid("variance", "must be non-negative"));
    }
    let mut x = DVector::zeros(pattern.len());
    let mut next_pilot = pilot_values.iter();
    for (k, &is_pilot) in pattern.mask().iter().enumerate() {
        x[k] = if is_pilot {
            *next_pilot.next().expect("pilot count checked")
        } else {
            complex_gaussian(rng, sigma_d2)
        };
    }
    let y = DVector::from_fn(pattern.len(), |k, _| x[k] * g[k] + complex_gaussian(rng, sigma_n2));
    Ok(Frame { x, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    /// Mean of `‖g − ĝ‖²` over trials.
    pub empirical: f64,
    /// `tr(C_e)` of the exact error covariance.
    pub theoretical: f64,
    /// Sample standard deviation of the per-trial error divided by `√trials`.
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl MseSummary {
    /// `|empirical − theoretical| ≤ k · stderr`.
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.theoretical).abs() <= k * self.stderr
    }
}

/// Per-run summary record for JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRecord {
    pub pattern_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha_db: f64,
    pub trials: usize,
    pub empirical: f64,
    pub theoretical: f64,
    pub stderr: f64,
    pub seed: u64,
}

impl MseRecord {
    pub fn new(pattern_id: impl Into<String>, pattern: &PilotPattern, stats: &NoiseDataStats, s: &MseSummary) -> Self {
        MseRecord {
            pattern_id: pattern_id.into(),
            k: pattern.pilot_count(),
            alpha_db: 10.0 * stats.alpha(pattern).log10(),
            trials: s.trials,
            empirical: s.empirical,
            theoretical: s.theoretical,
            stderr: s.stderr,
            seed: s.seed,
        }
    }
}

/// Monte Carlo estimate of the LMMSE error energy against `tr(C_e)`.
pub fn empirical_mse(
    pattern: &PilotPattern,
    cg: &KroneckerCovariance,
    stats: &NoiseDataStats,
    sim: &SimConfig,
) -> Result<MseSummary> {
    empirical_mse_with_progress(pattern, cg, stats, sim, |_| {})
}

/// [`empirical_mse`] calling `progress(done)` every `report_interval` trials.
pub fn empirical_mse_with_progress(
    pattern: &PilotPattern,
    cg: &KroneckerCovariance,
    stats: &NoiseDataStats,
    sim: &SimConfig,
    mut progress: impl FnMut(usize),
) -> Result<MseSummary> {
    sim.validate()?;
    let theoretical = error_covariance_exact(
        pattern,
        cg,
        stats,
        ExactOptions {
            include_data_term: sim.include_data_term,
            ..ExactOptions::default()
        },
    )?
    .trace_mse;
    let pilots = pattern.pilot_symbols(sim.phases);
    let filter = LmmseFilter::new(pattern, &pilots, cg, stats)?;
    let sampler = ChannelSampler::new(cg)?;

    let trial = |t: usize| -> Result<f64> {
        let mut rng = trial_rng(sim.seed, t as u64);
        let g = sampler.sample(&mut rng);
        let frame = simulate_frame(pattern, &pilots, &g, stats, &mut rng)?;
        let g_hat = filter.apply(&frame.y)?;
        Ok((g - g_hat).norm_squared())
    };

    let chunk = if sim.report_interval == 0 { sim.trials } else { sim.report_interval };
    let mut errors = Vec::with_capacity(sim.trials);
    let mut start = 0;
    while start < sim.trials {
        let end = (start + chunk).min(sim.trials);
        #[cfg(feature = "parallel")]
        let batch: Vec<Result<f64>> = {
            use rayon::prelude::*;
            (start..end).into_par_iter().map(trial).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let batch: Vec<Result<f64>> = (start..end).map(trial).collect();
        for e in batch {
            errors.push(e?);
        }
        start = end;
        if sim.report_interval > 0 {
            progress(start);
        }
    }

    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = if errors.len() > 1 {
        errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MseSummary {
        empirical: mean,
        theoretical,
        stderr: (var / n).sqrt(),
        trials: sim.trials,
        seed: sim.seed,
    })
}

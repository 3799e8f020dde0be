//! End-to-end acceptance checks. Each test reports one PASS/FAIL line on
//! stderr (bypassing output capture) and then asserts.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use ddpilot::covariance::{dft_diagonalize, truncation_rank, Domain};
use ddpilot::estimator::{
    error_covariance_approx, error_covariance_exact, error_trace_exact, gram_matrix,
    lmmse_estimate, ExactOptions, PilotPhases,
};
use ddpilot::lattice::{
    check_condition_analytic, check_condition_fft, lower_bound, mask_from_lattice,
    search_lattices, BoundConvention,
};
use ddpilot::montecarlo::{empirical_mse, SimConfig};
use ddpilot::quadrature::QuadratureSpec;
use ddpilot::sweeps::{diagonalization_sweep, spread_sweep, SweepShape};
use ddpilot::{
    ChannelProfile, FeasibilityRegion, GridConfig, HermitianToeplitz, KroneckerCovariance,
    LatticeSpec, NoiseDataStats, PilotPattern, RegionBoundary, TruncatedDftFactor,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense_lmmse, dense_sinc_covariance, report};

const TF: f64 = 1.07;

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    report(&format!(
        "[acceptance] criterion {id} {:<4} {name} ({:.3} s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    ));
}

/// 16 x 8 grid with `M F τ_D = N T ν_D = 2.5`, so both truncation ranks are 3.
struct SmallSetup {
    grid: GridConfig,
    channel: ChannelProfile,
    stats: NoiseDataStats,
    ft: TruncatedDftFactor,
    fv: TruncatedDftFactor,
}

fn setup(m: usize, n: usize, mp: f64, np: f64) -> SmallSetup {
    let grid = GridConfig::new(m, n, TF * 1e-4, 1e4).unwrap();
    let channel = ChannelProfile::rectangular(mp / m as f64 / grid.f(), np / n as f64 / grid.t(), 1.0).unwrap();
    let stats = NoiseDataStats::new(1.0, 1.0, 1.0).unwrap();
    let p_tau = channel.normalized_spread(&grid, Domain::Delay);
    let p_nu = channel.normalized_spread(&grid, Domain::Doppler);
    let rt = truncation_rank(m, m as f64 * p_tau).unwrap().rank;
    let rn = truncation_rank(n, n as f64 * p_nu).unwrap().rank;
    SmallSetup {
        ft: dft_diagonalize(&HermitianToeplitz::sinc(m, p_tau), rt, p_tau).unwrap(),
        fv: dft_diagonalize(&HermitianToeplitz::sinc(n, p_nu), rn, p_nu).unwrap(),
        grid,
        channel,
        stats,
    }
}

fn small_setup() -> SmallSetup {
    setup(16, 8, 2.5, 2.5)
}

fn region(s: &SmallSetup) -> FeasibilityRegion {
    FeasibilityRegion::new(s.ft.rank(), s.fv.rank(), RegionBoundary::Inclusive).unwrap()
}

fn approx_trace(s: &SmallSetup, pattern: &PilotPattern) -> f64 {
    error_covariance_approx(pattern, &s.ft, &s.fv, s.channel.gamma(), &s.stats)
        .unwrap()
        .trace_mse
}

fn budget_pattern(s: &SmallSetup, spec: &LatticeSpec) -> PilotPattern {
    mask_from_lattice(spec, &s.grid)
        .unwrap()
        .with_power_budget(s.stats.beta)
        .unwrap()
}

#[test]
fn criterion_1_bound_attainment() {
    let start = Instant::now();
    let s = small_setup();
    assert_eq!((s.ft.rank(), s.fv.rank()), (3, 3));
    let region = region(&s);
    let bound = lower_bound(&s.grid, &s.channel, &s.stats, 3, 3, BoundConvention::Product).unwrap().value;
    let lattices = search_lattices(&s.grid, 8, &region, 16).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for spec in &lattices {
        for bias in spec.valid_biases() {
            let spec = spec.with_bias(bias).unwrap();
            assert!(check_condition_analytic(&spec, &s.grid, &region).unwrap().feasible);
            let trace = approx_trace(&s, &budget_pattern(&s, &spec));
            worst = worst.max((trace - bound).abs() / bound);
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = !lattices.is_empty() && worst <= 1e-9 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "bound attainment",
        pass,
        elapsed,
        &format!("lattices={} patterns={checked} max_rel_dev={worst:.2e}", lattices.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_2_checker_equivalence() {
    let start = Instant::now();
    let grid = GridConfig::new(16, 8, TF, 1.0).unwrap();
    let regions: Vec<FeasibilityRegion> = [(3, 3), (1, 3), (5, 3), (3, 5)]
        .iter()
        .flat_map(|&(rt, rn)| {
            [RegionBoundary::Inclusive, RegionBoundary::Strict]
                .map(|b| FeasibilityRegion::new(rt, rn, b).unwrap())
        })
        .collect();
    let (mut compared, mut disagreements, mut skipped) = (0usize, 0usize, 0usize);
    for l in [2i64, 4, 8, 16] {
        for d1 in (1..=l).filter(|d| l % d == 0) {
            let d2 = l / d1;
            for e in 0..d2 {
                let spec = LatticeSpec::hnf(d1, e, d2).unwrap();
                if !spec.is_periodic(&grid) {
                    skipped += 1;
                    continue;
                }
                for bias in spec.valid_biases() {
                    let spec = spec.with_bias(bias).unwrap();
                    let pattern = mask_from_lattice(&spec, &grid).unwrap();
                    for region in &regions {
                        let a = check_condition_analytic(&spec, &grid, region).unwrap();
                        let f = check_condition_fft(&pattern, region);
                        compared += 1;
                        if a.feasible != f.feasible || a.violation_offsets() != f.violation_offsets() {
                            disagreements += 1;
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = disagreements == 0 && compared > 0 && elapsed < Duration::from_secs(30);
    verdict(
        2,
        "checker equivalence",
        pass,
        elapsed,
        &format!("comparisons={compared} disagreements={disagreements} non_periodic_skipped={skipped}"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_gram_diagonal() {
    let start = Instant::now();
    let (m, n) = (16usize, 8usize);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let factors: Vec<(TruncatedDftFactor, TruncatedDftFactor)> = [(0.15, 0.3), (0.3, 0.6), (0.9, 0.9)]
        .iter()
        .map(|&(pt, pn): &(f64, f64)| {
            let rt = truncation_rank(m, m as f64 * pt).unwrap().rank;
            let rn = truncation_rank(n, n as f64 * pn).unwrap().rank;
            (
                dft_diagonalize(&HermitianToeplitz::sinc(m, pt), rt, pt).unwrap(),
                dft_diagonalize(&HermitianToeplitz::sinc(n, pn), rn, pn).unwrap(),
            )
        })
        .collect();
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let density: f64 = rng.random();
        let mask: Vec<bool> = (0..m * n).map(|_| rng.random::<f64>() < density).collect();
        let pattern = PilotPattern::from_mask(m, n, mask, 1.0).unwrap();
        let target = pattern.pilot_count() as f64 / (m * n) as f64;
        let (ft, fv) = &factors[trial % factors.len()];
        let g = gram_matrix(&pattern, ft, fv).unwrap();
        for d in g.diagonal().iter() {
            worst = worst.max((d - Complex64::new(target, 0.0)).norm());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12;
    verdict(3, "gram diagonal identity", pass, elapsed, &format!("masks=1000 max_abs_dev={worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_4_bound_independent_of_k() {
    let start = Instant::now();
    let s = small_setup();
    let region = region(&s);
    let mut traces = Vec::new();
    let mut per_l = Vec::new();
    for l in [2usize, 4, 8] {
        let lattices = search_lattices(&s.grid, l, &region, 16).unwrap();
        per_l.push(lattices.len());
        for spec in &lattices {
            traces.push(approx_trace(&s, &budget_pattern(&s, spec)));
        }
    }
    let lo = traces.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = traces.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    let elapsed = start.elapsed();
    let pass = per_l.iter().all(|&c| c > 0) && spread <= 1e-9;
    verdict(
        4,
        "bound independent of K",
        pass,
        elapsed,
        &format!("feasible per L(2,4,8)={per_l:?} rel_spread={spread:.2e}"),
    );
    assert!(pass);
}

/// `∫_{-a}^{a} (1 - |x|/h) cos(ωx) dx` in closed form.
fn triangle_transform(a: f64, h: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 2.0 * (a - a * a / (2.0 * h));
    }
    let (s, c) = (omega * a).sin_cos();
    2.0 * (s / omega - (a * s / omega + (c - 1.0) / (omega * omega)) / h)
}

fn toeplitz_dense(gen: &[f64]) -> DMatrix<f64> {
    let d = gen.len();
    DMatrix::from_fn(d, d, |i, j| gen[i.abs_diff(j)])
}

/// Relative Kronecker F-norm error from closed-form triangle integrals.
fn triangle_oracle(grid: &GridConfig, delta_d: f64) -> f64 {
    let c = (delta_d * grid.tf()).sqrt();
    let factor = |dim: usize, spread: f64, step: f64, h: f64| {
        let a = spread / 2.0;
        let exact: Vec<f64> = (0..dim)
            .map(|k| triangle_transform(a, h, 2.0 * std::f64::consts::PI * k as f64 * step))
            .collect();
        let approx: Vec<f64> = (0..dim).map(|k| spread * common::sinc(k as f64 * step * spread)).collect();
        (toeplitz_dense(&exact), toeplitz_dense(&approx))
    };
    let (et, at) = factor(grid.m(), c / grid.f(), grid.f(), grid.t());
    let (en, an) = factor(grid.n(), c / grid.t(), grid.t(), grid.f());
    let exact = en.kronecker(&et);
    (&exact - an.kronecker(&at)).norm() / exact.norm()
}

#[test]
fn criterion_5_approximation_error_trends() {
    let start = Instant::now();
    let dims = [32usize, 64, 128, 256, 512];
    let product = 1.0 / 16.0;
    let diag = diagonalization_sweep(&dims, product).unwrap();
    let errs: Vec<f64> = diag.iter().map(|p| p.rel_error).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    let halved = errs[4] < errs[0] / 2.0;

    let grid = GridConfig::new(32, 32, TF * 1e-4, 1e4).unwrap();
    let deltas = [1e-4, 1e-3, 1e-2];
    let quad = QuadratureSpec::default();
    let tri = spread_sweep(&grid, SweepShape::Triangular, &deltas, &quad).unwrap();
    let rect = spread_sweep(&grid, SweepShape::Rectangular, &deltas, &quad).unwrap();
    let increasing = tri.windows(2).all(|w| w[1].rel_error > w[0].rel_error);
    let rect_exact = rect.iter().all(|p| p.rel_error < 1e-8);
    let oracle_dev = tri
        .iter()
        .map(|p| {
            let o = triangle_oracle(&grid, p.delta_d);
            (p.rel_error - o).abs() / o
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = monotone && halved && increasing && rect_exact && oracle_dev < 1e-6 && elapsed < Duration::from_secs(60);
    verdict(
        5,
        "approximation error trends",
        pass,
        elapsed,
        &format!(
            "diag_err={:?} tri_err={:?} rect_max={:.1e} oracle_rel_dev={oracle_dev:.1e}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            tri.iter().map(|p| format!("{:.3e}", p.rel_error)).collect::<Vec<_>>(),
            rect.iter().map(|p| p.rel_error).fold(0.0, f64::max),
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_monte_carlo_self_consistency() {
    let start = Instant::now();
    let s = small_setup();
    let lattice = search_lattices(&s.grid, 8, &region(&s), 16).unwrap()[0];
    // α = σ_p² / σ_n² = 10 dB
    let pattern = mask_from_lattice(&lattice, &s.grid)
        .unwrap()
        .with_sigma_p2(10.0 * s.stats.sigma_n2)
        .unwrap();
    let cg = KroneckerCovariance::sinc_model(&s.channel, &s.grid);
    let mut lines = Vec::new();
    let mut all_ok = true;
    for seed in [11u64, 12, 13] {
        let sim = SimConfig::new(10_000, seed).unwrap();
        let r = empirical_mse(&pattern, &cg, &s.stats, &sim).unwrap();
        all_ok &= r.within(3.0);
        lines.push(format!(
            "seed={seed}: emp={:.5} th={:.5} z={:.2}",
            r.empirical,
            r.theoretical,
            (r.empirical - r.theoretical) / r.stderr
        ));
    }
    let elapsed = start.elapsed();
    let pass = all_ok && elapsed < Duration::from_secs(60);
    verdict(6, "Monte Carlo self-consistency", pass, elapsed, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_7_dense_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let (m, n) = loop {
            let m = rng.random_range(2..=8usize);
            let n = rng.random_range(1..=8usize);
            if m * n <= 64 {
                break (m, n);
            }
        };
        let p_tau = rng.random_range(0.05..0.9);
        let p_nu = rng.random_range(0.05..0.9);
        let gamma = rng.random_range(0.2..3.0);
        let cg = KroneckerCovariance::new(
            HermitianToeplitz::sinc(n, p_nu),
            HermitianToeplitz::sinc(m, p_tau),
            gamma,
        )
        .unwrap();
        let mut mask: Vec<bool> = (0..m * n).map(|_| rng.random::<f64>() < 0.4).collect();
        mask[rng.random_range(0..m * n)] = true;
        let sigma_p2 = rng.random_range(0.5..4.0);
        let pattern = PilotPattern::from_mask(m, n, mask.clone(), sigma_p2).unwrap();
        let stats = NoiseDataStats::new(rng.random_range(0.05..2.0), rng.random_range(0.0..2.0), 1.0).unwrap();
        let pilots = pattern.pilot_symbols(PilotPhases::PseudoRandom { seed: instance });
        let y = DVector::from_fn(m * n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));

        let dense = dense_sinc_covariance(m, n, p_tau, p_nu, gamma);
        let oracle = dense_lmmse(&dense, &mask, &pilots, stats.sigma_d2, stats.sigma_n2, &y);
        let est = lmmse_estimate(&y, &pattern, &pilots, &cg, &stats).unwrap();
        worst = worst.max((&est - &oracle.estimate).amax_abs());
        for include_data_term in [false, true] {
            let opts = ExactOptions {
                include_data_term,
                keep_full: true,
                ..ExactOptions::default()
            };
            let r = error_covariance_exact(&pattern, &cg, &stats, opts).unwrap();
            worst = worst.max((r.full.unwrap() - &oracle.error_cov).amax_abs());
        }
        let trace = error_trace_exact(&pattern, &cg, &stats).unwrap();
        let oracle_trace: f64 = oracle.error_cov.diagonal().iter().map(|x| x.re).sum();
        worst = worst.max((trace - oracle_trace).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10;
    verdict(7, "dense oracle equivalence", pass, elapsed, &format!("instances=20 max_abs_dev={worst:.2e}"));
    assert!(pass);
}

trait AmaxAbs {
    fn amax_abs(&self) -> f64;
}

impl AmaxAbs for DMatrix<Complex64> {
    fn amax_abs(&self) -> f64 {
        self.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

impl AmaxAbs for DVector<Complex64> {
    fn amax_abs(&self) -> f64 {
        self.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

#[test]
fn criterion_8_approximation_consistency() {
    let start = Instant::now();
    // same physical spreads: M F τ_D scales with M
    let small = setup(32, 16, 2.2, 2.2);
    let large = setup(128, 64, 8.8, 8.8);
    assert_eq!((small.ft.rank(), large.ft.rank()), (3, 9));
    let l = 16;
    let pick = |s: &SmallSetup| -> HashSet<LatticeSpec> {
        search_lattices(&s.grid, l, &region(s), 64).unwrap().into_iter().collect()
    };
    let (fs, fl) = (pick(&small), pick(&large));
    let mut common_specs: Vec<LatticeSpec> = fs.intersection(&fl).copied().collect();
    common_specs.sort();
    let spec = common_specs
        .first()
        .copied()
        .unwrap_or_else(|| LatticeSpec::hnf(4, 0, 4).unwrap());
    let gap = |s: &SmallSetup| {
        let pattern = budget_pattern(s, &spec);
        let cg = KroneckerCovariance::sinc_model(&s.channel, &s.grid);
        let exact = error_trace_exact(&pattern, &cg, &s.stats).unwrap();
        let approx = approx_trace(s, &pattern);
        ((exact - approx).abs() / exact, exact, approx)
    };
    let (gs, es, as_) = gap(&small);
    let (gl, el, al) = gap(&large);
    let elapsed = start.elapsed();
    let pass = gl < gs;
    verdict(
        8,
        "approximation consistency",
        pass,
        elapsed,
        &format!(
            "V={:?} feasible_both={} gap32x16={gs:.3e} (exact {es:.4}, approx {as_:.4}) gap128x64={gl:.3e} (exact {el:.4}, approx {al:.4})",
            spec.matrix(),
            !common_specs.is_empty()
        ),
    );
    assert!(pass);
}

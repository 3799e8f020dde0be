use std::collections::HashSet;

use ddpilot::lattice::{
    check_condition_analytic, check_condition_fft, lower_bound, mask_2dfft, mask_from_lattice,
    search_lattices, BoundConvention,
};
use ddpilot::montecarlo::{empirical_mse_with_progress, MseRecord, SimConfig};
use ddpilot::quadrature::QuadratureSpec;
use ddpilot::sweeps::{diagonalization_sweep, spread_sweep};
use ddpilot::{KroneckerCovariance, LatticeSpec};

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum SweepKind {
    /// DFT diagonalization error against matrix dimension.
    #[default]
    Dimension,
    /// Sinc-model integration error against the spread factor.
    Spread,
}

/// Command output plus a failure to report after the table is written.
pub struct Outcome {
    pub table: Table,
    pub deferred: Option<CliError>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome { table, deferred: None }
    }
}

pub fn approx_error(cfg: &LoadedConfig, kind: SweepKind) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep()?;
    let table = match kind {
        SweepKind::Dimension => {
            let mut t = Table::new(vec!["dim", "spread_product", "rel_error"]);
            for p in diagonalization_sweep(&sweep.dims, sweep.spread_product)? {
                t.push(vec![p.dim.into(), p.spread_product.into(), p.rel_error.into()]);
            }
            t
        }
        SweepKind::Spread => {
            let grid = cfg.grid()?;
            let mut t = Table::new(vec!["delta_D", "rel_error"]);
            for p in spread_sweep(&grid, sweep.shape, &sweep.delta_d, &QuadratureSpec::default())? {
                t.push(vec![p.delta_d.into(), p.rel_error.into()]);
            }
            t
        }
    };
    Ok(table.into())
}

fn centered(i: usize, dim: usize) -> i64 {
    let i = i as i64;
    let d = dim as i64;
    if i > d / 2 {
        i - d
    } else {
        i
    }
}

pub fn lattice_check(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let spec = cfg
        .lattice()?
        .ok_or_else(|| CliError::Config("lattice.V: required for lattice-check".into()))?;
    let (r_tau, r_nu) = cfg.ranks(&grid)?;
    let region = cfg.region(r_tau, r_nu)?;
    let pattern = mask_from_lattice(&spec, &grid)?;
    let fft = check_condition_fft(&pattern, &region);
    let analytic = check_condition_analytic(&spec, &grid, &region)?;

    let (m, n) = (grid.m() as i64, grid.n() as i64);
    let wrap = |(dm, dn): (i64, i64)| (dm.rem_euclid(m), dn.rem_euclid(n));
    let in_region: HashSet<(i64, i64)> = region.offsets(&grid).into_iter().map(wrap).collect();
    let violating: HashSet<(i64, i64)> = fft.violation_offsets().into_iter().map(wrap).collect();

    let spectrum = mask_2dfft(&pattern);
    let mut t = Table::new(vec!["m_tilde", "n_tilde", "magnitude", "in_region", "violation"]);
    for j in 0..grid.n() {
        for i in 0..grid.m() {
            let key = (i as i64, j as i64);
            t.push(vec![
                centered(i, grid.m()).into(),
                centered(j, grid.n()).into(),
                spectrum[(i, j)].norm().into(),
                (key == (0, 0) || in_region.contains(&key)).into(),
                violating.contains(&key).into(),
            ]);
        }
    }
    eprintln!(
        "K={} L={} r_tau={r_tau} r_nu={r_nu} fft_feasible={} analytic_feasible={} violations={:?}",
        pattern.pilot_count(),
        spec.volume(),
        fft.feasible,
        analytic.feasible,
        fft.violation_offsets()
    );
    let deferred = (fft.feasible != analytic.feasible).then(|| {
        CliError::Consistency(format!(
            "FFT check says feasible={} but the integer check says feasible={}",
            fft.feasible, analytic.feasible
        ))
    });
    Ok(Outcome { table: t, deferred })
}

pub fn lattice_search(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let volume = cfg.search_volume()?;
    let (r_tau, r_nu) = cfg.ranks(&grid)?;
    let region = cfg.region(r_tau, r_nu)?;
    let channel = cfg.channel()?;
    let stats = cfg.stats()?;
    let bound = lower_bound(&grid, &channel, &stats, r_tau, r_nu, BoundConvention::Product)?;
    let found = search_lattices(&grid, volume, &region, cfg.max_entry())?;
    for spec in &found {
        if !check_condition_fft(&mask_from_lattice(spec, &grid)?, &region).feasible {
            return Err(CliError::Consistency(format!(
                "FFT check rejects {} accepted by the integer check",
                pattern_id(spec)
            )));
        }
    }
    let mut t = Table::new(vec!["v11", "v12", "v21", "v22", "K", "L", "bound"]);
    for spec in &found {
        let [[v11, v12], [v21, v22]] = spec.matrix();
        t.push(vec![
            v11.into(),
            v12.into(),
            v21.into(),
            v22.into(),
            spec.pilot_count(&grid)?.into(),
            spec.volume().into(),
            bound.value.into(),
        ]);
    }
    eprintln!("L={volume} r_tau={r_tau} r_nu={r_nu} feasible_lattices={}", found.len());
    Ok(t.into())
}

pub fn bound(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let channel = cfg.channel()?;
    let stats = cfg.stats()?;
    let (r_tau, r_nu) = cfg.ranks(&grid)?;
    let mut t = Table::new(vec!["convention", "r_tau", "r_nu", "D", "value", "asymptotic"]);
    for (name, conv) in [("product", BoundConvention::Product), ("sum", BoundConvention::Sum)] {
        let b = lower_bound(&grid, &channel, &stats, r_tau, r_nu, conv)?;
        t.push(vec![
            name.into(),
            r_tau.into(),
            r_nu.into(),
            b.diagonal_count.into(),
            b.value.into(),
            b.asymptotic.into(),
        ]);
    }
    if channel.exceeds_underspread_hint() {
        eprintln!("warning: spread factor {} is not small; the sinc model may be loose", channel.spread_factor());
    }
    Ok(t.into())
}

/// Stable identifier of a biased lattice.
pub fn pattern_id(spec: &LatticeSpec) -> String {
    let [[v11, v12], [v21, v22]] = spec.matrix();
    let [r1, r2] = spec.bias();
    format!("V[{v11} {v12};{v21} {v22}]r[{r1} {r2}]")
}

/// Standard errors allowed between the empirical and theoretical MSE.
pub const MSE_TOLERANCE_SIGMAS: f64 = 3.0;

pub fn mse(cfg: &LoadedConfig, seed_override: Option<u64>) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let channel = cfg.channel()?;
    let stats = cfg.stats()?;
    let section = cfg.mse()?;
    let spec = cfg
        .lattice()?
        .ok_or_else(|| CliError::Config("lattice.V: required for mse".into()))?;
    let base = mask_from_lattice(&spec, &grid)?;
    let pattern = match section.alpha_db {
        Some(db) => base.with_sigma_p2(10f64.powf(db / 10.0) * stats.sigma_n2)?,
        None => base.with_power_budget(stats.beta)?,
    };
    let cg = KroneckerCovariance::sinc_model(&channel, &grid);
    let trials = section.trials;
    let sim = SimConfig {
        trials,
        seed: seed_override.unwrap_or(section.seed),
        phases: cfg.phases(),
        report_interval: (trials / 10).max(1),
        include_data_term: section.include_data_term,
    };
    let summary = empirical_mse_with_progress(&pattern, &cg, &stats, &sim, |done| {
        eprintln!("progress: {done}/{trials}");
    })?;
    let rec = MseRecord::new(pattern_id(&spec), &pattern, &stats, &summary);
    let ok = summary.within(MSE_TOLERANCE_SIGMAS);
    let mut t = Table::new(vec![
        "pattern_id", "K", "alpha_db", "trials", "empirical", "theoretical", "stderr", "seed", "ok",
    ]);
    t.push(vec![
        rec.pattern_id.clone().into(),
        rec.k.into(),
        rec.alpha_db.into(),
        rec.trials.into(),
        rec.empirical.into(),
        rec.theoretical.into(),
        rec.stderr.into(),
        rec.seed.into(),
        ok.into(),
    ]);
    let deferred = (!ok).then(|| {
        CliError::Consistency(format!(
            "empirical MSE {} differs from tr(C_e) {} by more than {MSE_TOLERANCE_SIGMAS} standard errors ({})",
            rec.empirical, rec.theoretical, rec.stderr
        ))
    });
    Ok(Outcome { table: t, deferred })
}

//! Browser bindings. Every export takes plain numbers and returns a JSON
//! string, so the page needs no generated type glue beyond strings.

use std::collections::HashSet;

use ddpilot::covariance::{truncation_rank, Domain};
use ddpilot::lattice::{
    check_condition_analytic, check_condition_fft, lower_bound, mask_2dfft, mask_from_lattice,
    search_lattices, BoundConvention,
};
use ddpilot::sweeps::diagonalization_error;
use ddpilot::{ChannelProfile, FeasibilityRegion, GridConfig, LatticeSpec, NoiseDataStats, RegionBoundary};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps the FFT and the JSON payload small.
const MAX_CELLS: usize = 128 * 128;

fn boundary(strict: bool) -> RegionBoundary {
    if strict {
        RegionBoundary::Strict
    } else {
        RegionBoundary::Inclusive
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Spectrum {
    m: usize,
    n: usize,
    k: usize,
    l: usize,
    feasible_fft: bool,
    feasible_analytic: bool,
    /// Entry `(i, j)` is stored at `j * m + i`.
    mask: Vec<bool>,
    magnitude: Vec<f64>,
    in_region: Vec<bool>,
    violations: Vec<(i64, i64)>,
}

/// Pilot mask, 2D-DFT magnitude and feasibility of the lattice `[[v11, v12], [v21, v22]]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn lattice_spectrum(
    m: usize,
    n: usize,
    v11: i32,
    v12: i32,
    v21: i32,
    v22: i32,
    r_tau: usize,
    r_nu: usize,
    strict: bool,
) -> Result<String, String> {
    if m * n > MAX_CELLS {
        return Err(format!("grid {m}x{n} exceeds {MAX_CELLS} cells"));
    }
    let run = || -> ddpilot::Result<Spectrum> {
        let grid = GridConfig::new(m, n, 1.0, 1.0)?;
        let spec = LatticeSpec::new([[v11 as i64, v12 as i64], [v21 as i64, v22 as i64]], [0, 0])?;
        let region = FeasibilityRegion::new(r_tau, r_nu, boundary(strict))?;
        let pattern = mask_from_lattice(&spec, &grid)?;
        let fft = check_condition_fft(&pattern, &region);
        let analytic = check_condition_analytic(&spec, &grid, &region)?;
        let spectrum = mask_2dfft(&pattern);
        let wrap = |(dm, dn): (i64, i64)| ((dm.rem_euclid(m as i64)) as usize, (dn.rem_euclid(n as i64)) as usize);
        let region_bins: HashSet<(usize, usize)> = region.offsets(&grid).into_iter().map(wrap).collect();
        let mut mask = Vec::with_capacity(m * n);
        let mut magnitude = Vec::with_capacity(m * n);
        let mut in_region = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                mask.push(pattern.is_pilot(i, j));
                magnitude.push(spectrum[(i, j)].norm());
                in_region.push((i, j) == (0, 0) || region_bins.contains(&(i, j)));
            }
        }
        Ok(Spectrum {
            m,
            n,
            k: pattern.pilot_count(),
            l: spec.volume(),
            feasible_fft: fft.feasible,
            feasible_analytic: analytic.feasible,
            mask,
            magnitude,
            in_region,
            violations: fft.violation_offsets(),
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

/// Relative diagonalization error for dimensions `8, 16, …, max_dim`.
#[wasm_bindgen]
pub fn diagonalization_curve(max_dim: usize, spread_product: f64) -> Result<String, String> {
    if !(8..=1024).contains(&max_dim) {
        return Err("max_dim must lie in [8, 1024]".into());
    }
    let mut points = Vec::new();
    let mut dim = 8;
    while dim <= max_dim {
        points.push(diagonalization_error(dim, spread_product).map_err(|e| e.to_string())?);
        dim *= 2;
    }
    to_json(&points)
}

#[derive(Debug, Serialize)]
struct BoundSummary {
    r_tau: usize,
    r_nu: usize,
    gamma: f64,
    product: f64,
    sum: f64,
    asymptotic: f64,
    /// Feasible lattices of index `volume`, as `[[v11, v12], [v21, v22]]`.
    lattices: Vec<[[i64; 2]; 2]>,
}

/// Lower bound for a rectangular scattering function and the lattices attaining it.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bound_summary(
    m: usize,
    n: usize,
    t_seconds: f64,
    f_hz: f64,
    tau_d_seconds: f64,
    nu_d_hz: f64,
    sigma_n2: f64,
    beta: f64,
    volume: usize,
) -> Result<String, String> {
    if m * n > MAX_CELLS {
        return Err(format!("grid {m}x{n} exceeds {MAX_CELLS} cells"));
    }
    let run = || -> ddpilot::Result<BoundSummary> {
        let grid = GridConfig::new(m, n, t_seconds, f_hz)?;
        let channel = ChannelProfile::rectangular(tau_d_seconds, nu_d_hz, 1.0)?;
        let stats = NoiseDataStats::new(sigma_n2, 0.0, beta)?;
        let rank = |d: Domain| -> ddpilot::Result<usize> {
            let dim = grid.dim(d);
            Ok(truncation_rank(dim, dim as f64 * channel.normalized_spread(&grid, d))?.rank)
        };
        let (r_tau, r_nu) = (rank(Domain::Delay)?, rank(Domain::Doppler)?);
        let p = lower_bound(&grid, &channel, &stats, r_tau, r_nu, BoundConvention::Product)?;
        let s = lower_bound(&grid, &channel, &stats, r_tau, r_nu, BoundConvention::Sum)?;
        let region = FeasibilityRegion::new(r_tau, r_nu, RegionBoundary::Inclusive)?;
        let lattices = search_lattices(&grid, volume, &region, 64)?
            .iter()
            .map(LatticeSpec::matrix)
            .collect();
        Ok(BoundSummary {
            r_tau,
            r_nu,
            gamma: channel.gamma(),
            product: p.value,
            sum: s.value,
            asymptotic: p.asymptotic,
            lattices,
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

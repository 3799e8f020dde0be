//! TOML run configuration.

use ddpilot::covariance::{truncation_rank, Domain};
use ddpilot::estimator::PilotPhases;
use ddpilot::sweeps::SweepShape;
use ddpilot::{
    ChannelProfile, FeasibilityRegion, GridConfig, LatticeSpec, NoiseDataStats, PowerProfile,
    RegionBoundary,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub channel: Option<ChannelSection>,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub region: RegionSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub mse: MseSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
    #[serde(rename = "F_hz")]
    pub f_hz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(rename = "tau_D_seconds")]
    pub tau_d_seconds: f64,
    #[serde(rename = "nu_D_hz")]
    pub nu_d_hz: f64,
    /// Used by the rectangular shortcut when no profiles are given.
    #[serde(rename = "S0", default = "one")]
    pub s0: f64,
    pub delay_profile: Option<PowerProfile>,
    pub doppler_profile: Option<PowerProfile>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "one")]
    pub sigma_n2: f64,
    #[serde(default)]
    pub sigma_d2: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            sigma_n2: 1.0,
            sigma_d2: 0.0,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub r_tau: Option<usize>,
    pub r_nu: Option<usize>,
    #[serde(default)]
    pub boundary: RegionBoundary,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(rename = "V")]
    pub v: Option<[[i64; 2]; 2]>,
    #[serde(default)]
    pub bias: [i64; 2],
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub max_entry: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_product")]
    pub spread_product: f64,
    #[serde(rename = "delta_D", default = "default_deltas")]
    pub delta_d: Vec<f64>,
    #[serde(default = "default_shape")]
    pub shape: SweepShape,
}

fn default_dims() -> Vec<usize> {
    vec![32, 64, 128, 256, 512]
}

fn default_product() -> f64 {
    1.0 / 16.0
}

fn default_deltas() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}

fn default_shape() -> SweepShape {
    SweepShape::Triangular
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            dims: default_dims(),
            spread_product: default_product(),
            delta_d: default_deltas(),
            shape: default_shape(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sets `σ_p² = α σ_n²` directly; otherwise the power budget applies.
    pub alpha_db: Option<f64>,
    /// Seed for pseudo-random pilot phases; all-ones phases when absent.
    pub phase_seed: Option<u64>,
    #[serde(default)]
    pub include_data_term: bool,
}

fn default_trials() -> usize {
    10_000
}

impl Default for MseSection {
    fn default() -> Self {
        MseSection {
            trials: default_trials(),
            seed: 0,
            alpha_db: None,
            phase_seed: None,
            include_data_term: false,
        }
    }
}

/// Line of `key` inside `[section]`, 1-based, for diagnostics.
fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let header = format!("[{section}]");
    let mut inside = false;
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            inside = t == header;
            continue;
        }
        if inside {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Parsed configuration with its source text kept for diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    source: String,
}

impl LoadedConfig {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let run: RunConfig = toml::from_str(source).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(LoadedConfig {
            run,
            source: source.to_string(),
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&source)
    }

    /// Config error pointing at `section.key`.
    pub fn field_error(&self, section: &str, key: &str, reason: impl std::fmt::Display) -> CliError {
        let at = match locate(&self.source, section, key) {
            Some(line) => format!("line {line}, "),
            None => String::new(),
        };
        CliError::Config(format!("{at}{section}.{key}: {reason}"))
    }

    fn wrap<T>(&self, section: &str, key: &str, r: ddpilot::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| self.field_error(section, key, e))
    }

    pub fn grid(&self) -> Result<GridConfig, CliError> {
        let g = &self.run.grid;
        self.wrap("grid", "T_seconds", GridConfig::new(g.m, g.n, g.t_seconds, g.f_hz))
    }

    pub fn channel(&self) -> Result<ChannelProfile, CliError> {
        let c = self
            .run
            .channel
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [channel] section".into()))?;
        let r = match (&c.delay_profile, &c.doppler_profile) {
            (None, None) => ChannelProfile::rectangular(c.tau_d_seconds, c.nu_d_hz, c.s0),
            (Some(d), Some(v)) => ChannelProfile::new(c.tau_d_seconds, c.nu_d_hz, d.clone(), v.clone()),
            _ => {
                return Err(self.field_error(
                    "channel",
                    "delay_profile",
                    "give both delay_profile and doppler_profile, or neither",
                ))
            }
        };
        self.wrap("channel", "tau_D_seconds", r)
    }

    pub fn stats(&self) -> Result<NoiseDataStats, CliError> {
        let n = &self.run.noise;
        self.wrap("noise", "sigma_n2", NoiseDataStats::new(n.sigma_n2, n.sigma_d2, n.beta))
    }

    /// Truncation ranks from the config or from `⌈dim · S · spread⌉`.
    pub fn ranks(&self, grid: &GridConfig) -> Result<(usize, usize), CliError> {
        let r = &self.run.region;
        let auto = |domain: Domain| -> Result<usize, CliError> {
            let channel = self.channel()?;
            let dim = grid.dim(domain);
            let p = channel.normalized_spread(grid, domain);
            Ok(self.wrap("channel", "tau_D_seconds", truncation_rank(dim, dim as f64 * p))?.rank)
        };
        let rt = match r.r_tau {
            Some(v) => v,
            None => auto(Domain::Delay)?,
        };
        let rn = match r.r_nu {
            Some(v) => v,
            None => auto(Domain::Doppler)?,
        };
        Ok((rt, rn))
    }

    pub fn region(&self, r_tau: usize, r_nu: usize) -> Result<FeasibilityRegion, CliError> {
        self.wrap("region", "r_tau", FeasibilityRegion::new(r_tau, r_nu, self.run.region.boundary))
    }

    pub fn lattice(&self) -> Result<Option<LatticeSpec>, CliError> {
        let l = &self.run.lattice;
        match l.v {
            None => Ok(None),
            Some(v) => Ok(Some(self.wrap("lattice", "V", LatticeSpec::new(v, l.bias))?)),
        }
    }

    pub fn search_volume(&self) -> Result<usize, CliError> {
        self.run
            .lattice
            .l
            .ok_or_else(|| CliError::Config("lattice.L: required for a lattice search".into()))
    }

    pub fn max_entry(&self) -> usize {
        self.run.lattice.max_entry.unwrap_or(64)
    }

    pub fn sweep(&self) -> Result<&SweepSection, CliError> {
        let s = &self.run.sweep;
        if s.dims.is_empty() {
            return Err(self.field_error("sweep", "dims", "sweep list is empty"));
        }
        if let Some((i, _)) = s.dims.iter().enumerate().find(|(_, &d)| d == 0) {
            return Err(self.field_error("sweep", "dims", format!("entry {i} must be positive")));
        }
        if !(s.spread_product > 0.0 && s.spread_product <= 1.0) {
            return Err(self.field_error("sweep", "spread_product", "must lie in (0, 1]"));
        }
        if s.delta_d.is_empty() {
            return Err(self.field_error("sweep", "delta_D", "sweep list is empty"));
        }
        if let Some((i, d)) = s.delta_d.iter().enumerate().find(|(_, &d)| !(d > 0.0 && d < 1.0)) {
            return Err(self.field_error("sweep", "delta_D", format!("entry {i} = {d} must lie in (0, 1)")));
        }
        Ok(s)
    }

    pub fn mse(&self) -> Result<&MseSection, CliError> {
        let m = &self.run.mse;
        if m.trials == 0 {
            return Err(self.field_error("mse", "trials", "must be at least 1"));
        }
        if let Some(a) = m.alpha_db {
            if !a.is_finite() {
                return Err(self.field_error("mse", "alpha_db", "must be finite"));
            }
        }
        Ok(m)
    }

    pub fn phases(&self) -> PilotPhases {
        match self.run.mse.phase_seed {
            Some(seed) => PilotPhases::PseudoRandom { seed },
            None => PilotPhases::Ones,
        }
    }
}

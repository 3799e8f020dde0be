use serde::{Deserialize, Serialize};

use super::{Domain, GridConfig};
use crate::error::{Error, Result};

/// One-dimensional power profile (delay power profile or Doppler spectrum).
///
/// Profiles are evaluated on the support `[-spread/2, spread/2]` of their
/// domain and are zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PowerProfile {
    /// Constant `level` on the support.
    Rectangular { level: f64 },
    /// `peak * max(0, 1 - |x| / half_width)`; `half_width` defaults to the
    /// support edge `spread / 2`.
    Triangular { peak: f64, half_width: Option<f64> },
    /// Linear interpolation through `(x, value)` samples with increasing `x`,
    /// zero outside the sampled range.
    Tabulated { points: Vec<(f64, f64)> },
}

impl PowerProfile {
    pub fn eval(&self, x: f64, spread: f64) -> f64 {
        let edge = 0.5 * spread;
        if x.abs() > edge * (1.0 + 1e-12) {
            return 0.0;
        }
        match self {
            PowerProfile::Rectangular { level } => *level,
            PowerProfile::Triangular { peak, half_width } => {
                let hw = half_width.unwrap_or(edge);
                peak * (1.0 - x.abs() / hw).max(0.0)
            }
            PowerProfile::Tabulated { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x < first.0 || x > last.0 {
                    return 0.0;
                }
                let i = points.partition_point(|p| p.0 <= x);
                if i == 0 {
                    return first.1;
                }
                if i == points.len() {
                    return last.1;
                }
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn at_origin(&self, spread: f64) -> f64 {
        self.eval(0.0, spread)
    }

    /// Sorted breakpoints covering the support, including every kink.
    pub fn breakpoints(&self, spread: f64) -> Vec<f64> {
        let edge = 0.5 * spread;
        let mut pts = vec![-edge, edge];
        match self {
            PowerProfile::Rectangular { .. } => {}
            PowerProfile::Triangular { half_width, .. } => {
                pts.push(0.0);
                if let Some(hw) = half_width {
                    pts.extend([-hw, *hw]);
                }
            }
            PowerProfile::Tabulated { points } => pts.extend(points.iter().map(|p| p.0)),
        }
        pts.retain(|x| x.abs() <= edge);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * edge);
        pts
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        match self {
            PowerProfile::Rectangular { level } => {
                if !(level.is_finite() && *level > 0.0) {
                    return Err(Error::invalid(name, "rectangular level must be positive"));
                }
            }
            PowerProfile::Triangular { peak, half_width } => {
                if !(peak.is_finite() && *peak > 0.0) {
                    return Err(Error::invalid(name, "triangular peak must be positive"));
                }
                if let Some(hw) = half_width {
                    if !(hw.is_finite() && *hw > 0.0) {
                        return Err(Error::invalid(name, "half width must be positive"));
                    }
                }
            }
            PowerProfile::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::invalid(name, "tabulated profile needs two samples"));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::invalid(name, "sample positions must increase"));
                }
                if points
                    .iter()
                    .any(|p| !p.0.is_finite() || !p.1.is_finite() || p.1 < 0.0)
                {
                    return Err(Error::invalid(name, "samples must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Separable scattering description: delay and Doppler supports with their
/// power profiles, `S(τ, ν) = P_τ(τ) P_ν(ν)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    tau_d: f64,
    nu_d: f64,
    delay: PowerProfile,
    doppler: PowerProfile,
}

impl ChannelProfile {
    pub fn new(tau_d: f64, nu_d: f64, delay: PowerProfile, doppler: PowerProfile) -> Result<Self> {
        if !(tau_d.is_finite() && tau_d > 0.0) {
            return Err(Error::invalid("tau_D", "delay spread must be positive"));
        }
        if !(nu_d.is_finite() && nu_d > 0.0) {
            return Err(Error::invalid("nu_D", "Doppler spread must be positive"));
        }
        if tau_d * nu_d >= 1.0 {
            return Err(Error::invalid(
                "Delta_D",
                format!("spread factor {} must be below 1", tau_d * nu_d),
            ));
        }
        delay.validate("delay_profile")?;
        doppler.validate("doppler_profile")?;
        let profile = ChannelProfile {
            tau_d,
            nu_d,
            delay,
            doppler,
        };
        if !(profile.s0() > 0.0) {
            return Err(Error::invalid("S0", "profiles must be positive at the origin"));
        }
        Ok(profile)
    }

    /// Rectangular scattering function with amplitude `s0`, split evenly
    /// between the two domains.
    pub fn rectangular(tau_d: f64, nu_d: f64, s0: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::invalid("S0", "must be positive"));
        }
        let level = s0.sqrt();
        Self::new(
            tau_d,
            nu_d,
            PowerProfile::Rectangular { level },
            PowerProfile::Rectangular { level },
        )
    }

    pub fn tau_d(&self) -> f64 {
        self.tau_d
    }

    pub fn nu_d(&self) -> f64 {
        self.nu_d
    }

    /// `Δ_D = τ_D ν_D`.
    pub fn spread_factor(&self) -> f64 {
        self.tau_d * self.nu_d
    }

    /// The grid-level model neglects ICI; it is only trustworthy for `Δ_D ≪ 1`.
    pub fn exceeds_underspread_hint(&self) -> bool {
        self.spread_factor() > 0.1
    }

    pub fn s0(&self) -> f64 {
        self.delay.at_origin(self.tau_d) * self.doppler.at_origin(self.nu_d)
    }

    /// `γ = S_0 τ_D ν_D`.
    pub fn gamma(&self) -> f64 {
        self.s0() * self.spread_factor()
    }

    pub fn spread(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Delay => self.tau_d,
            Domain::Doppler => self.nu_d,
        }
    }

    pub fn power_profile(&self, domain: Domain) -> &PowerProfile {
        match domain {
            Domain::Delay => &self.delay,
            Domain::Doppler => &self.doppler,
        }
    }

    /// Dimensionless product `F τ_D` (delay) or `T ν_D` (Doppler).
    pub fn normalized_spread(&self, grid: &GridConfig, domain: Domain) -> f64 {
        grid.step(domain) * self.spread(domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_defaults_to_support_edge() {
        let p = PowerProfile::Triangular {
            peak: 2.0,
            half_width: None,
        };
        assert_eq!(p.eval(0.0, 4.0), 2.0);
        assert!((p.eval(1.0, 4.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.eval(2.0, 4.0), 0.0);
        assert_eq!(p.eval(2.5, 4.0), 0.0);
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let p = PowerProfile::Tabulated {
            points: vec![(-1.0, 0.0), (0.0, 2.0), (1.0, 1.0)],
        };
        assert!((p.eval(-0.5, 2.0) - 1.0).abs() < 1e-15);
        assert!((p.eval(0.5, 2.0) - 1.5).abs() < 1e-15);
        assert_eq!(p.eval(0.0, 2.0), 2.0);
        assert_eq!(p.breakpoints(2.0), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn rectangular_shortcut_has_requested_s0() {
        let c = ChannelProfile::rectangular(1e-6, 100.0, 3.0).unwrap();
        assert!((c.s0() - 3.0).abs() < 1e-12);
        assert!((c.gamma() - 3.0 * 1e-4).abs() < 1e-16);
        assert!(!c.exceeds_underspread_hint());
    }

    #[test]
    fn rejects_overspread_channel() {
        assert!(ChannelProfile::rectangular(1e-3, 1e3, 1.0).is_err());
        let c = ChannelProfile::rectangular(1e-3, 200.0, 1.0).unwrap();
        assert!(c.exceeds_underspread_hint());
    }

    #[test]
    fn rejects_bad_tabulation() {
        let p = PowerProfile::Tabulated {
            points: vec![(0.0, 1.0), (0.0, 2.0)],
        };
        assert!(ChannelProfile::new(1.0, 0.1, p.clone(), p).is_err());
    }
}

//! Lattice pilot patterns and the bound-attainment condition.
//!
//! A pilot lattice is `{V p + r : p ∈ ℤ²}` reduced modulo `(M, N)`. Its
//! unnormalized 2D-DFT is `K e^{-j2π k̃ᵀr}` on the reciprocal lattice
//! `{k̃ = (m̃/M, ñ/N) : Vᵀk̃ ∈ ℤ²}` and zero elsewhere. The approximate LMMSE
//! error reaches its lower bound exactly when the Gram matrix
//! `U Diag(c_p) Uᴴ` is diagonal, i.e. when no nonzero reciprocal-lattice point
//! falls inside the rectangle of DFT index differences spanned by the
//! truncated bases.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

use crate::covariance::{ChannelProfile, GridConfig};
use crate::error::{Error, Result};
use crate::estimator::{NoiseDataStats, PilotPattern};

/// Integer sampling matrix `V = [a, b]` (columns) with bias `r = α a + β b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Row-major: `[[a1, b1], [a2, b2]]`.
    v: [[i64; 2]; 2],
    bias: [i64; 2],
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl LatticeSpec {
    pub fn new(v: [[i64; 2]; 2], bias: [i64; 2]) -> Result<Self> {
        let spec = LatticeSpec { v, bias };
        if spec.det() == 0 {
            return Err(Error::invalid("V", "sampling matrix is singular"));
        }
        spec.check_bias()?;
        Ok(spec)
    }

    /// Lattice spanned by columns `a` and `b`, zero bias.
    pub fn from_columns(a: [i64; 2], b: [i64; 2]) -> Result<Self> {
        Self::new([[a[0], b[0]], [a[1], b[1]]], [0, 0])
    }

    /// Lower-triangular Hermite normal form `[[d1, 0], [e, d2]]`.
    pub fn hnf(d1: i64, e: i64, d2: i64) -> Result<Self> {
        Self::new([[d1, 0], [e, d2]], [0, 0])
    }

    pub fn with_bias(self, bias: [i64; 2]) -> Result<Self> {
        Self::new(self.v, bias)
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.v
    }

    pub fn a(&self) -> [i64; 2] {
        [self.v[0][0], self.v[1][0]]
    }

    pub fn b(&self) -> [i64; 2] {
        [self.v[0][1], self.v[1][1]]
    }

    pub fn bias(&self) -> [i64; 2] {
        self.bias
    }

    pub fn det(&self) -> i64 {
        self.v[0][0] * self.v[1][1] - self.v[0][1] * self.v[1][0]
    }

    /// Cell volume `L = |det V|`.
    pub fn volume(&self) -> usize {
        self.det().unsigned_abs() as usize
    }

    /// `(α, β)` numerators over `det V`: `V⁻¹ r = (num_α, num_β) / det`.
    fn bias_coefficients(&self, r: [i64; 2]) -> ([i64; 2], i64) {
        let [[a1, b1], [a2, b2]] = self.v;
        ([b2 * r[0] - b1 * r[1], -a2 * r[0] + a1 * r[1]], self.det())
    }

    /// `0 ≤ α, β < 1` with `α a` and `β b` integer vectors.
    fn check_bias(&self) -> Result<()> {
        let (num, det) = self.bias_coefficients(self.bias);
        let (num, det) = if det < 0 { ([-num[0], -num[1]], -det) } else { (num, det) };
        for (coef, col) in num.iter().zip([self.a(), self.b()]) {
            if *coef < 0 || *coef >= det {
                return Err(Error::invalid("bias", "coefficients must lie in [0, 1)"));
            }
            if col.iter().any(|c| (coef * c) % det != 0) {
                return Err(Error::invalid("bias", "alpha*a and beta*b must be integer vectors"));
            }
        }
        Ok(())
    }

    /// Every bias `α a + β b` with `α a`, `β b` integer and `α, β ∈ [0, 1)`.
    pub fn valid_biases(&self) -> Vec<[i64; 2]> {
        let (a, b) = (self.a(), self.b());
        let (ga, gb) = (gcd(a[0], a[1]), gcd(b[0], b[1]));
        let mut out = Vec::with_capacity((ga * gb) as usize);
        for i in 0..ga {
            for j in 0..gb {
                out.push([
                    i * a[0] / ga + j * b[0] / gb,
                    i * a[1] / ga + j * b[1] / gb,
                ]);
            }
        }
        out
    }

    /// `K = MN / L`; errors unless `L` divides `MN`.
    pub fn pilot_count(&self, grid: &GridConfig) -> Result<usize> {
        let l = self.volume();
        if grid.len() % l != 0 {
            return Err(Error::invalid(
                "V",
                format!("|det V| = {l} does not divide MN = {}", grid.len()),
            ));
        }
        Ok(grid.len() / l)
    }

    /// Whether the lattice contains `M ℤ × N ℤ`, i.e. is well defined on the torus.
    pub fn is_periodic(&self, grid: &GridConfig) -> bool {
        let [[a1, b1], [a2, b2]] = self.v;
        let det = self.det();
        let (m, n) = (grid.m() as i64, grid.n() as i64);
        // V⁻¹ (M, 0)ᵀ and V⁻¹ (0, N)ᵀ must be integer
        [b2 * m, a2 * m, b1 * n, a1 * n].iter().all(|x| x % det == 0)
    }
}

/// Boundary convention for the feasibility rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionBoundary {
    /// `|m̃| ≤ r_τ - 1`: every index difference of the truncated bases. This is
    /// exactly the Gram-diagonality condition.
    #[default]
    Inclusive,
    /// `|m̃| < r_τ - 1`.
    Strict,
}

/// Rectangle of 2D-DFT bins that must vanish (except the origin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityRegion {
    r_tau: usize,
    r_nu: usize,
    boundary: RegionBoundary,
}

impl FeasibilityRegion {
    pub fn new(r_tau: usize, r_nu: usize, boundary: RegionBoundary) -> Result<Self> {
        for (name, r) in [("r_tau", r_tau), ("r_nu", r_nu)] {
            if r == 0 || r % 2 == 0 {
                return Err(Error::invalid(name, "truncation rank must be odd"));
            }
        }
        Ok(FeasibilityRegion {
            r_tau,
            r_nu,
            boundary,
        })
    }

    pub fn r_tau(&self) -> usize {
        self.r_tau
    }

    pub fn r_nu(&self) -> usize {
        self.r_nu
    }

    pub fn boundary(&self) -> RegionBoundary {
        self.boundary
    }

    fn limit(&self, r: usize) -> i64 {
        match self.boundary {
            RegionBoundary::Inclusive => r as i64 - 1,
            // the origin always belongs to the region
            RegionBoundary::Strict => (r as i64 - 2).max(0),
        }
    }

    /// Signed offsets `(m̃, ñ)` in the region, excluding the origin and any
    /// offset that aliases an earlier one modulo `(M, N)`.
    pub fn offsets(&self, grid: &GridConfig) -> Vec<(i64, i64)> {
        let (m, n) = (grid.m() as i64, grid.n() as i64);
        let (lm, ln) = (self.limit(self.r_tau), self.limit(self.r_nu));
        let mut seen = HashSet::new();
        seen.insert((0, 0));
        let mut out = Vec::new();
        for dn in -ln..=ln {
            for dm in -lm..=lm {
                if seen.insert((dm.rem_euclid(m), dn.rem_euclid(n))) {
                    out.push((dm, dn));
                }
            }
        }
        out
    }
}

/// One offending 2D-DFT bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub m_offset: i64,
    pub n_offset: i64,
    /// `|C̃_p|` at the bin (FFT check only).
    pub magnitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn violation_offsets(&self) -> Vec<(i64, i64)> {
        self.violations.iter().map(|v| (v.m_offset, v.n_offset)).collect()
    }
}

/// Pilot mask of the lattice on the grid, with `σ_p² = 1`.
///
/// The pilot set is the orbit of `r` under the generators `a`, `b` in
/// `ℤ_M × ℤ_N`. Its size equals `K = MN/L` exactly when the lattice contains
/// `M ℤ × N ℤ`; any other size is reported as a degenerate lattice.
pub fn mask_from_lattice(spec: &LatticeSpec, grid: &GridConfig) -> Result<PilotPattern> {
    let k = spec.pilot_count(grid)?;
    let (m, n) = (grid.m() as i64, grid.n() as i64);
    let reduce = |p: [i64; 2]| [p[0].rem_euclid(m), p[1].rem_euclid(n)];
    let gens = [reduce(spec.a()), reduce(spec.b())];
    let mut mask = vec![false; grid.len()];
    let start = reduce(spec.bias());
    let mut queue = VecDeque::from([start]);
    mask[(start[1] * m + start[0]) as usize] = true;
    let mut found = 1usize;
    while let Some(p) = queue.pop_front() {
        for g in &gens {
            let q = reduce([p[0] + g[0], p[1] + g[1]]);
            let idx = (q[1] * m + q[0]) as usize;
            if !mask[idx] {
                mask[idx] = true;
                found += 1;
                queue.push_back(q);
            }
        }
    }
    if found != k {
        return Err(Error::DegenerateLattice { expected: k, found });
    }
    PilotPattern::from_mask(grid.m(), grid.n(), mask, 1.0)
}

/// Unnormalized 2D-DFT `C̃_p[m̃, ñ] = Σ_{m,n} C_p[m, n] e^{-j2π(m̃m/M + ññ/N)}` (M × N).
pub fn mask_2dfft(pattern: &PilotPattern) -> DMatrix<Complex64> {
    let (m, n) = (pattern.m(), pattern.n());
    let mut planner = FftPlanner::<f64>::new();
    // column-major storage: each column (fixed n) is contiguous in m
    let mut data: Vec<Complex64> = pattern
        .mask()
        .iter()
        .map(|&p| Complex64::new(if p { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let fft_m = planner.plan_fft_forward(m);
    for col in data.chunks_exact_mut(m) {
        fft_m.process(col);
    }
    let fft_n = planner.plan_fft_forward(n);
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..m {
        for (j, r) in row.iter_mut().enumerate() {
            *r = data[j * m + i];
        }
        fft_n.process(&mut row);
        for (j, r) in row.iter().enumerate() {
            data[j * m + i] = *r;
        }
    }
    DMatrix::from_vec(m, n, data)
}

/// Checks that `|C̃_p|` vanishes on the region (except the origin) and equals `K` at the origin.
pub fn check_condition_fft(pattern: &PilotPattern, region: &FeasibilityRegion) -> FeasibilityReport {
    let spectrum = mask_2dfft(pattern);
    let (m, n) = (pattern.m() as i64, pattern.n() as i64);
    let k = pattern.pilot_count() as f64;
    let eps = 1e-9 * k.max(1.0);
    let grid_stub = GridShape { m: m as usize, n: n as usize };
    let mut violations = Vec::new();
    let origin = spectrum[(0, 0)].norm();
    if k == 0.0 || (origin - k).abs() > eps {
        violations.push(Violation {
            m_offset: 0,
            n_offset: 0,
            magnitude: Some(origin),
        });
    }
    for (dm, dn) in region_offsets(region, &grid_stub) {
        let mag = spectrum[(dm.rem_euclid(m) as usize, dn.rem_euclid(n) as usize)].norm();
        if mag >= eps {
            violations.push(Violation {
                m_offset: dm,
                n_offset: dn,
                magnitude: Some(mag),
            });
        }
    }
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}

struct GridShape {
    m: usize,
    n: usize,
}

fn region_offsets(region: &FeasibilityRegion, shape: &GridShape) -> Vec<(i64, i64)> {
    // T and F do not matter for the offsets
    let grid = GridConfig::new(shape.m, shape.n, 1.0, 1.0).expect("positive grid");
    region.offsets(&grid)
}

/// Exact integer test: the bin `(m̃, ñ)` is on the reciprocal lattice iff
/// `N a₁ m̃ + M a₂ ñ ≡ 0` and `N b₁ m̃ + M b₂ ñ ≡ 0 (mod MN)`.
pub fn check_condition_analytic(
    spec: &LatticeSpec,
    grid: &GridConfig,
    region: &FeasibilityRegion,
) -> Result<FeasibilityReport> {
    spec.pilot_count(grid)?;
    let (m, n) = (grid.m() as i128, grid.n() as i128);
    let mn = m * n;
    let [[a1, b1], [a2, b2]] = spec.matrix().map(|r| r.map(|x| x as i128));
    let violations: Vec<Violation> = region
        .offsets(grid)
        .into_iter()
        .filter(|&(dm, dn)| {
            let (dm, dn) = (dm as i128, dn as i128);
            (n * a1 * dm + m * a2 * dn) % mn == 0 && (n * b1 * dm + m * b2 * dn) % mn == 0
        })
        .map(|(dm, dn)| Violation {
            m_offset: dm,
            n_offset: dn,
            magnitude: None,
        })
        .collect();
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

/// Which count of diagonal terms enters the bound numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundConvention {
    /// `D = r_τ r_ν`, the dimension of the truncated eigenvalue matrix.
    #[default]
    Product,
    /// `D = r_τ + r_ν`.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub convention: BoundConvention,
    pub diagonal_count: usize,
    /// `D / (TF/S₀ + β/(M σ_n²))`.
    pub value: f64,
    /// `MN·TF·Δ_D / (TF/S₀ + β/(M σ_n²))`, using `r_τ r_ν ≈ MN·TF·Δ_D`.
    pub asymptotic: f64,
}

/// Lower bound on `tr(C_e)` under the power equality `K σ_p² = N β`.
pub fn lower_bound(
    grid: &GridConfig,
    profile: &ChannelProfile,
    stats: &NoiseDataStats,
    r_tau: usize,
    r_nu: usize,
    convention: BoundConvention,
) -> Result<LowerBound> {
    if r_tau == 0 || r_nu == 0 {
        return Err(Error::invalid("rank", "truncation ranks must be positive"));
    }
    let d = match convention {
        BoundConvention::Product => r_tau * r_nu,
        BoundConvention::Sum => r_tau + r_nu,
    };
    let denom = grid.tf() / profile.s0() + stats.beta / (grid.m() as f64 * stats.sigma_n2);
    Ok(LowerBound {
        convention,
        diagonal_count: d,
        value: d as f64 / denom,
        asymptotic: grid.len() as f64 * grid.tf() * profile.spread_factor() / denom,
    })
}

/// Feasible sublattices of index `L`, one per lattice, in Hermite normal form.
///
/// Enumerates `[[d1, 0], [e, d2]]` with `d1 d2 = L` and `0 ≤ e < d2`, keeping
/// entries `≤ max_entry`, lattices that are periodic on the grid, and those
/// passing [`check_condition_analytic`]. Output is sorted by `(d1, e)`.
pub fn search_lattices(
    grid: &GridConfig,
    volume: usize,
    region: &FeasibilityRegion,
    max_entry: usize,
) -> Result<Vec<LatticeSpec>> {
    if volume == 0 || grid.len() % volume != 0 {
        return Err(Error::invalid("L", format!("{volume} does not divide MN = {}", grid.len())));
    }
    if max_entry == 0 {
        return Err(Error::invalid("max_entry", "must be at least 1"));
    }
    let l = volume as i64;
    let max = max_entry as i64;
    let mut out = Vec::new();
    for d1 in (1..=l).filter(|d| l % d == 0) {
        let d2 = l / d1;
        if d1 > max || d2 > max {
            continue;
        }
        for e in 0..d2.min(max + 1) {
            let spec = LatticeSpec::hnf(d1, e, d2)?;
            if !spec.is_periodic(grid) {
                continue;
            }
            let verdict = check_condition_analytic(&spec, grid, region)?;
            debug_assert_eq!(
                verdict.feasible,
                check_condition_fft(&mask_from_lattice(&spec, grid)?, region).feasible,
                "checkers disagree on {spec:?}"
            );
            if verdict.feasible {
                out.push(spec);
            }
        }
    }
    out.sort_by_key(|s| (s.v[0][0], s.v[1][0], s.v[1][1]));
    Ok(out)
}

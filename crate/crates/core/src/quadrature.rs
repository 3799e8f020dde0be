//! Composite Gauss–Legendre quadrature with automatic node doubling.
//!
//! Integrals are split at caller-supplied breakpoints (profile kinks) and each
//! piece is integrated with the same node count. The node count doubles until
//! the relative change between successive estimates falls below the tolerance.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Node-doubling schedule for [`integrate_vector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            initial_nodes: 16,
            max_nodes: 1 << 14,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.initial_nodes < 8 {
            return Err(Error::invalid("initial_nodes", "at least 8 nodes are required"));
        }
        if self.max_nodes < self.initial_nodes {
            return Err(Error::invalid("max_nodes", "must be >= initial_nodes"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi-style initial
/// guess; nodes come out in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Result of a vector-valued quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIntegral {
    pub values: Vec<Complex64>,
    /// Node count per piece used for the returned values.
    pub nodes: usize,
    /// Relative change between the last two node counts.
    pub rel_change: f64,
    pub converged: bool,
}

/// Integrates a vector-valued integrand over the union of `[breaks[i], breaks[i+1]]`.
///
/// `integrand(x, out)` must overwrite `out` (length `outputs`) with the
/// integrand at `x`. The change metric is the max-norm of the difference
/// divided by the max-norm of the newer estimate.
pub fn integrate_vector<F>(
    breaks: &[f64],
    outputs: usize,
    spec: &QuadratureSpec,
    mut integrand: F,
) -> Result<VectorIntegral>
where
    F: FnMut(f64, &mut [Complex64]) -> Result<()>,
{
    spec.validate()?;
    if breaks.len() < 2 {
        return Err(Error::invalid("breaks", "need at least two breakpoints"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); outputs];
    let mut rule = |n: usize, integrand: &mut F| -> Result<Vec<Complex64>> {
        let (t, w) = gauss_legendre(n);
        let mut acc = vec![Complex64::new(0.0, 0.0); outputs];
        for piece in breaks.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            if hi <= lo {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (ti, wi) in t.iter().zip(&w) {
                integrand(mid + half * ti, &mut buf)?;
                let scale = wi * half;
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += b * scale;
                }
            }
        }
        Ok(acc)
    };

    let mut n = spec.initial_nodes;
    let mut prev = rule(n, &mut integrand)?;
    loop {
        let next_n = n * 2;
        if next_n > spec.max_nodes {
            return Ok(VectorIntegral {
                values: prev,
                nodes: n,
                rel_change: f64::INFINITY,
                converged: false,
            });
        }
        let next = rule(next_n, &mut integrand)?;
        let diff = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let size = next.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let rel_change = if size > 0.0 { diff / size } else { diff };
        if rel_change < spec.rel_tol {
            return Ok(VectorIntegral {
                values: next,
                nodes: next_n,
                rel_change,
                converged: true,
            });
        }
        if next_n * 2 > spec.max_nodes {
            return Ok(VectorIntegral {
                values: next,
                nodes: next_n,
                rel_change,
                converged: false,
            });
        }
        prev = next;
        n = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 64, 257, 1024] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(6);
        // integral of x^10 over [-1, 1] = 2/11
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(5);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn rejects_too_few_nodes() {
        let spec = QuadratureSpec {
            initial_nodes: 4,
            ..Default::default()
        };
        let r = integrate_vector(&[0.0, 1.0], 1, &spec, |_, o| {
            o[0] = Complex64::new(1.0, 0.0);
            Ok(())
        });
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn oscillatory_integral_converges() {
        // integral of e^{j 40 x} over [-1, 1] = 2 sin(40)/40
        let r = integrate_vector(&[-1.0, 1.0], 1, &QuadratureSpec::default(), |x, o| {
            o[0] = Complex64::cis(40.0 * x);
            Ok(())
        })
        .unwrap();
        assert!(r.converged);
        let expect = 2.0 * 40f64.sin() / 40.0;
        assert!((r.values[0].re - expect).abs() < 1e-12);
        assert!(r.values[0].im.abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let spec = QuadratureSpec {
            initial_nodes: 8,
            max_nodes: 16,
            rel_tol: 1e-14,
        };
        let r = integrate_vector(&[-1.0, 1.0], 1, &spec, |x, o| {
            o[0] = Complex64::cis(200.0 * x);
            Ok(())
        })
        .unwrap();
        assert!(!r.converged);
    }
}

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Normalized sinc, `sin(πx)/(πx)`, exactly zero at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Hermitian Toeplitz matrix stored by its first column.
///
/// `A[i, j] = gen[i - j]` with `gen[-k] = conj(gen[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianToeplitz {
    gen: Vec<Complex64>,
}

impl HermitianToeplitz {
    pub fn new(mut gen: Vec<Complex64>) -> Result<Self> {
        if gen.is_empty() {
            return Err(Error::invalid("gen", "generating sequence is empty"));
        }
        if gen.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::invalid("gen", "generating sequence must be finite"));
        }
        let g0 = gen[0];
        if g0.im.abs() > 1e-12 * g0.re.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("gen", "gen[0] must be real"));
        }
        gen[0] = Complex64::new(g0.re, 0.0);
        Ok(HermitianToeplitz { gen })
    }

    pub fn from_real(gen: &[f64]) -> Result<Self> {
        Self::new(gen.iter().map(|&g| Complex64::new(g, 0.0)).collect())
    }

    /// Normalized sinc factor `gen[k] = sinc(k * product)`.
    pub fn sinc(dim: usize, product: f64) -> Self {
        let gen = (0..dim)
            .map(|k| Complex64::new(sinc(k as f64 * product), 0.0))
            .collect();
        HermitianToeplitz { gen }
    }

    pub fn dim(&self) -> usize {
        self.gen.len()
    }

    pub fn generator(&self) -> &[Complex64] {
        &self.gen
    }

    pub fn at_lag(&self, lag: isize) -> Complex64 {
        if lag >= 0 {
            self.gen[lag as usize]
        } else {
            self.gen[lag.unsigned_abs()].conj()
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.at_lag(i as isize - j as isize)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.entry(i, j))
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianToeplitz {
            gen: self.gen.iter().map(|g| g * s).collect(),
        }
    }

    /// `self - other`, lag by lag.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "Toeplitz difference",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(HermitianToeplitz {
            gen: self.gen.iter().zip(&other.gen).map(|(a, b)| a - b).collect(),
        })
    }

    /// `Σ_{i,j} conj(A[i,j]) B[i,j]`, computed lag by lag.
    pub fn frobenius_inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "Toeplitz inner product",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let d = self.dim();
        let mut acc = self.gen[0].conj() * other.gen[0] * d as f64;
        for k in 1..d {
            let w = (d - k) as f64;
            let pos = self.gen[k].conj() * other.gen[k];
            // negative lag contributes the conjugate of the positive one
            acc += (pos + pos.conj()) * w;
        }
        Ok(acc)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        let d = self.dim();
        let mut acc = self.gen[0].norm_sqr() * d as f64;
        for k in 1..d {
            acc += 2.0 * (d - k) as f64 * self.gen[k].norm_sqr();
        }
        acc
    }

    /// `ε_psd = 1e-10 · gen[0]`.
    pub fn psd_tolerance(&self) -> f64 {
        1e-10 * self.gen[0].re.abs()
    }

    /// Eigenvalues of the dense matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_dense())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn check_psd(&self) -> Result<()> {
        let min = self.eigenvalues()[0];
        let tol = self.psd_tolerance();
        if min < -tol {
            return Err(Error::NotPsd {
                eigenvalue: min,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `γ sinc((m1-m2) p_τ) sinc((n1-n2) p_ν)` assembled entry by entry, `k = n·M + m`.
pub fn dense_sinc_covariance(m: usize, n: usize, p_tau: f64, p_nu: f64, gamma: f64) -> DMatrix<Complex64> {
    let mut c = DMatrix::zeros(m * n, m * n);
    for n1 in 0..n {
        for m1 in 0..m {
            for n2 in 0..n {
                for m2 in 0..m {
                    let v = gamma
                        * sinc((m1 as f64 - m2 as f64) * p_tau)
                        * sinc((n1 as f64 - n2 as f64) * p_nu);
                    c[(n1 * m + m1, n2 * m + m2)] = Complex64::new(v, 0.0);
                }
            }
        }
    }
    c
}

pub struct DenseLmmse {
    pub estimate: DVector<Complex64>,
    pub error_cov: DMatrix<Complex64>,
}

/// Normal equations with `C_y = B_p C_g B_pᴴ + σ_d² Diag(c_d) ⊙ C_g + σ_n² I`,
/// solved by LU on the full `MN × MN` system.
pub fn dense_lmmse(
    cg: &DMatrix<Complex64>,
    mask: &[bool],
    pilot_values: &[Complex64],
    sigma_d2: f64,
    sigma_n2: f64,
    y: &DVector<Complex64>,
) -> DenseLmmse {
    let len = cg.nrows();
    let mut x = DVector::zeros(len);
    let mut next = pilot_values.iter();
    for k in 0..len {
        if mask[k] {
            x[k] = *next.next().unwrap();
        }
    }
    let bp = DMatrix::from_diagonal(&x);
    let mut cy = &bp * cg * bp.adjoint();
    for k in 0..len {
        if !mask[k] {
            cy[(k, k)] += cg[(k, k)] * sigma_d2;
        }
        cy[(k, k)] += Complex64::new(sigma_n2, 0.0);
    }
    let cy_inv = cy.lu().try_inverse().expect("C_y invertible");
    let gain = cg * bp.adjoint() * &cy_inv;
    DenseLmmse {
        estimate: &gain * y,
        error_cov: cg - &gain * &bp * cg,
    }
}

/// Writes straight to the process stderr so the line survives output capture.
pub fn report(line: &str) {
    let mut err = std::io::stderr();
    let _ = writeln!(err, "{line}");
}

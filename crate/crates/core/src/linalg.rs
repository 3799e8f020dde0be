use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex square roots never fail, so an indefinite input shows up as a
/// pivot that is not real and positive.
fn factor(a: DMatrix<Complex64>) -> Option<Cholesky<Complex64, Dyn>> {
    let c = Cholesky::new(a)?;
    let ok = c
        .l_dirty()
        .diagonal()
        .iter()
        .all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re && d.re.is_finite());
    ok.then_some(c)
}

/// Cholesky factorization of a Hermitian matrix, retried once with diagonal
/// jitter `1e-12 · tr(A) / dim` when the plain factorization fails.
pub(crate) fn cholesky_with_jitter(
    a: DMatrix<Complex64>,
    context: &'static str,
) -> Result<Cholesky<Complex64, Dyn>> {
    let dim = a.nrows();
    if dim == 0 {
        return factor(a).ok_or(Error::Singular { context });
    }
    let trace: f64 = (0..dim).map(|i| a[(i, i)].re).sum();
    if let Some(c) = factor(a.clone()) {
        return Ok(c);
    }
    let jitter = 1e-12 * trace.abs() / dim as f64;
    if !(jitter > 0.0) {
        return Err(Error::Singular { context });
    }
    let mut b = a;
    for i in 0..dim {
        b[(i, i)] += Complex64::new(jitter, 0.0);
    }
    factor(b).ok_or(Error::Singular { context })
}

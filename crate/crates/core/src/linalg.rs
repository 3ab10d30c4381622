use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// First diagonal jitter tried when a PSD matrix is not numerically PD.
pub(crate) const BASE_JITTER: f64 = 1e-10;
const MAX_JITTER: f64 = 1e-6;

/// Relative eigenvalue tolerance for PSD checks.
pub(crate) const PSD_REL_TOL: f64 = 1e-8;

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    max_asymmetry(m) <= rel_tol * scale
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub(crate) fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    (min, max)
}

/// `min eig >= -rel_tol * max |eig|`.
pub(crate) fn is_psd(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let (min, max) = eigen_range(m);
    min >= -rel_tol * max.abs().max(min.abs())
}

/// Square-root factor `Q diag(sqrt(max(l, 0)))` of a symmetric PSD matrix,
/// exact for singular inputs such as a zero noise covariance.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut factor = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(root);
    }
    factor
}

/// Cholesky factor of a symmetric PSD matrix, adding diagonal jitter
/// (starting at [`BASE_JITTER`]) if the plain factorization fails.
/// Returns the factor and the jitter that was applied.
pub(crate) fn cholesky_jittered(m: &DMatrix<f64>, what: &str) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok((chol, 0.0));
    }
    let mut jitter = BASE_JITTER;
    while jitter <= MAX_JITTER {
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::Domain(format!(
        "{what} is not positive semidefinite (Cholesky failed with jitter up to {MAX_JITTER:e})"
    )))
}

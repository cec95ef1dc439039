//! Symmetric-matrix helpers: eigendecomposition, PSD repair, square roots.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.nrows();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Floor eigenvalues at zero. Errors when the most negative eigenvalue
/// falls below `neg_tol` (genuinely indefinite input); otherwise logs
/// nothing and returns the repaired matrix plus the repair magnitude.
pub fn psd_floor(m: &DMatrix<f64>, neg_tol: f64) -> Result<(DMatrix<f64>, f64)> {
    let (vals, vecs) = sym_eigen(m);
    let min_eig = vals[0];
    if min_eig < -neg_tol {
        return Err(Error::IndefiniteKernel { min_eig });
    }
    let repair = (-min_eig).max(0.0);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| v.max(0.0)),
    ));
    Ok((&vecs * d * vecs.transpose(), repair))
}

/// Symmetric PSD square root by spectral decomposition, flooring
/// eigenvalues at zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| v.max(0.0).sqrt()),
    ));
    &vecs * d * vecs.transpose()
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix, dropping
/// eigenvalues below `rel_tol` times the largest.
pub fn sym_pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let cut = vals.last().copied().unwrap_or(0.0).max(0.0) * rel_tol;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| if v > cut && v > 0.0 { 1.0 / v } else { 0.0 }),
    ));
    &vecs * d * vecs.transpose()
}

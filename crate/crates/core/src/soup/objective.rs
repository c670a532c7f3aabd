use crate::codes::CoefficientMatrix;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, DenseMatrix, Dictionary, TrainingMatrix};

/// `Y - D C^T`, accumulated atom by atom.
pub fn residual(y: &TrainingMatrix, d: &Dictionary, c: &CoefficientMatrix) -> DenseMatrix {
    let mut r = (**y).clone();
    for (j, col) in c.columns().iter().enumerate() {
        let atom = d.atom(j);
        for (i, v) in col.iter() {
            axpy(-v, atom, r.col_mut(i));
        }
    }
    r
}

/// `||Y - D C^T||_F^2`.
pub fn fit_error(y: &TrainingMatrix, d: &Dictionary, c: &CoefficientMatrix) -> f64 {
    let r = residual(y, d, c);
    dot(r.as_slice(), r.as_slice())
}

/// `||Y - sum_j d_j c_j^T||_F^2 + lambda^2 ||C||_0`.
///
/// The constraint terms vanish because the types enforce them.
pub fn objective(y: &TrainingMatrix, d: &Dictionary, c: &CoefficientMatrix, lambda: f64) -> f64 {
    fit_error(y, d, c) + lambda * lambda * c.nnz() as f64
}

/// Normalized sparse representation error `||Y - D C^T||_F / ||Y||_F`.
pub fn nsre(y: &TrainingMatrix, d: &Dictionary, c: &CoefficientMatrix) -> Result<f64> {
    let denom = y.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::config(
            "NSRE is undefined for an all-zero data matrix",
        ));
    }
    Ok(fit_error(y, d, c).sqrt() / denom)
}

/// `||C||_0 / (n N)` with `n` the signal dimension.
pub fn sparsity_factor(c: &CoefficientMatrix, signal_dim: usize) -> f64 {
    let denom = (signal_dim * c.rows()) as f64;
    if denom == 0.0 {
        return 0.0;
    }
    c.nnz() as f64 / denom
}

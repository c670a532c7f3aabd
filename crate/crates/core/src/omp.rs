//! Error-constrained orthogonal matching pursuit.
//!
//! The selected atoms are orthonormalized incrementally (Gram-Schmidt with
//! one re-orthogonalization pass), so each step costs one `D^T r` plus
//! `O(n s)` work, and the least-squares coefficients come from a triangular
//! solve at the end.

use crate::codes::SparseColumn;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Dictionary};

/// An atom whose component orthogonal to the selected span is below this
/// norm is treated as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmpConfig {
    /// Stop once `||y - D a||_2^2 <= error_bound`.
    pub error_bound: f64,
    /// Support cap; `None` means `min(n, J)`.
    pub max_nonzeros: Option<usize>,
}

impl OmpConfig {
    pub fn new(error_bound: f64) -> Self {
        Self {
            error_bound,
            max_nonzeros: None,
        }
    }

    fn cap(&self, d: &Dictionary) -> Result<usize> {
        let limit = d.dim().min(d.num_atoms());
        match self.max_nonzeros {
            None => Ok(limit),
            Some(0) => Err(Error::config("OMP max_nonzeros must be positive")),
            Some(m) if m > limit => Err(Error::config(format!(
                "OMP max_nonzeros {m} exceeds min(n, J) = {limit}"
            ))),
            Some(m) => Ok(m),
        }
    }
}

/// Why the greedy loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmpStatus {
    /// Squared residual reached the error bound.
    Converged,
    /// Support size hit the cap first.
    CapReached,
    /// The best remaining atom was numerically dependent on the support; it
    /// was dropped and the loop stopped.
    Singular,
    /// The residual is orthogonal to every atom.
    NoCorrelation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpCode {
    /// Length-`J` code, indexed by atom.
    pub code: SparseColumn,
    /// Atoms in selection order.
    pub support: Vec<usize>,
    pub residual_sq: f64,
    pub status: OmpStatus,
}

/// Greedy sparse code of `y` over `d` under `config`.
///
/// Each step picks the atom with the largest absolute correlation with the
/// residual (lowest index on ties), then re-projects `y` onto the span of the
/// selected atoms.
pub fn omp_code(d: &Dictionary, y: &[f64], config: &OmpConfig) -> Result<OmpCode> {
    let n = d.dim();
    if y.len() != n {
        return Err(Error::dim(format!(
            "signal has length {}, dictionary has {n} rows",
            y.len()
        )));
    }
    if config.error_bound.is_nan() || config.error_bound < 0.0 {
        return Err(Error::config("OMP error bound must be >= 0"));
    }
    let cap = config.cap(d)?;
    let atoms = d.num_atoms();

    let mut residual = y.to_vec();
    let mut residual_sq = dot(&residual, &residual);
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; atoms];
    // Orthonormal basis of the selected span, and R with D_S = Q R.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut proj: Vec<f64> = Vec::new();
    let mut corr = vec![0.0; atoms];

    let status = loop {
        if residual_sq <= config.error_bound {
            break OmpStatus::Converged;
        }
        if support.len() >= cap {
            break OmpStatus::CapReached;
        }

        d.transpose_mul(&residual, &mut corr);
        let mut best: Option<(usize, f64)> = None;
        for (k, &c) in corr.iter().enumerate() {
            if selected[k] {
                continue;
            }
            let a = c.abs();
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((k, a));
            }
        }
        let Some((k, magnitude)) = best.filter(|&(_, m)| m > 0.0) else {
            break OmpStatus::NoCorrelation;
        };
        debug_assert!(magnitude.is_finite());

        let mut w = d.atom(k).to_vec();
        let mut r_col = vec![0.0; basis.len() + 1];
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                r_col[i] += c;
                axpy(-c, q, &mut w);
            }
        }
        let w_norm = dot(&w, &w).sqrt();
        if w_norm < DEPENDENCE_TOL {
            break OmpStatus::Singular;
        }
        w.iter_mut().for_each(|v| *v /= w_norm);
        r_col[basis.len()] = w_norm;

        let alpha = dot(&w, &residual);
        axpy(-alpha, &w, &mut residual);
        residual_sq = dot(&residual, &residual);

        selected[k] = true;
        support.push(k);
        basis.push(w);
        r_cols.push(r_col);
        proj.push(alpha);
    };

    // Back substitution: R x = Q^T y.
    let s = support.len();
    let mut x = proj;
    for i in (0..s).rev() {
        let mut v = x[i];
        for (kk, col) in r_cols.iter().enumerate().skip(i + 1) {
            v -= col[i] * x[kk];
        }
        x[i] = v / r_cols[i][i];
    }

    let mut pairs: Vec<(usize, f64)> = support
        .iter()
        .copied()
        .zip(x)
        .filter(|&(_, v)| v != 0.0)
        .collect();
    pairs.sort_unstable_by_key(|&(k, _)| k);
    let code = SparseColumn::from_pairs(pairs)?;

    Ok(OmpCode {
        code,
        support,
        residual_sq,
        status,
    })
}

/// `D a` for a sparse code `a`.
pub fn synthesize(d: &Dictionary, code: &SparseColumn, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, v) in code.iter() {
        axpy(v, d.atom(k), out);
    }
}

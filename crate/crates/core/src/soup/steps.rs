//! The two closed-form block updates of the sum-of-outer-products learner.
//!
//! Both updates work on `E_j = Y - sum_{k != j} d_k c_k^T` without ever
//! forming it. The sparse-code target is
//!
//! ```text
//! b = Y^T d_j - C D^T d_j + c_j
//! ```
//!
//! and the atom target is
//!
//! ```text
//! h = Y c_j' - D C^T c_j' + d_j (c_j^T c_j')
//! ```
//!
//! where `c_j'` is the freshly computed code and `C`, `D` still hold the
//! previous `c_j`, `d_j`. Then `b = E_j^T d_j` and `h = E_j c_j'`.

use rand::Rng;
use rayon::prelude::*;

use crate::codes::{CoefficientMatrix, SparseColumn};
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm2, Dictionary, TrainingMatrix};
use crate::random::random_unit_vector;

/// What an atom becomes when its freshly updated code is all zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroCodePolicy {
    /// First standard basis vector `(1, 0, ..., 0)`.
    #[default]
    FirstBasis,
    /// Keep the atom from before the update.
    KeepPrevious,
    /// A fresh random unit vector from the learner's seeded generator.
    RandomUnit,
}

/// Signals per rayon task in `Y^T d`.
const GEMV_CHUNK: usize = 2048;
/// Atoms per rayon task in `Y^T D`.
const ATOM_GROUP: usize = 32;
/// Signals per cache block in `Y^T D` (256 KiB of data at n = 64).
const SIGNAL_BLOCK: usize = 512;

/// Entrywise hard thresholding: `b_i` if `|b_i| >= lambda`, else 0.
pub fn hard_threshold(b: &[f64], lambda: f64) -> Vec<f64> {
    b.iter()
        .map(|&v| if v.abs() >= lambda { v } else { 0.0 })
        .collect()
}

/// Hard thresholding at `lambda` followed by magnitude clipping at `bound`,
/// returned as a sparse column. Entries whose result is exactly zero are not
/// stored.
pub fn truncated_hard_threshold(b: &[f64], lambda: f64, bound: f64) -> SparseColumn {
    let mut out = SparseColumn::new();
    for (i, &v) in b.iter().enumerate() {
        let a = v.abs();
        if a >= lambda && v != 0.0 {
            out.push(i, a.min(bound).copysign(v));
        }
    }
    out
}

pub(crate) fn check_penalty(lambda: f64, bound: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::config(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::config(format!(
            "bound L must be finite and > 0, got {bound}"
        )));
    }
    if bound <= lambda {
        return Err(Error::config(format!(
            "bound L = {bound} must exceed lambda = {lambda}"
        )));
    }
    Ok(())
}

pub(crate) fn check_shapes(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
) -> Result<()> {
    if d.dim() != y.dim() {
        return Err(Error::dim(format!(
            "dictionary has {} rows, data has {}",
            d.dim(),
            y.dim()
        )));
    }
    if c.rows() != y.count() || c.num_atoms() != d.num_atoms() {
        return Err(Error::dim(format!(
            "codes are {}x{}, expected {}x{}",
            c.rows(),
            c.num_atoms(),
            y.count(),
            d.num_atoms()
        )));
    }
    if j >= d.num_atoms() {
        return Err(Error::dim(format!("atom index {j} out of range")));
    }
    Ok(())
}

/// `out = Y^T x`, one independent dot product per signal.
pub(crate) fn data_transpose_mul(y: &TrainingMatrix, x: &[f64], out: &mut [f64]) {
    let n = y.dim();
    let data = y.as_slice();
    out.par_chunks_mut(GEMV_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk * GEMV_CHUNK;
            for (k, o) in out.iter_mut().enumerate() {
                let i = base + k;
                *o = dot(&data[i * n..(i + 1) * n], x);
            }
        });
}

/// `Y^T d_k` for every atom `k` in `atoms`, written atom-major into `out`
/// (`N` values per atom). Signals are visited in blocks so that each block of
/// `Y` is reused across a group of atoms while it is still in cache. Every
/// entry is the same `dot` that [`data_transpose_mul`] computes.
pub(crate) fn data_transpose_mul_many(
    y: &TrainingMatrix,
    d: &Dictionary,
    atoms: &[usize],
    out: &mut [f64],
) {
    let n = y.dim();
    let count = y.count();
    let data = y.as_slice();
    out.par_chunks_mut(count * ATOM_GROUP)
        .zip(atoms.par_chunks(ATOM_GROUP))
        .for_each(|(out, group)| {
            for start in (0..count).step_by(SIGNAL_BLOCK) {
                let end = (start + SIGNAL_BLOCK).min(count);
                for (g, &k) in group.iter().enumerate() {
                    let atom = d.atom(k);
                    let row = &mut out[g * count..(g + 1) * count];
                    for i in start..end {
                        row[i] = dot(&data[i * n..(i + 1) * n], atom);
                    }
                }
            }
        });
}

/// Completes the sparse-code target `b = Y^T d_j - C D^T d_j + c_j`, given
/// `b = Y^T d_j` on entry. `proj` is scratch of length `J`.
pub(crate) fn finish_code_target(
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    proj: &mut [f64],
    b: &mut [f64],
) {
    d.transpose_mul(d.atom(j), proj);
    c.mul_vec_acc(proj, b, -1.0);
    for (i, v) in c.column(j).iter() {
        b[i] += v;
    }
}

/// Writes the sparse-code target `b = Y^T d_j - C D^T d_j + c_j` into `b`.
/// `proj` is scratch of length `J`.
pub(crate) fn code_target_into(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    proj: &mut [f64],
    b: &mut [f64],
) {
    data_transpose_mul(y, d.atom(j), b);
    finish_code_target(d, c, j, proj, b);
}

/// Writes the atom target `h = Y c' - D C^T c' + d_j (c_old^T c')` into `h`,
/// where `C` is taken with column `j` equal to `previous` (whatever `c`
/// currently stores at `j` is ignored). `dense` must be a zeroed length-`N`
/// buffer and is zeroed again on return; `gram` is scratch of length `J`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn atom_target_into(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    previous: &SparseColumn,
    fresh: &SparseColumn,
    dense: &mut [f64],
    gram: &mut [f64],
    h: &mut [f64],
) {
    h.iter_mut().for_each(|v| *v = 0.0);
    for (i, v) in fresh.iter() {
        axpy(v, y.col(i), h);
    }

    fresh.scatter_into(dense);
    c.transpose_mul_dense(dense, gram);
    gram[j] = previous.dot_dense(dense);
    fresh.clear_from(dense);

    for (k, &g) in gram.iter().enumerate() {
        if g != 0.0 {
            axpy(-g, d.atom(k), h);
        }
    }
    axpy(gram[j], d.atom(j), h);
}

/// Normalizes `h` into a new atom, or applies `policy` when the fresh code is
/// zero. A zero `h` paired with a nonzero code cannot follow an exact
/// sparse-code step and is reported as an invariant violation.
pub(crate) fn finish_atom<R: Rng + ?Sized>(
    h: &[f64],
    fresh: &SparseColumn,
    previous_atom: &[f64],
    policy: ZeroCodePolicy,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if fresh.is_zero() {
        return Ok(match policy {
            ZeroCodePolicy::FirstBasis => {
                let mut e1 = vec![0.0; h.len()];
                e1[0] = 1.0;
                e1
            }
            ZeroCodePolicy::KeepPrevious => previous_atom.to_vec(),
            ZeroCodePolicy::RandomUnit => random_unit_vector(h.len(), rng),
        });
    }
    let nrm = norm2(h);
    if !nrm.is_finite() {
        return Err(Error::NonFinite("atom update target".into()));
    }
    if nrm == 0.0 {
        return Err(Error::Invariant(
            "atom target E_j c_j is zero for a nonzero code".into(),
        ));
    }
    Ok(h.iter().map(|v| v / nrm).collect())
}

/// `E_j^T d_j` computed through the recursion, without materializing `E_j`.
pub fn code_target(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
) -> Result<Vec<f64>> {
    check_shapes(y, d, c, j)?;
    let mut proj = vec![0.0; d.num_atoms()];
    let mut b = vec![0.0; y.count()];
    code_target_into(y, d, c, j, &mut proj, &mut b);
    Ok(b)
}

/// `E_j c'` computed through the recursion, with `C` holding the previous
/// code at column `j` and `fresh` the new one.
pub fn atom_target(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    fresh: &SparseColumn,
) -> Result<Vec<f64>> {
    check_shapes(y, d, c, j)?;
    let mut dense = vec![0.0; y.count()];
    let mut gram = vec![0.0; d.num_atoms()];
    let mut h = vec![0.0; y.dim()];
    atom_target_into(
        y,
        d,
        c,
        j,
        c.column(j),
        fresh,
        &mut dense,
        &mut gram,
        &mut h,
    );
    Ok(h)
}

/// Exact minimizer over `c_j` of `||E_j - d_j c_j^T||_F^2 + lambda^2 ||c_j||_0`
/// subject to `||c_j||_inf <= bound`, all other blocks fixed.
pub fn sparse_code_step(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    lambda: f64,
    bound: f64,
) -> Result<SparseColumn> {
    check_penalty(lambda, bound)?;
    let b = code_target(y, d, c, j)?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("sparse-code target for atom {j}")));
    }
    Ok(truncated_hard_threshold(&b, lambda, bound))
}

/// Exact minimizer over unit-norm `d_j` of `||E_j - d_j c'^T||_F^2`, where
/// `c` holds the previous code at column `j` and `fresh` is the code just
/// produced by [`sparse_code_step`].
pub fn atom_update_step<R: Rng + ?Sized>(
    y: &TrainingMatrix,
    d: &Dictionary,
    c: &CoefficientMatrix,
    j: usize,
    fresh: &SparseColumn,
    policy: ZeroCodePolicy,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let h = atom_target(y, d, c, j, fresh)?;
    finish_atom(&h, fresh, d.atom(j), policy, rng)
}

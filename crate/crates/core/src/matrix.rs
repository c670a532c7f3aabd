//! Dense column-major matrices and the two dense domain types built on them:
//! the training matrix `Y` (one signal per column) and the dictionary `D`
//! (one unit-norm atom per column).

use std::ops::Deref;

use crate::error::{Error, Result};

/// Tolerance on `| ||d_j||_2 - 1 |` accepted by [`Dictionary::new`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Dot product with a fixed accumulation pattern.
///
/// Four interleaved partial sums are combined in a fixed order, so the result
/// is bit-identical for identical inputs regardless of threading.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A dense real matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major data (the order used by the text format).
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[c * rows + r] = data[r * cols + c];
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // `chunks_exact(0)` panics, and a zero-row matrix has no data anyway.
        let size = self.rows.max(1);
        self.data.chunks_exact(size).take(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `|| self - other ||_F`; both matrices must have the same shape.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }
}

/// Training signals `Y`, `n` rows by `N` columns, one signal per column.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMatrix(DenseMatrix);

impl TrainingMatrix {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::dim(format!(
                "training matrix must be non-empty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("training matrix entry".into()));
        }
        Ok(Self(m))
    }

    /// Signal dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Number of signals `N`.
    pub fn count(&self) -> usize {
        self.0.cols()
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }
}

impl Deref for TrainingMatrix {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.0
    }
}

/// A dictionary `D` whose columns (atoms) have unit Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary(DenseMatrix);

impl Dictionary {
    /// Wraps `m`, checking that every column has unit norm within
    /// [`UNIT_NORM_TOL`].
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::dim("dictionary must be non-empty"));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("dictionary entry".into()));
        }
        for (j, col) in m.columns().enumerate() {
            let nrm = norm2(col);
            if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Invariant(format!(
                    "atom {j} has norm {nrm}, expected 1"
                )));
            }
        }
        Ok(Self(m))
    }

    /// Rescales every column of `m` to unit norm. Zero columns are rejected.
    pub fn normalized(mut m: DenseMatrix) -> Result<Self> {
        for j in 0..m.cols() {
            let col = m.col_mut(j);
            let nrm = norm2(col);
            if nrm == 0.0 || !nrm.is_finite() {
                return Err(Error::Invariant(format!(
                    "atom {j} cannot be normalized (norm {nrm})"
                )));
            }
            col.iter_mut().for_each(|v| *v /= nrm);
        }
        Self::new(m)
    }

    /// Signal dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Number of atoms `J`.
    pub fn num_atoms(&self) -> usize {
        self.0.cols()
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        self.0.col(j)
    }

    /// Replaces atom `j`. The caller is responsible for unit norm, which is
    /// checked in debug builds.
    pub(crate) fn set_atom(&mut self, j: usize, atom: &[f64]) {
        debug_assert!((norm2(atom) - 1.0).abs() <= UNIT_NORM_TOL);
        self.0.col_mut(j).copy_from_slice(atom);
    }

    /// `D^T x` for a length-`n` vector.
    pub fn transpose_mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.num_atoms());
        for (o, atom) in out.iter_mut().zip(self.0.columns()) {
            *o = dot(atom, x);
        }
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.0
    }
}

impl Deref for Dictionary {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.0
    }
}

//! Sparse coefficient matrix `C` (N x J), stored as one sparse column per atom.
//!
//! An entry is zero exactly when it is not stored, so the l0 count is the
//! number of stored entries and never depends on a tolerance.

use crate::error::{Error, Result};

/// One sparse column `c_j` of length `N`, indices strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseColumn {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseColumn {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a column from `(index, value)` pairs. Indices must be strictly
    /// increasing and values nonzero.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut col = Self::new();
        for (i, v) in pairs {
            if v == 0.0 {
                return Err(Error::Invariant(format!("explicit zero stored at row {i}")));
            }
            if let Some(&last) = col.indices.last() {
                if i as u32 <= last {
                    return Err(Error::Invariant("sparse indices not increasing".into()));
                }
            }
            col.indices.push(i as u32);
            col.values.push(v);
        }
        Ok(col)
    }

    /// Keeps the nonzero entries of a dense vector.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut col = Self::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                col.indices.push(i as u32);
                col.values.push(v);
            }
        }
        col
    }

    /// Appends an entry; `i` must exceed every stored index.
    #[inline]
    pub(crate) fn push(&mut self, i: usize, v: f64) {
        debug_assert!(v != 0.0);
        debug_assert!(self.indices.last().is_none_or(|&l| (l as usize) < i));
        self.indices.push(i as u32);
        self.values.push(v);
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Writes the column into a zeroed dense buffer of length `N`.
    pub fn scatter_into(&self, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i] = v;
        }
    }

    /// Zeroes the positions this column occupies in `dense`.
    pub fn clear_from(&self, dense: &mut [f64]) {
        for &i in &self.indices {
            dense[i as usize] = 0.0;
        }
    }

    /// `sum_i self_i * dense_i`.
    #[inline]
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, v) in self.iter() {
            s += v * dense[i];
        }
        s
    }

    /// `sum_i self_i * other_i` via a merge of the two index lists.
    pub fn dot(&self, other: &SparseColumn) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut s = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }

    /// `|| self - other ||_2^2`.
    pub fn distance_sq(&self, other: &SparseColumn) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut s = 0.0;
        loop {
            let ia = self.indices.get(a);
            let ib = other.indices.get(b);
            match (ia, ib) {
                (None, None) => break,
                (Some(_), None) => {
                    s += self.values[a] * self.values[a];
                    a += 1;
                }
                (None, Some(_)) => {
                    s += other.values[b] * other.values[b];
                    b += 1;
                }
                (Some(x), Some(y)) => match x.cmp(y) {
                    std::cmp::Ordering::Less => {
                        s += self.values[a] * self.values[a];
                        a += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        s += other.values[b] * other.values[b];
                        b += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        let d = self.values[a] - other.values[b];
                        s += d * d;
                        a += 1;
                        b += 1;
                    }
                },
            }
        }
        s
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        self.scatter_into(&mut out);
        out
    }
}

/// Sparse codes `C`: `rows` = N training signals, one [`SparseColumn`] per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    rows: usize,
    columns: Vec<SparseColumn>,
}

impl CoefficientMatrix {
    pub fn zeros(rows: usize, atoms: usize) -> Self {
        Self {
            rows,
            columns: vec![SparseColumn::new(); atoms],
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.indices.last().is_some_and(|&i| i as usize >= rows) {
                return Err(Error::dim(format!("column {j} has a row index >= {rows}")));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("code column {j}")));
            }
        }
        Ok(Self { rows, columns })
    }

    /// Number of training signals `N`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of atoms `J`.
    pub fn num_atoms(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &SparseColumn {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub(crate) fn replace_column(&mut self, j: usize, col: SparseColumn) -> SparseColumn {
        std::mem::replace(&mut self.columns[j], col)
    }

    /// Total number of stored (nonzero) entries, `||C||_0`.
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseColumn::nnz).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.columns.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// `|| self - other ||_F`.
    pub fn frobenius_distance(&self, other: &CoefficientMatrix) -> f64 {
        debug_assert_eq!(self.columns.len(), other.columns.len());
        self.columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.distance_sq(b))
            .sum::<f64>()
            .sqrt()
    }

    /// `out = C x` for a length-`J` vector `x`; `out` has length `N`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.mul_vec_acc(x, out, 1.0);
    }

    /// `out += sign * C x`, accumulated column by column in atom order.
    pub(crate) fn mul_vec_acc(&self, x: &[f64], out: &mut [f64], sign: f64) {
        for (col, &xk) in self.columns.iter().zip(x) {
            if xk == 0.0 {
                continue;
            }
            let a = sign * xk;
            for (i, v) in col.iter() {
                out[i] += a * v;
            }
        }
    }

    /// `out = C^T v` given `v` as a dense length-`N` vector.
    pub fn transpose_mul_dense(&self, dense: &[f64], out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(&self.columns) {
            *o = col.dot_dense(dense);
        }
    }

    /// Dense `N x J` copy, row `i` column `j`, column-major.
    pub fn to_dense(&self) -> crate::matrix::DenseMatrix {
        let mut m = crate::matrix::DenseMatrix::zeros(self.rows, self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            col.scatter_into(m.col_mut(j));
        }
        m
    }
}

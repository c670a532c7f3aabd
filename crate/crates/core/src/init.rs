//! Initial dictionaries.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Dictionary};
use crate::random::{seeded_rng, Gaussian};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    OvercompleteDct,
    RandomUnit { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Signal dimension `n`.
    pub dim: usize,
    /// Number of atoms `J`.
    pub atoms: usize,
}

impl InitSpec {
    pub fn build(&self) -> Result<Dictionary> {
        match self.kind {
            InitKind::OvercompleteDct => overcomplete_dct(self.dim, self.atoms),
            InitKind::RandomUnit { seed } => random_unit_dictionary(self.dim, self.atoms, seed),
        }
    }
}

fn exact_sqrt(v: usize) -> Option<usize> {
    let r = (v as f64).sqrt().round() as usize;
    (r * r == v).then_some(r)
}

/// The separable overcomplete DCT for `sqrt(n) x sqrt(n)` patches.
///
/// The 1-D factor is `A[i, k] = cos(pi i k / q)` for `i < p = sqrt(n)`,
/// `k < q = sqrt(J)`, with every column except `k = 0` made zero-mean. The
/// dictionary is `A (x) A` with unit-norm columns; column `k1 q + k2` is the
/// outer product of 1-D atoms `k1` (across patch columns) and `k2` (down
/// patch rows), so it matches column-major patch vectorization.
pub fn overcomplete_dct(n: usize, atoms: usize) -> Result<Dictionary> {
    let p = exact_sqrt(n).filter(|&p| p > 0).ok_or_else(|| {
        Error::config(format!(
            "DCT needs a perfect-square signal dimension, got {n}"
        ))
    })?;
    let q = exact_sqrt(atoms).filter(|&q| q > 0).ok_or_else(|| {
        Error::config(format!(
            "DCT needs a perfect-square atom count, got {atoms}"
        ))
    })?;
    if q < p {
        return Err(Error::config(format!(
            "DCT needs sqrt(J) >= sqrt(n), got sqrt(J) = {q} < {p}"
        )));
    }

    let mut one_d = DenseMatrix::zeros(p, q);
    for k in 0..q {
        let col = one_d.col_mut(k);
        for (i, v) in col.iter_mut().enumerate() {
            *v = (std::f64::consts::PI * (i * k) as f64 / q as f64).cos();
        }
        if k > 0 {
            let mean = col.iter().sum::<f64>() / p as f64;
            col.iter_mut().for_each(|v| *v -= mean);
        }
    }

    let kron = DenseMatrix::from_fn(n, atoms, |r, c| {
        let (k1, k2) = (c / q, c % q);
        let (pc, pr) = (r / p, r % p);
        one_d.get(pc, k1) * one_d.get(pr, k2)
    });
    Dictionary::normalized(kron)
}

/// Columns of i.i.d. standard normal draws scaled to unit norm.
pub fn random_unit_dictionary(n: usize, atoms: usize, seed: u64) -> Result<Dictionary> {
    if n == 0 || atoms == 0 {
        return Err(Error::config("random dictionary needs n, J >= 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut gauss = Gaussian::new();
    let mut m = DenseMatrix::zeros(n, atoms);
    for j in 0..atoms {
        // Redraw the column in the measure-zero case of an all-zero draw.
        loop {
            let col = m.col_mut(j);
            col.iter_mut().for_each(|v| *v = gauss.sample(&mut rng));
            if col.iter().any(|&v| v != 0.0) {
                break;
            }
        }
    }
    Dictionary::normalized(m)
}

use rand::seq::SliceRandom;

use super::objective::{fit_error, nsre, objective, sparsity_factor};
use super::steps::{
    atom_target_into, check_penalty, code_target_into, data_transpose_mul_many, finish_atom,
    finish_code_target, truncated_hard_threshold, ZeroCodePolicy,
};
use crate::codes::{CoefficientMatrix, SparseColumn};
use crate::error::{Error, Result};
use crate::matrix::{Dictionary, TrainingMatrix};
use crate::random::{seeded_rng, SeededRng};

/// Order in which atoms are visited within one outer iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AtomOrder {
    /// `0, 1, ..., J-1` every iteration.
    #[default]
    Cyclic,
    /// A fresh seeded permutation every iteration.
    Random,
}

#[derive(Clone, Debug)]
pub struct LearnConfig {
    /// Sparsity weight `lambda`; the penalty per nonzero is `lambda^2`.
    pub lambda: f64,
    /// Bound `L` on code magnitudes. `None` uses `||Y||_F`.
    pub bound: Option<f64>,
    /// Number of outer iterations `K`.
    pub iterations: usize,
    pub atom_order: AtomOrder,
    pub zero_code_policy: ZeroCodePolicy,
    pub seed: u64,
    pub init_dictionary: Dictionary,
    /// Initial codes; `None` starts from all zeros.
    pub init_codes: Option<CoefficientMatrix>,
}

impl LearnConfig {
    pub fn new(init_dictionary: Dictionary, lambda: f64, iterations: usize) -> Self {
        Self {
            lambda,
            bound: None,
            iterations,
            atom_order: AtomOrder::default(),
            zero_code_policy: ZeroCodePolicy::default(),
            seed: 0,
            init_dictionary,
            init_codes: None,
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.init_dictionary.num_atoms()
    }
}

/// Diagnostics recorded at the end of one outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    /// 1-based iteration number.
    pub iter: usize,
    pub objective: f64,
    /// `NaN` when the data matrix is all zero.
    pub nsre: f64,
    pub sparsity_factor: f64,
    /// `||D^t - D^{t-1}||_F`
    pub delta_dict: f64,
    /// `||C^t - C^{t-1}||_F`
    pub delta_codes: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnTrace {
    pub rows: Vec<TraceRow>,
}

impl LearnTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

#[derive(Clone, Debug)]
pub struct LearnOutput {
    pub dictionary: Dictionary,
    pub codes: CoefficientMatrix,
    pub trace: LearnTrace,
}

/// Block coordinate descent state for one training matrix.
///
/// Each block update is exposed separately so that callers can observe the
/// objective after every one of the `2J` updates in an outer iteration.
pub struct Learner<'a> {
    data: &'a TrainingMatrix,
    dict: Dictionary,
    codes: CoefficientMatrix,
    lambda: f64,
    bound: f64,
    order: AtomOrder,
    policy: ZeroCodePolicy,
    rng: SeededRng,
    /// `(j, c_j)` before the most recent sparse-code step on atom `j`.
    previous: Option<(usize, SparseColumn)>,
    target: Vec<f64>,
    dense: Vec<f64>,
    per_atom: Vec<f64>,
    atom_buf: Vec<f64>,
    /// `Y^T d_k` for every atom, atom-major, refreshed at the start of each
    /// sweep. Skipped when `N J` exceeds [`PROJECTION_CACHE_LIMIT`].
    projections: Vec<f64>,
    /// `projections` holds `Y^T d_k` for the current atom `k`.
    projection_fresh: Vec<bool>,
    iterations_done: usize,
}

/// Largest `N J` for which `Y^T D` is cached (1 GiB of `f64`).
pub const PROJECTION_CACHE_LIMIT: usize = 1 << 27;

impl<'a> Learner<'a> {
    pub fn new(data: &'a TrainingMatrix, config: &LearnConfig) -> Result<Self> {
        let bound = config.bound.unwrap_or_else(|| data.frobenius_norm());
        check_penalty(config.lambda, bound)?;
        let dict = config.init_dictionary.clone();
        if dict.dim() != data.dim() {
            return Err(Error::dim(format!(
                "initial dictionary has {} rows, data has {}",
                dict.dim(),
                data.dim()
            )));
        }
        let j_count = dict.num_atoms();
        let codes = match &config.init_codes {
            Some(c) => {
                if c.rows() != data.count() || c.num_atoms() != j_count {
                    return Err(Error::dim(format!(
                        "initial codes are {}x{}, expected {}x{}",
                        c.rows(),
                        c.num_atoms(),
                        data.count(),
                        j_count
                    )));
                }
                if c.max_abs() > bound {
                    return Err(Error::config(format!(
                        "initial codes exceed the bound L = {bound}"
                    )));
                }
                c.clone()
            }
            None => CoefficientMatrix::zeros(data.count(), j_count),
        };
        Ok(Self {
            data,
            dict,
            codes,
            lambda: config.lambda,
            bound,
            order: config.atom_order,
            policy: config.zero_code_policy,
            rng: seeded_rng(config.seed),
            previous: None,
            target: vec![0.0; data.count()],
            dense: vec![0.0; data.count()],
            per_atom: vec![0.0; j_count],
            atom_buf: vec![0.0; data.dim()],
            projections: Vec::new(),
            projection_fresh: vec![false; j_count],
            iterations_done: 0,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn codes(&self) -> &CoefficientMatrix {
        &self.codes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn objective(&self) -> f64 {
        objective(self.data, &self.dict, &self.codes, self.lambda)
    }

    /// Replaces `c_j` by the exact minimizer with everything else fixed.
    pub fn sparse_code_step(&mut self, j: usize) -> Result<()> {
        self.check_atom(j)?;
        if self.projection_fresh[j] {
            let n = self.data.count();
            self.target
                .copy_from_slice(&self.projections[j * n..(j + 1) * n]);
            finish_code_target(
                &self.dict,
                &self.codes,
                j,
                &mut self.per_atom,
                &mut self.target,
            );
        } else {
            code_target_into(
                self.data,
                &self.dict,
                &self.codes,
                j,
                &mut self.per_atom,
                &mut self.target,
            );
        }
        if let Some(i) = self.target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sparse-code target for atom {j} at signal {i} (iteration {})",
                self.iterations_done + 1
            )));
        }
        let fresh = truncated_hard_threshold(&self.target, self.lambda, self.bound);
        let old = self.codes.replace_column(j, fresh);
        self.previous = Some((j, old));
        Ok(())
    }

    /// Replaces `d_j` by the exact minimizer given the current `c_j`.
    ///
    /// Uses the code from before the preceding [`sparse_code_step`] on `j` in
    /// the correction term. Without such a step the stored code serves as
    /// both old and new, which yields the same `E_j c_j`.
    ///
    /// [`sparse_code_step`]: Learner::sparse_code_step
    pub fn atom_update_step(&mut self, j: usize) -> Result<()> {
        self.check_atom(j)?;
        let previous = match self.previous.take() {
            Some((k, col)) if k == j => col,
            _ => self.codes.column(j).clone(),
        };
        let fresh = self.codes.column(j);
        atom_target_into(
            self.data,
            &self.dict,
            &self.codes,
            j,
            &previous,
            fresh,
            &mut self.dense,
            &mut self.per_atom,
            &mut self.atom_buf,
        );
        let atom = finish_atom(
            &self.atom_buf,
            fresh,
            self.dict.atom(j),
            self.policy,
            &mut self.rng,
        )?;
        self.dict.set_atom(j, &atom);
        self.projection_fresh[j] = false;
        Ok(())
    }

    fn check_atom(&self, j: usize) -> Result<()> {
        if j >= self.dict.num_atoms() {
            return Err(Error::dim(format!("atom index {j} out of range")));
        }
        Ok(())
    }

    /// The atom visiting order for the next outer iteration.
    pub fn next_order(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.dict.num_atoms()).collect();
        if self.order == AtomOrder::Random {
            order.shuffle(&mut self.rng);
        }
        order
    }

    /// Recomputes the cached `Y^T d_k` for every atom changed since the last
    /// refresh, streaming `Y` once instead of once per atom. Within a sweep
    /// atom `j` is still unchanged when its sparse-code step needs it.
    fn refresh_projections(&mut self) {
        let count = self.data.count();
        let atoms = self.dict.num_atoms();
        if count * atoms > PROJECTION_CACHE_LIMIT {
            return;
        }
        let stale: Vec<usize> = (0..atoms).filter(|&k| !self.projection_fresh[k]).collect();
        if stale.is_empty() {
            return;
        }
        if stale.len() == atoms {
            self.projections.resize(count * atoms, 0.0);
            data_transpose_mul_many(self.data, &self.dict, &stale, &mut self.projections);
        } else {
            let mut block = vec![0.0; count * stale.len()];
            data_transpose_mul_many(self.data, &self.dict, &stale, &mut block);
            for (s, &k) in stale.iter().enumerate() {
                self.projections[k * count..(k + 1) * count]
                    .copy_from_slice(&block[s * count..(s + 1) * count]);
            }
        }
        self.projection_fresh.iter_mut().for_each(|f| *f = true);
    }

    /// One outer iteration: for each atom, sparse-code step then atom update.
    pub fn sweep(&mut self) -> Result<()> {
        self.refresh_projections();
        for j in self.next_order() {
            self.sparse_code_step(j)?;
            self.atom_update_step(j)?;
        }
        self.iterations_done += 1;
        Ok(())
    }

    /// Runs `iterations` outer iterations, recording diagnostics after each.
    pub fn run(&mut self, iterations: usize) -> Result<LearnTrace> {
        let mut trace = LearnTrace::default();
        let data_norm = self.data.frobenius_norm();
        for _ in 0..iterations {
            let prev_dict = self.dict.clone();
            let prev_codes = self.codes.clone();
            self.sweep()?;

            let fit = fit_error(self.data, &self.dict, &self.codes);
            let objective = fit + self.lambda * self.lambda * self.codes.nnz() as f64;
            if !objective.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective at iteration {}",
                    self.iterations_done
                )));
            }
            trace.rows.push(TraceRow {
                iter: self.iterations_done,
                objective,
                nsre: if data_norm > 0.0 {
                    fit.sqrt() / data_norm
                } else {
                    f64::NAN
                },
                sparsity_factor: sparsity_factor(&self.codes, self.data.dim()),
                delta_dict: self.dict.frobenius_distance(&prev_dict),
                delta_codes: self.codes.frobenius_distance(&prev_codes),
            });
        }
        Ok(trace)
    }

    pub fn into_parts(self) -> (Dictionary, CoefficientMatrix) {
        (self.dict, self.codes)
    }
}

/// Runs `config.iterations` outer iterations of block coordinate descent.
pub fn learn(data: &TrainingMatrix, config: &LearnConfig) -> Result<LearnOutput> {
    let mut learner = Learner::new(data, config)?;
    let trace = learner.run(config.iterations)?;
    let (dictionary, codes) = learner.into_parts();
    Ok(LearnOutput {
        dictionary,
        codes,
        trace,
    })
}

/// NSRE of a finished run; convenience for harnesses.
pub fn output_nsre(data: &TrainingMatrix, out: &LearnOutput) -> Result<f64> {
    nsre(data, &out.dictionary, &out.codes)
}

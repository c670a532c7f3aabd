//! l0-penalized sum-of-outer-products dictionary learning.
//!
//! Minimizes
//!
//! ```text
//! ||Y - sum_j d_j c_j^T||_F^2 + lambda^2 sum_j ||c_j||_0
//!     s.t. ||d_j||_2 = 1, ||c_j||_inf <= L
//! ```
//!
//! by block coordinate descent over the pairs `(c_j, d_j)`. Both block
//! updates have closed forms: truncated hard thresholding for `c_j` and a
//! normalized residual product for `d_j`.

mod learner;
mod objective;
mod steps;

pub use learner::{
    learn, output_nsre, AtomOrder, LearnConfig, LearnOutput, LearnTrace, Learner, TraceRow,
};
pub use objective::{fit_error, nsre, objective, residual, sparsity_factor};
pub use steps::{
    atom_target, atom_update_step, code_target, hard_threshold, sparse_code_step,
    truncated_hard_threshold, ZeroCodePolicy,
};

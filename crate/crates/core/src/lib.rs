//! Dictionary learning by l0-penalized sum-of-outer-products block
//! coordinate descent, with a patch-based image denoising pipeline.
//!
//! The learner ([`soup`]) represents training signals `Y` (one per column)
//! as `sum_j d_j c_j^T` with unit-norm atoms `d_j` and sparse, bounded codes
//! `c_j`, and updates one `c_j` and one `d_j` at a time in closed form.
//! [`denoise`] wraps it into an image denoiser; [`experiments`] and [`cli`]
//! provide the benchmark harnesses.

pub mod cli;
pub mod codes;
pub mod denoise;
pub mod error;
pub mod experiments;
pub mod image;
pub mod init;
pub mod io;
pub mod matrix;
pub mod omp;
pub mod patches;
pub mod random;
pub mod soup;

pub use codes::{CoefficientMatrix, SparseColumn};
pub use error::{Error, Result};
pub use image::Image;
pub use matrix::{DenseMatrix, Dictionary, TrainingMatrix};

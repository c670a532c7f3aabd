//! Image <-> patch-matrix conversion.
//!
//! A patch is vectorized column by column: pixel `(r, c)` of a `s x s` patch
//! goes to index `c * s + r`. Extraction, learning, coding and aggregation
//! all share this order.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::matrix::{DenseMatrix, TrainingMatrix};

/// Top-left corners of the patches, in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    side: usize,
    stride: usize,
    width: usize,
    height: usize,
    positions: Vec<(usize, usize)>,
}

fn axis_starts(len: usize, side: usize, stride: usize) -> Vec<usize> {
    let last = len - side;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    // Keep the far border covered when the stride does not land on it.
    if starts.last() != Some(&last) {
        starts.push(last);
    }
    starts
}

impl PatchGrid {
    /// All patches of side `side` at the given stride. With `stride = 1` this
    /// is every overlapping patch. For larger strides the last row and column
    /// of patches are shifted to touch the image border, so every pixel is
    /// covered.
    pub fn new(width: usize, height: usize, side: usize, stride: usize) -> Result<Self> {
        if side == 0 || stride == 0 {
            return Err(Error::config("patch side and stride must be positive"));
        }
        if side > width || side > height {
            return Err(Error::config(format!(
                "patch side {side} exceeds image size {width}x{height}"
            )));
        }
        let rows = axis_starts(height, side, stride);
        let cols = axis_starts(width, side, stride);
        let positions = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .collect();
        Ok(Self {
            side,
            stride,
            width,
            height,
            positions,
        })
    }

    pub fn for_image(img: &Image, side: usize, stride: usize) -> Result<Self> {
        Self::new(img.width(), img.height(), side, stride)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Signal dimension `side^2`.
    pub fn patch_dim(&self) -> usize {
        self.side * self.side
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::dim(format!(
                "grid is for {}x{} images, got {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }

    /// Number of patches covering each pixel (row-major).
    pub fn cover_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.width * self.height];
        for &(r0, c0) in &self.positions {
            for r in r0..r0 + self.side {
                for c in c0..c0 + self.side {
                    counts[r * self.width + c] += 1;
                }
            }
        }
        counts
    }
}

/// Mean-removed patches of `img` as columns, plus the removed means.
pub fn extract_patches(img: &Image, grid: &PatchGrid) -> Result<(TrainingMatrix, Vec<f64>)> {
    grid.check_image(img)?;
    let s = grid.side;
    let n = s * s;
    let mut data = Vec::with_capacity(n * grid.len());
    let mut means = Vec::with_capacity(grid.len());
    for &(r0, c0) in &grid.positions {
        let start = data.len();
        for c in c0..c0 + s {
            for r in r0..r0 + s {
                data.push(img.get(r, c));
            }
        }
        let patch = &mut data[start..];
        let mean = patch.iter().sum::<f64>() / n as f64;
        patch.iter_mut().for_each(|v| *v -= mean);
        means.push(mean);
    }
    let m = DenseMatrix::from_col_major(n, grid.len(), data)?;
    Ok((TrainingMatrix::new(m)?, means))
}

/// Closed-form minimizer over `x` of
/// `sum_j ||P_j x - e_j||^2 + nu ||x - noisy||^2`, where `e_j` is column `j`
/// of `estimates` plus `means[j]`:
///
/// ```text
/// x(p) = (nu noisy(p) + sum_{j covering p} e_j(p)) / (nu + cover(p))
/// ```
///
/// Sums are accumulated in grid order.
pub fn aggregate(
    estimates: &DenseMatrix,
    means: &[f64],
    grid: &PatchGrid,
    noisy: &Image,
    nu: f64,
) -> Result<Image> {
    grid.check_image(noisy)?;
    let s = grid.side;
    if estimates.rows() != s * s || estimates.cols() != grid.len() || means.len() != grid.len() {
        return Err(Error::dim(format!(
            "estimates are {}x{} with {} means, grid needs {}x{}",
            estimates.rows(),
            estimates.cols(),
            means.len(),
            s * s,
            grid.len()
        )));
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::config(format!(
            "nu must be finite and >= 0, got {nu}"
        )));
    }
    let w = grid.width;
    let mut sums = vec![0.0; w * grid.height];
    for (j, &(r0, c0)) in grid.positions.iter().enumerate() {
        let col = estimates.col(j);
        let mean = means[j];
        for dc in 0..s {
            for dr in 0..s {
                sums[(r0 + dr) * w + c0 + dc] += col[dc * s + dr] + mean;
            }
        }
    }
    let counts = grid.cover_counts();
    if nu == 0.0 && counts.contains(&0) {
        return Err(Error::config(
            "nu = 0 requires every pixel to be covered by a patch",
        ));
    }
    let pixels = sums
        .iter()
        .zip(&counts)
        .zip(noisy.pixels())
        .map(|((&sum, &count), &y)| (nu * y + sum) / (nu + count as f64))
        .collect();
    Image::new(w, grid.height, pixels)
}

//! Patch-based denoising with a learned dictionary.
//!
//! 1. Extract overlapping patches of the noisy image and remove their means.
//! 2. Learn a dictionary on them (DCT start, zero codes, `lambda = 5 sigma`).
//! 3. Re-code every patch with error-constrained OMP, `eps = n C^2 sigma^2`.
//! 4. Put the patch estimates back and average with the noisy image,
//!    `nu = 20 / sigma`.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::init::overcomplete_dct;
use crate::matrix::{DenseMatrix, Dictionary, TrainingMatrix};
use crate::omp::{omp_code, synthesize, OmpConfig, OmpStatus};
use crate::patches::{aggregate, extract_patches, PatchGrid};
use crate::random::{seeded_rng, Gaussian};
use crate::soup::{learn, LearnConfig, LearnTrace};

/// Peak value used by [`psnr`].
pub const PEAK: f64 = 255.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseConfig {
    /// Noise standard deviation, in intensity units.
    pub sigma: f64,
    /// Learning weight; `None` means `5 sigma`.
    pub lambda: Option<f64>,
    /// Weight of the noisy image in the final average; `None` means `20 / sigma`.
    pub nu: Option<f64>,
    /// OMP gain `C`; the error bound is `n C^2 sigma^2`.
    pub omp_gain: f64,
    /// Optional OMP support cap (default `min(n, J)`).
    pub omp_max_nonzeros: Option<usize>,
    pub patch_side: usize,
    pub num_atoms: usize,
    pub learn_iterations: usize,
    /// Patch stride; 1 takes every overlapping patch.
    pub stride: usize,
    /// Train on at most this many patches, chosen with `subsample_seed`.
    pub training_subsample: Option<usize>,
    pub subsample_seed: u64,
}

impl DenoiseConfig {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            lambda: None,
            nu: None,
            omp_gain: 1.15,
            omp_max_nonzeros: None,
            patch_side: 8,
            num_atoms: 256,
            learn_iterations: 10,
            stride: 1,
            training_subsample: None,
            subsample_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::config(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.omp_gain.is_finite() && self.omp_gain > 1.0) {
            return Err(Error::config(format!(
                "OMP gain must be > 1, got {}",
                self.omp_gain
            )));
        }
        if self.training_subsample == Some(0) {
            return Err(Error::config("training subsample must be positive"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(5.0 * self.sigma)
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(20.0 / self.sigma)
    }

    /// `n C^2 sigma^2` for the configured patch size.
    pub fn error_bound(&self) -> f64 {
        let n = (self.patch_side * self.patch_side) as f64;
        n * self.omp_gain * self.omp_gain * self.sigma * self.sigma
    }
}

/// How the OMP pass over all patches ended.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OmpSummary {
    pub patches: usize,
    pub total_nonzeros: usize,
    pub converged: usize,
    pub capped: usize,
    pub singular: usize,
    pub uncorrelated: usize,
}

impl OmpSummary {
    pub fn mean_nonzeros(&self) -> f64 {
        self.total_nonzeros as f64 / self.patches.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct DenoiseOutput {
    pub image: Image,
    pub dictionary: Dictionary,
    pub trace: LearnTrace,
    pub omp: OmpSummary,
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every pixel, without clipping.
/// Deviates come from Box-Muller over ChaCha8 seeded with `seed`.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config(format!("sigma must be > 0, got {sigma}")));
    }
    let mut rng = seeded_rng(seed);
    let mut gauss = Gaussian::new();
    let mut out = img.clone();
    for p in out.pixels_mut() {
        *p += sigma * gauss.sample(&mut rng);
    }
    Ok(out)
}

/// `20 log10(255 / RMSE)`. Identical images have no finite PSNR and are
/// rejected.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    if (reference.width(), reference.height()) != (test.width(), test.height()) {
        return Err(Error::dim("PSNR needs images of equal size"));
    }
    let count = reference.pixels().len() as f64;
    let sse: f64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if sse == 0.0 {
        return Err(Error::config("PSNR of identical images is infinite"));
    }
    let rmse = (sse / count).sqrt();
    Ok(20.0 * (PEAK / rmse).log10())
}

fn training_set(
    patches: &TrainingMatrix,
    config: &DenoiseConfig,
) -> Result<Option<TrainingMatrix>> {
    let Some(cap) = config.training_subsample else {
        return Ok(None);
    };
    let total = patches.count();
    if cap >= total {
        return Ok(None);
    }
    let mut rng = seeded_rng(config.subsample_seed);
    let mut picked = sample(&mut rng, total, cap).into_vec();
    picked.sort_unstable();
    let n = patches.dim();
    let mut data = Vec::with_capacity(n * cap);
    for i in picked {
        data.extend_from_slice(patches.col(i));
    }
    Ok(Some(TrainingMatrix::new(DenseMatrix::from_col_major(
        n, cap, data,
    )?)?))
}

/// OMP-codes every patch against `dict` and returns `D alpha` per patch.
fn code_patches(
    dict: &Dictionary,
    patches: &TrainingMatrix,
    config: &DenoiseConfig,
) -> Result<(DenseMatrix, OmpSummary)> {
    let omp = OmpConfig {
        error_bound: config.error_bound(),
        max_nonzeros: config.omp_max_nonzeros,
    };
    let n = patches.dim();
    let coded: Vec<(Vec<f64>, usize, OmpStatus)> = (0..patches.count())
        .into_par_iter()
        .map(|i| {
            let code = omp_code(dict, patches.col(i), &omp)?;
            let mut est = vec![0.0; n];
            synthesize(dict, &code.code, &mut est);
            Ok((est, code.code.nnz(), code.status))
        })
        .collect::<Result<_>>()?;

    let mut summary = OmpSummary {
        patches: coded.len(),
        ..Default::default()
    };
    let mut data = Vec::with_capacity(n * coded.len());
    for (est, nnz, status) in coded {
        data.extend_from_slice(&est);
        summary.total_nonzeros += nnz;
        match status {
            OmpStatus::Converged => summary.converged += 1,
            OmpStatus::CapReached => summary.capped += 1,
            OmpStatus::Singular => summary.singular += 1,
            OmpStatus::NoCorrelation => summary.uncorrelated += 1,
        }
    }
    Ok((
        DenseMatrix::from_col_major(n, patches.count(), data)?,
        summary,
    ))
}

/// Full pipeline: learn on the noisy patches, re-code with OMP, aggregate.
pub fn denoise(noisy: &Image, config: &DenoiseConfig) -> Result<DenoiseOutput> {
    config.validate()?;
    let grid = PatchGrid::for_image(noisy, config.patch_side, config.stride)?;
    let (patches, means) = extract_patches(noisy, &grid)?;

    let init = overcomplete_dct(grid.patch_dim(), config.num_atoms)?;
    let mut learn_cfg = LearnConfig::new(init, config.lambda(), config.learn_iterations);
    let subset = training_set(&patches, config)?;
    let train = subset.as_ref().unwrap_or(&patches);
    learn_cfg.bound = Some(train.frobenius_norm());
    let learned = learn(train, &learn_cfg)?;

    let (estimates, omp) = code_patches(&learned.dictionary, &patches, config)?;
    let image = aggregate(&estimates, &means, &grid, noisy, config.nu())?;
    Ok(DenoiseOutput {
        image,
        dictionary: learned.dictionary,
        trace: learned.trace,
        omp,
    })
}

/// The same pipeline with a fixed dictionary and no learning.
pub fn denoise_fixed_dictionary(
    noisy: &Image,
    dict: &Dictionary,
    config: &DenoiseConfig,
) -> Result<(Image, OmpSummary)> {
    config.validate()?;
    let grid = PatchGrid::for_image(noisy, config.patch_side, config.stride)?;
    if dict.dim() != grid.patch_dim() {
        return Err(Error::dim(format!(
            "dictionary has {} rows, patches have {}",
            dict.dim(),
            grid.patch_dim()
        )));
    }
    let (patches, means) = extract_patches(noisy, &grid)?;
    let (estimates, omp) = code_patches(dict, &patches, config)?;
    let image = aggregate(&estimates, &means, &grid, noisy, config.nu())?;
    Ok((image, omp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_of_constant_offset() {
        let a = Image::filled(4, 4, 100.0).unwrap();
        let b = Image::filled(4, 4, 110.0).unwrap();
        let p = psnr(&a, &b).unwrap();
        assert!((p - 20.0 * 25.5f64.log10()).abs() < 1e-12);
        assert!((p - 28.13).abs() < 0.005);
        assert_eq!(p, psnr(&b, &a).unwrap());
    }

    #[test]
    fn psnr_rejects_identical_and_mismatched() {
        let a = Image::filled(4, 4, 1.0).unwrap();
        assert!(psnr(&a, &a).is_err());
        assert!(psnr(&a, &Image::filled(4, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn noise_is_seeded_and_unclipped() {
        let img = Image::filled(32, 32, 250.0).unwrap();
        let a = add_gaussian_noise(&img, 30.0, 11).unwrap();
        let b = add_gaussian_noise(&img, 30.0, 11).unwrap();
        let c = add_gaussian_noise(&img, 30.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.pixels().iter().any(|&v| v > 255.0));
        assert!(add_gaussian_noise(&img, 0.0, 1).is_err());
    }

    #[test]
    fn config_defaults_follow_sigma() {
        let c = DenoiseConfig::new(20.0);
        assert_eq!(c.lambda(), 100.0);
        assert_eq!(c.nu(), 1.0);
        assert!((c.error_bound() - 64.0 * 1.15 * 1.15 * 400.0).abs() < 1e-9);
        let mut bad = c.clone();
        bad.omp_gain = 1.0;
        assert!(bad.validate().is_err());
        bad = DenoiseConfig::new(-1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_pipeline_runs_and_improves() {
        let clean = Image::from_fn(24, 24, |r, c| {
            if (r / 6 + c / 6) % 2 == 0 {
                60.0
            } else {
                180.0
            }
        })
        .unwrap();
        let noisy = add_gaussian_noise(&clean, 15.0, 3).unwrap();
        let mut cfg = DenoiseConfig::new(15.0);
        cfg.patch_side = 4;
        cfg.num_atoms = 16;
        cfg.learn_iterations = 3;
        let out = denoise(&noisy, &cfg).unwrap();
        assert!(psnr(&clean, &out.image).unwrap() > psnr(&clean, &noisy).unwrap());
        assert_eq!(out.trace.rows.len(), 3);
        assert_eq!(out.omp.patches, 21 * 21);
        assert_eq!(out.omp.singular + out.omp.uncorrelated, 0);
    }
}

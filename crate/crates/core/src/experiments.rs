//! Experiment harnesses: convergence traces, lambda sweeps, denoising tables
//! and per-iteration cost scaling. Each returns a [`Table`] ready for CSV.

use std::time::Instant;

use rand::Rng;

use crate::denoise::{add_gaussian_noise, denoise, denoise_fixed_dictionary, psnr, DenoiseConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::init::overcomplete_dct;
use crate::io::Table;
use crate::matrix::{DenseMatrix, TrainingMatrix};
use crate::random::seeded_rng;
use crate::soup::{learn, LearnConfig, LearnTrace, Learner};

/// Published PSNRs (dB) for one image and noise level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePsnr {
    pub image: &'static str,
    pub sigma: u32,
    pub noisy: f64,
    pub odct: f64,
    pub ksvd: f64,
    pub soup: f64,
}

const fn r(
    image: &'static str,
    sigma: u32,
    noisy: f64,
    odct: f64,
    ksvd: f64,
    soup: f64,
) -> ReferencePsnr {
    ReferencePsnr {
        image,
        sigma,
        noisy,
        odct,
        ksvd,
        soup,
    }
}

/// Reference denoising results for 8x8 patches and 64x256 dictionaries.
pub const REFERENCE_PSNR: &[ReferencePsnr] = &[
    r("couple", 5, 34.16, 37.25, 37.29, 37.28),
    r("couple", 10, 28.11, 33.40, 33.49, 33.50),
    r("couple", 20, 22.11, 29.71, 30.01, 29.99),
    r("couple", 25, 20.17, 28.53, 28.88, 28.92),
    r("couple", 30, 18.58, 27.53, 27.88, 27.97),
    r("couple", 100, 8.13, 22.59, 22.58, 22.71),
    r("barbara", 5, 34.15, 37.94, 38.08, 38.04),
    r("barbara", 10, 28.14, 33.96, 34.43, 34.37),
    r("barbara", 20, 22.13, 29.95, 30.83, 30.79),
    r("barbara", 25, 20.17, 28.68, 29.63, 29.64),
    r("barbara", 30, 18.59, 27.62, 28.54, 28.63),
    r("barbara", 100, 8.11, 21.87, 21.87, 21.97),
    r("boat", 5, 34.15, 37.09, 37.21, 37.16),
    r("boat", 10, 28.13, 33.43, 33.62, 33.60),
    r("boat", 20, 22.10, 29.92, 30.36, 30.37),
    r("boat", 25, 20.17, 28.79, 29.28, 29.30),
    r("boat", 30, 18.60, 27.93, 28.41, 28.43),
    r("boat", 100, 8.13, 22.79, 22.81, 22.96),
    r("hill", 5, 34.15, 37.02, 37.08, 37.05),
    r("hill", 10, 28.14, 33.26, 33.45, 33.44),
    r("hill", 20, 22.10, 29.85, 30.17, 30.20),
    r("hill", 25, 20.18, 28.89, 29.23, 29.31),
    r("hill", 30, 18.57, 28.14, 28.43, 28.56),
    r("hill", 100, 8.16, 24.00, 23.98, 24.03),
    r("lena", 5, 34.16, 38.52, 38.62, 38.55),
    r("lena", 10, 28.12, 35.30, 35.48, 35.47),
    r("lena", 20, 22.11, 32.02, 32.40, 32.40),
    r("lena", 25, 20.18, 30.89, 31.32, 31.32),
    r("lena", 30, 18.59, 29.98, 30.41, 30.46),
    r("lena", 100, 8.14, 24.45, 24.51, 24.63),
    r("avg", 5, 34.16, 37.56, 37.66, 37.61),
    r("avg", 10, 28.13, 33.87, 34.09, 34.07),
    r("avg", 20, 22.11, 30.29, 30.75, 30.75),
    r("avg", 25, 20.17, 29.16, 29.67, 29.70),
    r("avg", 30, 18.58, 28.24, 28.74, 28.81),
    r("avg", 100, 8.13, 23.14, 23.15, 23.26),
];

/// Looks up a reference row by image name (case-insensitive) and sigma.
pub fn reference_psnr(image: &str, sigma: f64) -> Option<&'static ReferencePsnr> {
    let name = image.to_ascii_lowercase();
    REFERENCE_PSNR
        .iter()
        .find(|r| r.image == name && r.sigma as f64 == sigma)
}

/// `count` square patches of side `side` from uniformly random images and
/// uniformly random positions, optionally with their means removed.
pub fn sample_patches(
    images: &[Image],
    count: usize,
    side: usize,
    remove_means: bool,
    seed: u64,
) -> Result<TrainingMatrix> {
    if images.is_empty() {
        return Err(Error::config("no images supplied"));
    }
    if count == 0 {
        return Err(Error::config("patch count must be positive"));
    }
    for img in images {
        if img.width() < side || img.height() < side {
            return Err(Error::config(format!(
                "patch side {side} exceeds image size {}x{}",
                img.width(),
                img.height()
            )));
        }
    }
    let n = side * side;
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(n * count);
    for _ in 0..count {
        let img = &images[rng.random_range(0..images.len())];
        let r0 = rng.random_range(0..=img.height() - side);
        let c0 = rng.random_range(0..=img.width() - side);
        let start = data.len();
        for c in c0..c0 + side {
            for r in r0..r0 + side {
                data.push(img.get(r, c));
            }
        }
        if remove_means {
            let patch = &mut data[start..];
            let mean = patch.iter().sum::<f64>() / n as f64;
            patch.iter_mut().for_each(|v| *v -= mean);
        }
    }
    TrainingMatrix::new(DenseMatrix::from_col_major(n, count, data)?)
}

/// Learns from a DCT start with zero codes and returns the full trace.
pub fn convergence_trace(
    data: &TrainingMatrix,
    atoms: usize,
    lambda: f64,
    iterations: usize,
) -> Result<LearnTrace> {
    let init = overcomplete_dct(data.dim(), atoms)?;
    let cfg = LearnConfig::new(init, lambda, iterations);
    Ok(learn(data, &cfg)?.trace)
}

pub const SWEEP_HEADER: [&str; 4] = ["lambda", "nsre", "sparsity_factor", "seconds"];

/// One learning run per lambda, DCT start, reporting final NSRE and sparsity.
pub fn lambda_sweep(
    data: &TrainingMatrix,
    atoms: usize,
    lambdas: &[f64],
    iterations: usize,
) -> Result<Table> {
    if lambdas.is_empty() {
        return Err(Error::config("empty lambda grid"));
    }
    let init = overcomplete_dct(data.dim(), atoms)?;
    let mut table = Table::new(&SWEEP_HEADER);
    for &lambda in lambdas {
        let cfg = LearnConfig::new(init.clone(), lambda, iterations);
        let start = Instant::now();
        let out = learn(data, &cfg)?;
        let secs = start.elapsed().as_secs_f64();
        let last = out
            .trace
            .last()
            .ok_or_else(|| Error::config("lambda sweep needs at least one iteration"))?;
        table.push(vec![
            lambda.to_string(),
            last.nsre.to_string(),
            last.sparsity_factor.to_string(),
            secs.to_string(),
        ]);
    }
    Ok(table)
}

pub const DENOISE_HEADER: [&str; 10] = [
    "image",
    "sigma",
    "noisy_psnr",
    "odct_psnr",
    "soup_psnr",
    "ref_noisy",
    "ref_odct",
    "ref_soup",
    "delta_soup",
    "delta_odct",
];

/// Noisy, fixed-DCT and learned-dictionary PSNRs per (image, sigma). Noise
/// for pair `k` (image-major order) uses seed `seed + k`. Reference columns
/// are filled when the image name matches a published row.
pub fn denoise_table(
    images: &[(String, Image)],
    sigmas: &[f64],
    base: &DenoiseConfig,
    seed: u64,
) -> Result<Table> {
    if images.is_empty() || sigmas.is_empty() {
        return Err(Error::config("denoise table needs images and sigmas"));
    }
    let mut table = Table::new(&DENOISE_HEADER);
    let mut k = 0u64;
    for (name, clean) in images {
        for &sigma in sigmas {
            let noisy = add_gaussian_noise(clean, sigma, seed.wrapping_add(k))?;
            k += 1;
            let cfg = DenoiseConfig {
                sigma,
                ..base.clone()
            };
            let dct = overcomplete_dct(cfg.patch_side * cfg.patch_side, cfg.num_atoms)?;
            let (odct, _) = denoise_fixed_dictionary(&noisy, &dct, &cfg)?;
            let soup = denoise(&noisy, &cfg)?;
            let p_noisy = psnr(clean, &noisy)?;
            let p_odct = psnr(clean, &odct)?;
            let p_soup = psnr(clean, &soup.image)?;
            let reference = reference_psnr(name, sigma);
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            table.push(vec![
                name.clone(),
                sigma.to_string(),
                p_noisy.to_string(),
                p_odct.to_string(),
                p_soup.to_string(),
                opt(reference.map(|r| r.noisy)),
                opt(reference.map(|r| r.odct)),
                opt(reference.map(|r| r.soup)),
                opt(reference.map(|r| p_soup - r.soup)),
                opt(reference.map(|r| p_odct - r.odct)),
            ]);
        }
    }
    Ok(table)
}

pub const SCALING_HEADER: [&str; 2] = ["patches", "seconds_per_iter"];

/// Median wall time of one outer iteration for each training-set size, over
/// `iterations` timed iterations after one discarded warm-up iteration.
/// Timed iterations are interleaved across sizes so that every size sees the
/// same machine load.
pub fn scaling_bench(
    images: &[Image],
    sizes: &[usize],
    atoms: usize,
    lambda: f64,
    iterations: usize,
    seed: u64,
) -> Result<Table> {
    if sizes.is_empty() || iterations == 0 {
        return Err(Error::config("scaling bench needs sizes and iterations"));
    }
    let sets = sizes
        .iter()
        .map(|&size| sample_patches(images, size, 8, false, seed))
        .collect::<Result<Vec<_>>>()?;
    let init = overcomplete_dct(64, atoms)?;
    let cfg = LearnConfig::new(init, lambda, iterations + 1);
    let mut learners = sets
        .iter()
        .map(|data| Learner::new(data, &cfg))
        .collect::<Result<Vec<_>>>()?;
    for learner in &mut learners {
        learner.sweep()?;
    }
    let mut times = vec![Vec::with_capacity(iterations); sizes.len()];
    for _ in 0..iterations {
        for (learner, t) in learners.iter_mut().zip(&mut times) {
            let start = Instant::now();
            learner.sweep()?;
            t.push(start.elapsed().as_secs_f64());
        }
    }
    let mut table = Table::new(&SCALING_HEADER);
    for (&size, mut t) in sizes.iter().zip(times) {
        t.sort_by(f64::total_cmp);
        let mid = t.len() / 2;
        let median = if t.len() % 2 == 1 {
            t[mid]
        } else {
            0.5 * (t[mid - 1] + t[mid])
        };
        table.push(vec![size.to_string(), median.to_string()]);
    }
    Ok(table)
}

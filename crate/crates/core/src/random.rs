//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`seeded_rng`] (ChaCha8 keyed
//! by a 64-bit seed) and, for normal deviates, the Box-Muller transform in
//! [`Gaussian`]. Both are fixed so that results are reproducible across
//! platforms for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviates via the basic Box-Muller transform.
///
/// Each pair of uniforms yields two deviates; the second is cached.
#[derive(Clone, Debug, Default)]
pub struct Gaussian {
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps ln(u1) finite.
        let u1 = 1.0 - rng.random::<f64>();
        let u2 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// A vector of `len` independent standard normal deviates scaled to unit norm.
/// Retries in the (practically impossible) all-zero case.
pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut g = Gaussian::new();
    loop {
        let v: Vec<f64> = (0..len).map(|_| g.sample(rng)).collect();
        let nrm = crate::matrix::norm2(&v);
        if nrm > 0.0 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let mut rng = seeded_rng(7);
        let mut g = Gaussian::new();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // 5-sigma bounds on the sample mean and variance.
        assert!(mean.abs() < 5.0 / (n as f64).sqrt(), "mean {mean}");
        assert!(
            (var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = {
            let mut r = seeded_rng(42);
            (0..4).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = seeded_rng(42);
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn unit_vector_has_unit_norm() {
        let mut rng = seeded_rng(1);
        let v = random_unit_vector(17, &mut rng);
        assert!((crate::matrix::norm2(&v) - 1.0).abs() < 1e-12);
    }
}

//! Seeded toy-dataset generators for the separation and regression
//! experiments.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Paired inputs and targets; classification targets store the ±1 label as a
/// length-1 vector.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    /// True when the dataset holds no samples.
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Four concentric noisy circles with alternating ±1 labels: ring `i` gets
/// label +1 when `i` is even.  Points are uniform in angle with isotropic
/// Gaussian jitter of the given standard deviation.
pub fn make_rings(n_per_ring: usize, radii: &[f64], noise: f64, seed: u64) -> Result<Dataset> {
    if radii.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "expected 4 radii (two alternating classes), got {}",
            radii.len()
        )));
    }
    if radii.iter().any(|r| !(r > &0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let mut inputs = Vec::with_capacity(4 * n_per_ring);
    let mut targets = Vec::with_capacity(4 * n_per_ring);
    for (i, &r) in radii.iter().enumerate() {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..n_per_ring {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let jx = if noise > 0.0 { noise * normal.sample(&mut rng) } else { 0.0 };
            let jy = if noise > 0.0 { noise * normal.sample(&mut rng) } else { 0.0 };
            inputs.push(vec![r * theta.cos() + jx, r * theta.sin() + jy]);
            targets.push(vec![label]);
        }
    }
    Ok(Dataset { inputs, targets })
}

/// One-dimensional regression set: `x` uniform on the range, target `-x³`.
pub fn make_cubic(n: usize, range: (f64, f64), seed: u64) -> Result<Dataset> {
    let (lo, hi) = range;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.gen_range(lo..hi);
        inputs.push(vec![x]);
        targets.push(vec![-x * x * x]);
    }
    Ok(Dataset { inputs, targets })
}

// ── Tests ────────────────────────────────────────────────────────────────────

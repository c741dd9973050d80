//! Linear-dynamics analysis tables: the representability threshold λ_ε as a
//! function of damping, a battery of spectral representability verdicts for
//! diagonal targets, and a Monte-Carlo census of fixed-point instability for
//! random coupled-channel reversible blocks.

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::lintheory::{
    default_grouping_tol, lambda_eps, lambda_eps_detail, representable,
    revnet_instability_check,
};
use momrev_core::numerics::Matrix;
use momrev_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct LinearOpts {
    /// Smallest damping in the λ_ε sweep.
    #[arg(long, default_value_t = 0.01)]
    pub eps_min: f64,
    /// Largest damping in the λ_ε sweep.
    #[arg(long, default_value_t = 100.0)]
    pub eps_max: f64,
    /// Log-spaced points in the λ_ε sweep.
    #[arg(long, default_value_t = 61)]
    pub eps_steps: usize,
    /// Channel dimensions for the instability census, comma-separated.
    #[arg(long, default_value = "2,5,10", value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Random coupled blocks sampled per dimension.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Serialize)]
struct Echo<'a> {
    seed: u64,
    #[serde(flatten)]
    opts: &'a LinearOpts,
}

/// Dampings that always appear in the λ_ε table besides the log grid.
const NAMED_EPS: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

pub fn run(g: &Global, opts: &LinearOpts) -> Result<()> {
    if !(opts.eps_min > 0.0 && opts.eps_max > opts.eps_min) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eps_min < eps_max, got {} and {}",
            opts.eps_min, opts.eps_max
        )));
    }
    if opts.eps_steps < 2 {
        return Err(Error::InvalidArgument("eps_steps must be at least 2".into()));
    }
    let echo = serde_json::to_value(Echo { seed: g.seed, opts })
        .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("analyze-linear", g.seed, echo, &g.out_dir, |runner| {
        // ── λ_ε sweep ────────────────────────────────────────────────────
        let mut eps_values: Vec<f64> = NAMED_EPS.to_vec();
        let (lo, hi) = (opts.eps_min.ln(), opts.eps_max.ln());
        for i in 0..opts.eps_steps {
            let t = i as f64 / (opts.eps_steps - 1) as f64;
            eps_values.push((lo + t * (hi - lo)).exp());
        }
        eps_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eps_values.dedup();
        let mut rows = Vec::with_capacity(eps_values.len());
        for &eps in &eps_values {
            let (alpha_star, lambda) = lambda_eps_detail(eps)?;
            rows.push(vec![fmt(eps), fmt(lambda), fmt(alpha_star)]);
        }
        runner.write_csv("lambda_table.csv", &["epsilon", "lambda", "alpha_star"], rows)?;

        // ── Representability battery on diagonal 2×2 targets ─────────────
        // ε = 0 is the plain-exponential case (real logarithm condition);
        // ε = 2 probes both sides of the threshold λ_2 ≈ −0.781.
        let l2 = lambda_eps(2.0)?;
        let battery: Vec<(&str, f64, f64, f64)> = vec![
            ("exp_positive_pair", 0.0, 2.0, 3.0),
            ("exp_negative_even_pair", 0.0, -1.0, -1.0),
            ("exp_negative_distinct", 0.0, -1.0, -2.0),
            ("exp_mixed_sign", 0.0, 1.0, -1.0),
            ("exp_singular", 0.0, 0.0, 1.0),
            ("damped_above_threshold", 2.0, -0.5, -0.6),
            ("damped_below_distinct", 2.0, -0.9, -1.0),
            ("damped_below_even_pair", 2.0, -0.9, -0.9),
            ("damped_on_threshold", 2.0, l2, 0.3),
        ];
        let mut rows = Vec::with_capacity(battery.len());
        for (case, eps, l1, lambda2) in battery {
            let d = Matrix::from_rows(&[vec![l1, 0.0], vec![0.0, lambda2]]);
            let verdict = representable(&d, eps, default_grouping_tol(&d))?;
            rows.push(vec![
                case.to_string(),
                fmt(eps),
                fmt(l1),
                fmt(lambda2),
                verdict.representable.to_string(),
                (!verdict.boundary.is_empty()).to_string(),
            ]);
        }
        runner.write_csv(
            "representability.csv",
            &["case", "epsilon", "lambda1", "lambda2", "representable", "boundary_flagged"],
            rows,
        )?;

        // ── Instability census for random coupled blocks ─────────────────
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        let mut rows = Vec::with_capacity(opts.dims.len());
        for &dim in &opts.dims {
            if dim == 0 {
                return Err(Error::InvalidArgument("dims must be positive".into()));
            }
            let mut unstable = 0usize;
            let mut invertible = 0usize;
            let mut min_max_modulus = f64::INFINITY;
            for _ in 0..opts.samples {
                let mut draw =
                    |_: usize, _: usize| -> f64 { StandardNormal.sample(&mut rng) };
                let a = Matrix::from_fn(dim, dim, &mut draw);
                let b = Matrix::from_fn(dim, dim, &mut draw);
                let report = revnet_instability_check(&a, &b, 1e-9)?;
                unstable += report.unstable as usize;
                invertible += report.hypothesis_invertible as usize;
                min_max_modulus = min_max_modulus.min(report.max_modulus);
            }
            rows.push(vec![
                dim.to_string(),
                opts.samples.to_string(),
                unstable.to_string(),
                invertible.to_string(),
                fmt(min_max_modulus),
            ]);
        }
        runner.write_csv(
            "instability.csv",
            &["dim", "trials", "unstable", "hypothesis_invertible", "min_max_modulus"],
            rows,
        )?;
        Ok(())
    })
}

//! Measures information-buffer growth and live-activation memory of the
//! invertible forward/backward pair across depths and mixing coefficients.
//!
//! For each (depth k, γ) cell the forward pass banks the bits destroyed by the
//! γ-multiplications; the largest per-coordinate buffer is compared against the
//! k·log₂(1/γ) information bound. The network derives its initial velocity
//! from the input (v₀ = f(x₀)) so the velocity is nonzero from the first step
//! and every one of the k multiplications destroys its full log₂(1/γ) bits.
//! The backward pass then reconstructs activations by inversion, and an
//! activation gauge records how many state-sized vectors were ever live at
//! once — a constant, not O(depth).

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::autodiff::{backward_memory_free, Cotangent};
use momrev_core::momentum_net::{
    gauge_peak, gauge_reset, BlockParams, Gamma, Network, V0Mode,
};
use momrev_core::numerics::Matrix;
use momrev_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct MemcheckOpts {
    /// Network depths to profile, comma-separated.
    #[arg(long, default_value = "10,100,1000", value_delimiter = ',')]
    pub depths: Vec<usize>,
    /// Mixing coefficients to profile, comma-separated n/d ratios.
    #[arg(long, default_value = "1/2,3/4,9/10,99/100", value_delimiter = ',')]
    pub gammas: Vec<String>,
    /// State dimension.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Hidden width of the shared residual block.
    #[arg(long, default_value_t = 8)]
    pub width: usize,
}

#[derive(Serialize)]
struct Echo<'a> {
    seed: u64,
    frac_bits: u32,
    #[serde(flatten)]
    opts: &'a MemcheckOpts,
}

pub fn run(g: &Global, opts: &MemcheckOpts) -> Result<()> {
    let gammas = opts
        .gammas
        .iter()
        .map(|s| Gamma::parse(s))
        .collect::<Result<Vec<_>>>()?;
    if gammas.iter().any(Gamma::is_zero) {
        return Err(Error::InvalidArgument(
            "memcheck profiles invertible dynamics; gamma = 0 has no inverse".into(),
        ));
    }
    let echo = serde_json::to_value(Echo { seed: g.seed, frac_bits: g.frac_bits, opts })
        .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("memcheck", g.seed, echo, &g.out_dir, |runner| {
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        let w1 = Matrix::from_fn(opts.width, opts.dim, |_, _| rng.gen_range(-0.5..0.5));
        let w2 = Matrix::from_fn(opts.width, opts.dim, |_, _| rng.gen_range(-0.5..0.5));
        let b: Vec<f64> = (0..opts.width).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let x0: Vec<f64> = (0..opts.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut rows = Vec::new();
        for &depth in &opts.depths {
            for &gamma in &gammas {
                let block = BlockParams::new(w1.clone(), w2.clone(), b.clone(), gamma)?;
                let net =
                    Network::new_tied(block, depth, V0Mode::ResidualOfInput, g.frac_bits)?;

                gauge_reset();
                let (_, state) = net.forward(&x0)?;
                let measured = state.buffer_bits().into_iter().max().unwrap_or(0);
                let cot = Cotangent::from_output_grad(vec![1.0; opts.dim]);
                backward_memory_free(&net, state, &cot)?;
                // The gauge is thread-local, so the peak reflects exactly the
                // forward + reconstructing backward above.
                let peak = gauge_peak();

                let predicted = depth as f64 * (1.0 / gamma.as_f64()).log2();
                rows.push(vec![
                    depth.to_string(),
                    gamma.to_string(),
                    measured.to_string(),
                    fmt(predicted),
                    fmt(measured as f64 / depth as f64),
                    peak.to_string(),
                ]);
            }
        }
        runner.write_csv(
            "memcheck.csv",
            &[
                "depth",
                "gamma",
                "measured_bits",
                "predicted_bits",
                "bits_per_step",
                "peak_live_activations",
            ],
            rows,
        )?;
        Ok(())
    })
}

//! 1-D regression x ↦ −x³ with tied-weight networks: momentum vs. plain
//! residual under the same budget, plus per-layer state trajectories on an
//! input grid (the plain network's trajectories can never cross; the
//! momentum network's can, which is what lets it bend onto −x³).

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::momentum_net::Gamma;
use momrev_core::trainer::{make_cubic, sgd_train, GradPath, MlpNetModel, TrainConfig};
use momrev_core::{Error, Result};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct CubicOpts {
    /// Training points, uniform in the input range.
    #[arg(long, default_value_t = 256)]
    pub n_points: usize,
    /// Hidden width of the shared residual block.
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    /// Minibatch size.
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Constant learning rate.
    #[arg(long, default_value_t = 0.02)]
    pub lr: f64,
    /// Global gradient-norm ceiling.
    #[arg(long, default_value_t = 1.0)]
    pub clip: f64,
    /// Evaluate training MSE every this many iterations.
    #[arg(long, default_value_t = 200)]
    pub eval_every: usize,
    /// Points of the trajectory grid emitted after training.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
}

#[derive(Serialize)]
struct Echo<'a> {
    seed: u64,
    gamma: &'a str,
    frac_bits: u32,
    depth: usize,
    iterations: usize,
    threads: usize,
    data_seed: u64,
    range: (f64, f64),
    #[serde(flatten)]
    opts: &'a CubicOpts,
}

pub fn run(g: &Global, opts: &CubicOpts) -> Result<()> {
    let depth = g.depth.unwrap_or(15);
    let iterations = g.epochs.unwrap_or(8000);
    let data_seed = 1000 + g.seed;
    let range = (-1.0, 1.0);
    let echo = serde_json::to_value(Echo {
        seed: g.seed,
        gamma: &g.gamma_text,
        frac_bits: g.frac_bits,
        depth,
        iterations,
        threads: g.threads,
        data_seed,
        range,
        opts,
    })
    .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("train-cubic", g.seed, echo, &g.out_dir, |runner| {
        let data = make_cubic(opts.n_points, range, data_seed)?;
        let mut history = Vec::new();
        let mut summary = Vec::new();
        let mut trajectories = Vec::new();

        for (name, gamma, path) in [
            ("momentum", g.gamma, GradPath::MemoryFree),
            ("resnet", Gamma::Zero, GradPath::Stored),
        ] {
            let mut model = MlpNetModel::cubic_model(
                g.seed,
                gamma,
                depth,
                opts.width,
                g.frac_bits,
                data.clone(),
                path,
            )?;
            let mut cfg = TrainConfig::new(g.seed, opts.batch, opts.lr, iterations);
            cfg.gamma = gamma;
            cfg.depth = depth;
            cfg.clip_norm = Some(opts.clip);
            cfg.eval_every = opts.eval_every;
            let report = sgd_train(&mut model, &cfg)?;

            for (it, loss) in report.train_history.iter().enumerate() {
                history.push(vec![name.to_string(), (it + 1).to_string(), fmt(*loss)]);
            }
            summary.push(vec![name.to_string(), fmt(report.final_metric())]);

            // Layer-by-layer states for evenly spaced inputs.
            for i in 0..opts.grid {
                let t = if opts.grid > 1 {
                    i as f64 / (opts.grid - 1) as f64
                } else {
                    0.5
                };
                let x = range.0 + t * (range.1 - range.0);
                let states = model.layer_states(&[x])?;
                for (layer, state) in states.iter().enumerate() {
                    trajectories.push(vec![
                        name.to_string(),
                        i.to_string(),
                        fmt(x),
                        layer.to_string(),
                        fmt(state[0]),
                    ]);
                }
            }
        }

        runner.write_csv(
            "cubic_history.csv",
            &["model", "iteration", "train_loss"],
            history,
        )?;
        runner.write_csv("cubic_summary.csv", &["model", "final_mse"], summary)?;
        runner.write_csv(
            "cubic_trajectories.csv",
            &["model", "input_index", "input", "layer", "x"],
            trajectories,
        )?;
        Ok(())
    })
}

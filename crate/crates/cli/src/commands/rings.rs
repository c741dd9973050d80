//! Four-nested-rings separation: a depth-15 momentum network against a plain
//! residual network of identical architecture, initialization, and budget.
//!
//! Artifacts: per-iteration training loss, periodic training accuracy,
//! per-layer point clouds after training (depth+1 snapshots per model), and
//! a summary with the first iteration reaching full accuracy.

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::momentum_net::Gamma;
use momrev_core::trainer::{make_rings, sgd_train, GradPath, MlpNetModel, TrainConfig};
use momrev_core::{Error, Result};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct RingsOpts {
    /// Points per ring.
    #[arg(long, default_value_t = 50)]
    pub n_per_ring: usize,
    /// Gaussian jitter around each ring.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Hidden width of each residual block.
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    /// Minibatch size.
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Initial learning rate of the cosine schedule.
    #[arg(long, default_value_t = 0.8)]
    pub lr: f64,
    /// Final learning rate of the cosine schedule.
    #[arg(long, default_value_t = 0.02)]
    pub lr_final: f64,
    /// Global gradient-norm ceiling.
    #[arg(long, default_value_t = 5.0)]
    pub clip: f64,
    /// Decoupled weight decay on the block matrices.
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    /// Evaluate training accuracy every this many iterations.
    #[arg(long, default_value_t = 100)]
    pub eval_every: usize,
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
    radii: [f64; 4],
    #[serde(flatten)]
    opts: &'a RingsOpts,
}

const RADII: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

pub fn run(g: &Global, opts: &RingsOpts) -> Result<()> {
    let depth = g.depth.unwrap_or(15);
    let iterations = g.epochs.unwrap_or(5000);
    let data_seed = 1000 + g.seed;
    let echo = serde_json::to_value(Echo {
        seed: g.seed,
        gamma: &g.gamma_text,
        frac_bits: g.frac_bits,
        depth,
        iterations,
        threads: g.threads,
        data_seed,
        radii: RADII,
        opts,
    })
    .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("train-rings", g.seed, echo, &g.out_dir, |runner| {
        let data = make_rings(opts.n_per_ring, &RADII, opts.noise, data_seed)?;
        let mut history = Vec::new();
        let mut accuracy = Vec::new();
        let mut summary = Vec::new();

        for (name, gamma, path) in [
            ("momentum", g.gamma, GradPath::MemoryFree),
            ("resnet", Gamma::Zero, GradPath::Stored),
        ] {
            let mut model = MlpNetModel::rings_model(
                g.seed,
                gamma,
                depth,
                opts.width,
                g.frac_bits,
                data.clone(),
                path,
            )?;
            let mut cfg = TrainConfig::new(g.seed, opts.batch, opts.lr, iterations);
            cfg.lr_final = Some(opts.lr_final);
            cfg.gamma = gamma;
            cfg.depth = depth;
            cfg.weight_decay = opts.weight_decay;
            cfg.clip_norm = Some(opts.clip);
            cfg.eval_every = opts.eval_every;
            let report = sgd_train(&mut model, &cfg)?;

            for (it, loss) in report.train_history.iter().enumerate() {
                history.push(vec![name.to_string(), (it + 1).to_string(), fmt(*loss)]);
            }
            let mut best = 0.0f64;
            let mut first_full: Option<usize> = None;
            for &(it, acc) in &report.eval_history {
                accuracy.push(vec![name.to_string(), it.to_string(), fmt(acc)]);
                best = best.max(acc);
                if acc == 1.0 && first_full.is_none() {
                    first_full = Some(it);
                }
            }
            let final_acc = report.final_metric();
            summary.push(vec![
                name.to_string(),
                fmt(final_acc),
                fmt(best),
                first_full.map(|i| i.to_string()).unwrap_or_default(),
            ]);

            // Per-layer transformed clouds of the training points.
            let mut cloud = Vec::new();
            for (idx, (input, target)) in
                data.inputs.iter().zip(&data.targets).enumerate()
            {
                let states = model.layer_states(input)?;
                for (layer, state) in states.iter().enumerate() {
                    cloud.push(vec![
                        layer.to_string(),
                        idx.to_string(),
                        fmt(state[0]),
                        fmt(state[1]),
                        fmt(target[0]),
                    ]);
                }
            }
            runner.write_csv(
                &format!("rings_clouds_{name}.csv"),
                &["layer", "point", "x0", "x1", "label"],
                cloud,
            )?;
        }

        runner.write_csv(
            "rings_history.csv",
            &["model", "iteration", "train_loss"],
            history,
        )?;
        runner.write_csv(
            "rings_accuracy.csv",
            &["model", "iteration", "train_accuracy"],
            accuracy,
        )?;
        runner.write_csv(
            "rings_summary.csv",
            &[
                "model",
                "final_accuracy",
                "best_accuracy",
                "first_full_accuracy_iteration",
            ],
            summary,
        )?;
        Ok(())
    })
}

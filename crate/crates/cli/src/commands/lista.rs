//! Sparse-coding benchmark across unrolling depths: the ISTA baseline plus
//! trained plain, momentum, and coupled two-stream shrinkage networks, all
//! evaluated by mean lasso objective on held-out measurements.

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::trainer::{
    ista_mean_test_loss, make_lista_problem, sgd_train, ListaNet, ListaVariant, TrainConfig,
};
use momrev_core::{Error, Result};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct ListaOpts {
    /// Unrolling depths, comma-separated.
    #[arg(long, default_value = "2,5,10,20,30", value_delimiter = ',')]
    pub depths: Vec<usize>,
    /// Measurement dimension d.
    #[arg(long, default_value_t = 16)]
    pub data_dim: usize,
    /// Code dimension p.
    #[arg(long, default_value_t = 32)]
    pub code_dim: usize,
    /// ℓ₁ weight of the lasso objective.
    #[arg(long, default_value_t = 0.1)]
    pub lasso_lambda: f64,
    /// Training measurements.
    #[arg(long, default_value_t = 1000)]
    pub n_train: usize,
    /// Held-out measurements.
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    /// Minibatch size.
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    /// Constant learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Global gradient-norm ceiling.
    #[arg(long, default_value_t = 100.0)]
    pub clip: f64,
    /// Start the momentum variant from the first residual instead of zero
    /// velocity.
    #[arg(long, default_value_t = false)]
    pub v0_residual: bool,
}

#[derive(Serialize)]
struct Echo<'a> {
    seed: u64,
    gamma: &'a str,
    iterations: usize,
    threads: usize,
    problem_seed: u64,
    #[serde(flatten)]
    opts: &'a ListaOpts,
}

pub fn run(g: &Global, opts: &ListaOpts) -> Result<()> {
    let iterations = g.epochs.unwrap_or(2000);
    let problem_seed = 42 + g.seed;
    let echo = serde_json::to_value(Echo {
        seed: g.seed,
        gamma: &g.gamma_text,
        iterations,
        threads: g.threads,
        problem_seed,
        opts,
    })
    .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("lista", g.seed, echo, &g.out_dir, |runner| {
        let problem = make_lista_problem(
            opts.data_dim,
            opts.code_dim,
            opts.lasso_lambda,
            opts.n_train,
            opts.n_test,
            problem_seed,
        )?;
        let gamma = g.gamma.as_f64();
        let mut rows = Vec::new();
        for &depth in &opts.depths {
            rows.push(vec![
                depth.to_string(),
                "ista".to_string(),
                fmt(ista_mean_test_loss(&problem, depth)?),
            ]);
            for (name, variant) in [
                ("lista", ListaVariant::Plain),
                (
                    "momentum",
                    ListaVariant::Momentum {
                        gamma,
                        v0_residual: opts.v0_residual,
                    },
                ),
                ("coupled", ListaVariant::Coupled),
            ] {
                let mut net = ListaNet::new(problem.clone(), depth, variant)?;
                let mut cfg = TrainConfig::new(g.seed, opts.batch, opts.lr, iterations);
                cfg.depth = depth;
                cfg.clip_norm = Some(opts.clip);
                let report = sgd_train(&mut net, &cfg)?;
                rows.push(vec![
                    depth.to_string(),
                    name.to_string(),
                    fmt(report.final_metric()),
                ]);
            }
        }
        runner.write_csv("lista_losses.csv", &["depth", "model", "test_loss"], rows)?;
        Ok(())
    })
}

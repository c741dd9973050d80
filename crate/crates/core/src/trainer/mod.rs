//! Deterministic minibatch SGD over the reversible networks, plus the toy
//! datasets and the sparse-coding benchmark they train on.
//!
//! Everything here is a pure function of its configuration and seed: batches
//! are drawn from a seeded generator, per-sample work may run in parallel but
//! is always reduced in ascending sample order, and re-running a training job
//! reproduces its loss history bit for bit.
//!
//! # Training protocols
//!
//! **Separation (four rings).** Depth-15 untied momentum network on 2-D
//! points, width-16 blocks, linear readout with logistic loss.  Defaults:
//! 5000 iterations, batch 64, cosine learning rate 0.8 → 0.02, global
//! gradient clip 5.0, weight decay 5·10⁻⁴ on the block matrices only.
//! The benchmark metric is training accuracy.
//!
//! **1-D regression (x ↦ −x³).** Depth-15 tied-weights network on scalar
//! states; the loss is the mean squared error between the final state and
//! the target (no readout layer).  Defaults: 8000 iterations, batch 64,
//! constant learning rate 0.02, clip 1.0, 256 uniform training points in
//! [−1, 1].  The benchmark metric is training MSE.
//!
//! **Sparse coding.** Unrolled shrinkage networks (see [`lista`]) trained
//! with plain SGD, 2000 iterations, batch 256, learning rate 10⁻³, clip 100;
//! the metric is mean lasso objective on held-out measurements.

mod data;
mod lista;
mod mlp;
mod sgd;

pub use data::{make_cubic, make_rings, Dataset};
pub use lista::{
    ista_iterate, ista_mean_test_loss, lasso_grad_x, lasso_loss, make_lista_problem, ListaNet,
    ListaProblem, ListaVariant,
};
pub use mlp::{GradPath, MlpNetModel, OutputLoss};
pub use sgd::{sgd_train, Model, SgdReport, TrainConfig};

pub use crate::momentum_net::soft_threshold;

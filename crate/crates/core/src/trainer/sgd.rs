//! Model-agnostic minibatch SGD with deterministic seeding: fixed batch
//! sampling, fixed ascending-index gradient reduction, optional cosine
//! learning-rate annealing, global-norm clipping, decoupled weight decay on a
//! model-chosen parameter subset, and classical optimizer momentum.

use crate::error::{Error, Result};
use crate::momentum_net::{Gamma, V0Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ── Configuration ────────────────────────────────────────────────────────────

/// Hyperparameters for one training run.  `gamma`, `depth`, and `v0_mode`
/// describe the model being trained (constructors read them); the rest drive
/// the loop itself.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Cosine-anneal the rate down to this value; `None` keeps it constant.
    pub lr_final: Option<f64>,
    pub iterations: usize,
    pub gamma: Gamma,
    pub depth: usize,
    pub v0_mode: V0Mode,
    /// Decoupled weight decay applied to parameters the model marks for it.
    pub weight_decay: f64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Classical momentum on the update direction; 0 is plain SGD.
    pub optimizer_momentum: f64,
    /// Evaluate every this many iterations (0 = final evaluation only).
    pub eval_every: usize,
}

impl TrainConfig {
    /// A plain-SGD starting point; experiments override what they need.
    pub fn new(seed: u64, batch_size: usize, learning_rate: f64, iterations: usize) -> Self {
        TrainConfig {
            seed,
            batch_size,
            learning_rate,
            lr_final: None,
            iterations,
            gamma: Gamma::ratio(9, 10).expect("9/10 is a valid ratio"),
            depth: 15,
            v0_mode: V0Mode::Zero,
            weight_decay: 0.0,
            clip_norm: None,
            optimizer_momentum: 0.0,
            eval_every: 0,
        }
    }

    /// Checks ranges; called by `sgd_train`.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if let Some(lf) = self.lr_final {
            if !(lf >= 0.0 && lf.is_finite()) {
                return Err(Error::InvalidArgument(format!("lr_final out of range: {lf}")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight_decay out of range: {}",
                self.weight_decay
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("clip_norm out of range: {c}")));
            }
        }
        if !(0.0..1.0).contains(&self.optimizer_momentum) {
            return Err(Error::InvalidArgument(format!(
                "optimizer_momentum must be in [0, 1), got {}",
                self.optimizer_momentum
            )));
        }
        Ok(())
    }

    /// Learning rate at iteration `it` (cosine anneal when `lr_final` is set).
    pub fn lr_at(&self, it: usize) -> f64 {
        match self.lr_final {
            None => self.learning_rate,
            Some(lf) => {
                let progress = it as f64 / self.iterations.max(1) as f64;
                lf + 0.5 * (self.learning_rate - lf) * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

// ── Model abstraction ────────────────────────────────────────────────────────

/// A trainable model bound to its data.  Parameters live flattened behind
/// `update`; the trainer never inspects them directly.
pub trait Model {
    /// Number of training samples (batch indices are drawn below this).
    fn n_train(&self) -> usize;

    /// Total flattened parameter count.
    fn param_len(&self) -> usize;

    /// Mean loss over the batch and the flat gradient (fixed reduction order).
    fn loss_and_grad(&mut self, batch: &[usize]) -> Result<(f64, Vec<f64>)>;

    /// Applies `param[i] ← param[i]·decay[i] − step[i]`.
    fn update(&mut self, step: &[f64], decay: &[f64]) -> Result<()>;

    /// Which flat parameters receive weight decay.
    fn decay_mask(&self) -> Vec<bool>;

    /// Held-out (or training-set) evaluation metric for reporting.
    fn eval_metric(&self) -> Result<f64>;
}

/// Loss trace of a training run.
#[derive(Debug, Clone)]
pub struct SgdReport {
    /// Minibatch training loss per iteration.
    pub train_history: Vec<f64>,
    /// `(iteration, metric)` pairs from periodic evaluation; always ends with
    /// a final-iteration entry.
    pub eval_history: Vec<(usize, f64)>,
}

impl SgdReport {
    /// The last recorded evaluation metric.
    pub fn final_metric(&self) -> f64 {
        self.eval_history.last().map(|&(_, m)| m).unwrap_or(f64::NAN)
    }
}

// ── The loop ─────────────────────────────────────────────────────────────────

/// Runs minibatch SGD.  Batches are drawn with replacement from a ChaCha
/// stream seeded by `config.seed`, so identical configs reproduce identical
/// histories bit for bit.  Non-finite losses or gradients abort with a
/// divergence error.
pub fn sgd_train(model: &mut dyn Model, config: &TrainConfig) -> Result<SgdReport> {
    config.validate()?;
    let n = model.n_train();
    if n == 0 {
        return Err(Error::InvalidArgument("model has no training samples".into()));
    }
    let plen = model.param_len();
    let mask = model.decay_mask();
    if mask.len() != plen {
        return Err(Error::ShapeMismatch(format!(
            "decay mask length {} vs parameter length {plen}",
            mask.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut velocity = vec![0.0f64; plen];
    let mut step = vec![0.0f64; plen];
    let mut decay = vec![1.0f64; plen];
    let mut train_history = Vec::with_capacity(config.iterations);
    let mut eval_history = Vec::new();

    for it in 0..config.iterations {
        let batch: Vec<usize> = (0..config.batch_size).map(|_| rng.gen_range(0..n)).collect();
        let (loss, mut grad) = model.loss_and_grad(&batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "training loss became non-finite at iteration {it}"
            )));
        }
        if grad.len() != plen {
            return Err(Error::ShapeMismatch(format!(
                "gradient length {} vs parameter length {plen}",
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "gradient became non-finite at iteration {it}"
            )));
        }
        train_history.push(loss);

        if let Some(ceiling) = config.clip_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > ceiling {
                let scale = ceiling / norm;
                for g in &mut grad {
                    *g *= scale;
                }
            }
        }

        let lr = config.lr_at(it);
        let om = config.optimizer_momentum;
        for i in 0..plen {
            velocity[i] = om * velocity[i] + grad[i];
            step[i] = lr * velocity[i];
            decay[i] = if mask[i] { 1.0 - lr * config.weight_decay } else { 1.0 };
        }
        model.update(&step, &decay)?;

        if config.eval_every > 0 && (it + 1) % config.eval_every == 0 {
            eval_history.push((it + 1, model.eval_metric()?));
        }
    }
    if eval_history.last().map(|&(i, _)| i) != Some(config.iterations) {
        eval_history.push((config.iterations, model.eval_metric()?));
    }
    Ok(SgdReport { train_history, eval_history })
}

// ── Tests ────────────────────────────────────────────────────────────────────

//! Trainable wrapper around the invertible fixed-point momentum network for
//! the 2-D separation and 1-D regression benchmarks.
//!
//! Forward passes run in the exact fixed-point arithmetic; gradients flow
//! through either the memory-free backward pass (activations reconstructed by
//! inversion) or the stored-trace reference, selected by [`GradPath`].  Both
//! paths visit the same grid points, so training histories coincide.

use crate::autodiff::{backward_memory_free, backward_stored, Cotangent, ParamGrad};
use crate::batch;
use crate::error::{Error, Result};
use crate::momentum_net::{BlockParams, Gamma, Network, V0Mode};
use crate::numerics::matrix::{dot, Matrix};
use crate::trainer::data::Dataset;
use crate::trainer::sgd::Model;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// How the network output enters the training loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputLoss {
    /// Per-sample squared error `Σ_j (out_j − target_j)²` (batch-averaged).
    Mse,
    /// Linear readout `w_h·out + b_h` with logistic loss against ±1 labels
    /// stored in `target[0]`.
    LogisticHead,
}

/// Which backward implementation computes the parameter gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradPath {
    /// Reconstruct activations by inverting the forward pass (no trace).
    MemoryFree,
    /// Keep a recorded activation trace (reference path; required for γ = 0,
    /// whose dynamics are not invertible).
    Stored,
}

/// A momentum network plus loss head and dataset, trainable via [`Model`].
#[derive(Clone, Debug)]
pub struct MlpNetModel {
    net: Network,
    /// `(w_h, b_h)` of the linear readout; present iff the loss uses one.
    head: Option<(Vec<f64>, f64)>,
    data: Dataset,
    loss: OutputLoss,
    grad_path: GradPath,
}

/// Samples per parallel gradient chunk; bounds live per-sample gradients
/// while keeping the ascending-index reduction order.
const GRAD_CHUNK: usize = 32;

impl MlpNetModel {
    /// Wraps an existing network.  `head` must be present exactly for
    /// [`OutputLoss::LogisticHead`] and match the state dimension; MSE
    /// targets must match it too.  γ = 0 cannot use the memory-free path.
    pub fn new(
        net: Network,
        head: Option<(Vec<f64>, f64)>,
        data: Dataset,
        loss: OutputLoss,
        grad_path: GradPath,
    ) -> Result<MlpNetModel> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        // A depth-0 network is the identity on any state dimension; take the
        // dimension from the data in that case.
        let d = if net.blocks().is_empty() {
            data.inputs[0].len()
        } else {
            net.dim()
        };
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            let t_ok = match loss {
                OutputLoss::Mse => t.len() == d,
                OutputLoss::LogisticHead => t.len() == 1,
            };
            if x.len() != d || !t_ok {
                return Err(Error::ShapeMismatch(format!(
                    "sample with input length {} / target length {} for state dimension {d}",
                    x.len(),
                    t.len()
                )));
            }
        }
        match (loss, &head) {
            (OutputLoss::LogisticHead, Some((wh, _))) if wh.len() == d => {}
            (OutputLoss::LogisticHead, _) => {
                return Err(Error::InvalidArgument(format!(
                    "logistic loss needs a readout vector of length {d}"
                )));
            }
            (OutputLoss::Mse, None) => {}
            (OutputLoss::Mse, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "MSE loss does not take a readout head".into(),
                ));
            }
        }
        if !net.blocks().is_empty() && net.gamma().is_zero() && grad_path == GradPath::MemoryFree {
            return Err(Error::InvalidArgument(
                "γ = 0 dynamics are not invertible; use the stored-trace gradient path".into(),
            ));
        }
        Ok(MlpNetModel {
            net,
            head,
            data,
            loss,
            grad_path,
        })
    }

    /// Depth-`depth` untied network for the four-rings separation task:
    /// width-16 blocks on a 2-D state with a logistic readout.
    ///
    /// Initialization (all from one seeded stream): per layer
    /// `W₁ ~ N(0, 1/d)`, `W₂ ~ N(0, 0.01)`, `b = 0`; readout
    /// `w_h ~ N(0, 0.25)`, `b_h = 0`.
    pub fn rings_model(
        seed: u64,
        gamma: Gamma,
        depth: usize,
        width: usize,
        frac_bits: u32,
        data: Dataset,
        grad_path: GradPath,
    ) -> Result<MlpNetModel> {
        let d = data
            .inputs
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("dataset is empty".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd1 = 1.0 / (d as f64).sqrt();
        let w1s: Vec<Matrix> = (0..depth)
            .map(|_| Matrix::from_fn(width, d, |_, _| sd1 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let w2s: Vec<Matrix> = (0..depth)
            .map(|_| Matrix::from_fn(width, d, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let wh: Vec<f64> = (0..d)
            .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let blocks: Result<Vec<BlockParams>> = w1s
            .into_iter()
            .zip(w2s)
            .map(|(w1, w2)| BlockParams::new(w1, w2, vec![0.0; width], gamma))
            .collect();
        let net = Network::new(blocks?, V0Mode::Zero, frac_bits)?;
        MlpNetModel::new(
            net,
            Some((wh, 0.0)),
            data,
            OutputLoss::LogisticHead,
            grad_path,
        )
    }

    /// Depth-`depth` tied-weights network for 1-D regression: one shared
    /// width-16 block, MSE on the final state.
    ///
    /// Initialization: `W₁ ~ N(0, 1)`, `W₂ ~ N(0, 0.0025)`, `b = 0`.
    pub fn cubic_model(
        seed: u64,
        gamma: Gamma,
        depth: usize,
        width: usize,
        frac_bits: u32,
        data: Dataset,
        grad_path: GradPath,
    ) -> Result<MlpNetModel> {
        let d = data
            .inputs
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("dataset is empty".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = Matrix::from_fn(width, d, |_, _| rng.sample(StandardNormal));
        let w2 = Matrix::from_fn(width, d, |_, _| 0.05 * rng.sample::<f64, _>(StandardNormal));
        let block = BlockParams::new(w1, w2, vec![0.0; width], gamma)?;
        let net = Network::new_tied(block, depth, V0Mode::Zero, frac_bits)?;
        MlpNetModel::new(net, None, data, OutputLoss::Mse, grad_path)
    }

    /// The wrapped network.
    pub fn net(&self) -> &Network {
        &self.net
    }

    /// Mutable access to the wrapped network (e.g. for sanity runs that zero
    /// the residual).
    pub fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// The linear readout, when the loss uses one.
    pub fn head(&self) -> Option<(&[f64], f64)> {
        self.head.as_ref().map(|(w, b)| (w.as_slice(), *b))
    }

    /// The training set.
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Final network state for one input (exact fixed-point forward).
    pub fn output_for(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.net.forward(input)?.0)
    }

    /// Per-layer states for one input: `depth + 1` snapshots including the
    /// (grid-quantized) input itself.
    pub fn layer_states(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (out, _, trace) = self.net.forward_recording(input)?;
        let mut states = trace.xs.clone();
        states.push(out);
        Ok(states)
    }

    fn n_slots(&self) -> usize {
        self.net.blocks().len()
    }

    fn slot_len(&self) -> usize {
        match self.net.blocks().first() {
            Some(b) => 2 * b.width() * b.dim() + b.width(),
            None => 0,
        }
    }

    fn head_len(&self) -> usize {
        match (self.loss, &self.head) {
            (OutputLoss::LogisticHead, Some((wh, _))) => wh.len() + 1,
            _ => 0,
        }
    }

    /// Loss and output-gradient for one sample, plus head gradients when a
    /// readout is present.  Everything is unscaled (batch averaging happens
    /// in the caller).
    fn output_loss_grad(&self, out: &[f64], target: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        match self.loss {
            OutputLoss::Mse => {
                let mut loss = 0.0;
                let mut g = Vec::with_capacity(out.len());
                for (o, t) in out.iter().zip(target) {
                    let r = o - t;
                    loss += r * r;
                    g.push(2.0 * r);
                }
                (loss, g, Vec::new())
            }
            OutputLoss::LogisticHead => {
                let (wh, bh) = self.head.as_ref().expect("validated at construction");
                let label = target[0];
                let logit = dot(wh, out) + bh;
                let z = label * logit;
                // ln(1 + e^{−z}) evaluated stably.
                let loss = if z > 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                };
                let sig = 1.0 / (1.0 + z.exp());
                let dlogit = -label * sig;
                let gx: Vec<f64> = wh.iter().map(|w| dlogit * w).collect();
                let mut head_grad: Vec<f64> = out.iter().map(|o| dlogit * o).collect();
                head_grad.push(dlogit);
                (loss, gx, head_grad)
            }
        }
    }

    /// Loss and flat gradient for one training sample (unscaled).
    fn sample_loss_grad(&self, idx: usize) -> Result<(f64, Vec<f64>)> {
        let input = self.data.inputs.get(idx).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "batch index {idx} out of range for {} samples",
                self.data.len()
            ))
        })?;
        let target = &self.data.targets[idx];
        let (head_grad, grads, loss) = match self.grad_path {
            GradPath::MemoryFree => {
                let (out, state) = self.net.forward(input)?;
                let (loss, gx, head_grad) = self.output_loss_grad(&out, target);
                let cot = Cotangent::from_output_grad(gx);
                let (grads, _) = backward_memory_free(&self.net, state, &cot)?;
                (head_grad, grads, loss)
            }
            GradPath::Stored => {
                let (out, _, trace) = self.net.forward_recording(input)?;
                let (loss, gx, head_grad) = self.output_loss_grad(&out, target);
                let cot = Cotangent::from_output_grad(gx);
                let (grads, _) = backward_stored(&self.net, &trace, &cot)?;
                (head_grad, grads, loss)
            }
        };
        let mut flat = vec![0.0; self.param_len()];
        let slot_len = self.slot_len();
        for (s, g) in grads.iter().enumerate() {
            let base = s * slot_len;
            flatten_grad(g, &mut flat[base..base + slot_len]);
        }
        let head_base = self.n_slots() * slot_len;
        flat[head_base..].copy_from_slice(&head_grad);
        Ok((loss, flat))
    }
}

/// Writes one block gradient into a flat slice as [w1, w2, b], row-major.
fn flatten_grad(g: &ParamGrad, out: &mut [f64]) {
    let nw = g.dw1.data().len();
    out[..nw].copy_from_slice(g.dw1.data());
    out[nw..2 * nw].copy_from_slice(g.dw2.data());
    out[2 * nw..].copy_from_slice(&g.db);
}

impl Model for MlpNetModel {
    fn n_train(&self) -> usize {
        self.data.len()
    }

    fn param_len(&self) -> usize {
        self.n_slots() * self.slot_len() + self.head_len()
    }

    fn loss_and_grad(&mut self, batch_idx: &[usize]) -> Result<(f64, Vec<f64>)> {
        if batch_idx.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut loss_sum = 0.0;
        let mut grad = vec![0.0; self.param_len()];
        for chunk in batch_idx.chunks(GRAD_CHUNK) {
            let (l, g) = batch::try_map_fold(
                chunk,
                |_, &idx| self.sample_loss_grad(idx),
                (0.0f64, grad),
                |(mut ls, mut acc), (l, g)| {
                    ls += l;
                    for (ai, gi) in acc.iter_mut().zip(&g) {
                        *ai += gi;
                    }
                    (ls, acc)
                },
            )?;
            loss_sum += l;
            grad = g;
        }
        let inv_b = 1.0 / batch_idx.len() as f64;
        for gi in &mut grad {
            *gi *= inv_b;
        }
        Ok((loss_sum * inv_b, grad))
    }

    fn update(&mut self, step: &[f64], decay: &[f64]) -> Result<()> {
        if step.len() != self.param_len() || decay.len() != self.param_len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got step {} / decay {}",
                self.param_len(),
                step.len(),
                decay.len()
            )));
        }
        let slot_len = self.slot_len();
        let n_slots = self.n_slots();
        for (s, block) in self.net.blocks_mut().iter_mut().enumerate() {
            let base = s * slot_len;
            let nw = block.w1.data().len();
            for (i, wi) in block.w1.data_mut().iter_mut().enumerate() {
                *wi = *wi * decay[base + i] - step[base + i];
            }
            for (i, wi) in block.w2.data_mut().iter_mut().enumerate() {
                *wi = *wi * decay[base + nw + i] - step[base + nw + i];
            }
            for (i, bi) in block.b.iter_mut().enumerate() {
                *bi = *bi * decay[base + 2 * nw + i] - step[base + 2 * nw + i];
            }
        }
        if let Some((wh, bh)) = self.head.as_mut() {
            let base = n_slots * slot_len;
            for (i, wi) in wh.iter_mut().enumerate() {
                *wi = *wi * decay[base + i] - step[base + i];
            }
            let last = base + wh.len();
            *bh = *bh * decay[last] - step[last];
        }
        Ok(())
    }

    fn decay_mask(&self) -> Vec<bool> {
        // Weight decay applies to the block matrices only — not biases, not
        // the readout.
        let mut mask = Vec::with_capacity(self.param_len());
        if let Some(b) = self.net.blocks().first() {
            let nw = b.width() * b.dim();
            for _ in 0..self.n_slots() {
                mask.extend(std::iter::repeat(true).take(2 * nw));
                mask.extend(std::iter::repeat(false).take(b.width()));
            }
        }
        mask.extend(std::iter::repeat(false).take(self.head_len()));
        mask
    }

    fn eval_metric(&self) -> Result<f64> {
        let n = self.data.len();
        let total = batch::try_map_fold(
            self.data.inputs.as_slice(),
            |i, input| {
                let out = self.net.forward(input)?.0;
                match self.loss {
                    OutputLoss::Mse => {
                        let t = &self.data.targets[i];
                        Ok(out
                            .iter()
                            .zip(t)
                            .map(|(o, ti)| (o - ti) * (o - ti))
                            .sum::<f64>())
                    }
                    OutputLoss::LogisticHead => {
                        let (wh, bh) = self.head.as_ref().expect("validated");
                        let logit = dot(wh, &out) + bh;
                        let label = self.data.targets[i][0];
                        let pred = if logit > 0.0 {
                            1.0
                        } else if logit < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        Ok(if pred == label { 1.0 } else { 0.0 })
                    }
                }
            },
            0.0f64,
            |acc, v| acc + v,
        )?;
        Ok(total / n as f64)
    }
}

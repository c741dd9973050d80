//! Sparse-coding benchmark: dictionary problems, ISTA, and unrolled
//! shrinkage networks (plain, momentum, and coupled two-stream variants).
//!
//! The task is the lasso: given a dictionary `D` (unit-norm columns) and a
//! measurement `y`, find a code `x` minimizing `½‖y − Dx‖² + λ‖x‖₁`.
//! Classical ISTA iterates `x ← shrink(x − η Dᵀ(Dx − y), ηλ)` with step
//! `η = 1/‖D‖₂²`.  The unrolled networks start from that iteration
//! (`W¹ = I − η DᵀD`, `W² = η Dᵀ`, threshold fixed at `ηλ`) and train the
//! per-layer matrices by stochastic gradient descent while the threshold
//! stays frozen.

use crate::batch;
use crate::error::{Error, Result};
use crate::momentum_net::soft_threshold;
use crate::numerics::matrix::{dot, norm2, Matrix};
use crate::trainer::sgd::Model;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A random sparse-coding task: dictionary, regularization, ISTA step size,
/// and normalized train/test measurement sets.
#[derive(Clone, Debug)]
pub struct ListaProblem {
    dict: Matrix, // d×p, unit ℓ₂-norm columns
    lasso_lambda: f64,
    eta: f64, // 1 / ‖D‖₂²
    train_ys: Vec<Vec<f64>>,
    test_ys: Vec<Vec<f64>>,
}

impl ListaProblem {
    /// Dictionary matrix (`d×p`, unit-norm columns).
    pub fn dict(&self) -> &Matrix {
        &self.dict
    }

    /// ℓ₁ regularization weight of the lasso objective.
    pub fn lasso_lambda(&self) -> f64 {
        self.lasso_lambda
    }

    /// ISTA step size `η = 1/‖D‖₂²`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Shrinkage threshold `ηλ` used by ISTA and kept frozen in the networks.
    pub fn threshold(&self) -> f64 {
        self.eta * self.lasso_lambda
    }

    /// Measurement dimension `d`.
    pub fn data_dim(&self) -> usize {
        self.dict.rows()
    }

    /// Code dimension `p`.
    pub fn code_dim(&self) -> usize {
        self.dict.cols()
    }

    /// Training measurements, each scaled so `‖Dᵀy‖_∞ = 1`.
    pub fn train_ys(&self) -> &[Vec<f64>] {
        &self.train_ys
    }

    /// Held-out measurements with the same normalization.
    pub fn test_ys(&self) -> &[Vec<f64>] {
        &self.test_ys
    }
}

/// Builds a random sparse-coding problem.
///
/// The dictionary has i.i.d. standard normal entries with columns rescaled to
/// unit ℓ₂ norm; the step size comes from power iteration on `DᵀD`.
/// Measurements are i.i.d. standard normal vectors scaled so that
/// `‖Dᵀy‖_∞ = 1`, which puts every sample at a comparable distance from the
/// shrinkage dead zone.  Fully deterministic for a given seed.
pub fn make_lista_problem(
    data_dim: usize,
    code_dim: usize,
    lasso_lambda: f64,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<ListaProblem> {
    if data_dim == 0 || code_dim == 0 {
        return Err(Error::InvalidArgument(
            "dictionary dimensions must be positive".into(),
        ));
    }
    if !lasso_lambda.is_finite() || lasso_lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lasso_lambda must be finite and non-negative, got {lasso_lambda}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dict = Matrix::from_fn(data_dim, code_dim, |_, _| rng.sample(StandardNormal));
    for j in 0..code_dim {
        let mut norm_sq = 0.0;
        for i in 0..data_dim {
            norm_sq += dict[(i, j)] * dict[(i, j)];
        }
        let norm = norm_sq.sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument(
                "dictionary produced a zero column; use another seed".into(),
            ));
        }
        for i in 0..data_dim {
            dict.data_mut()[i * code_dim + j] /= norm;
        }
    }

    let spectral_sq = gram_spectral_norm(&dict)?;
    let eta = 1.0 / spectral_sq;

    let sample = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut y: Vec<f64> = (0..data_dim).map(|_| rng.sample(StandardNormal)).collect();
            let corr = dict.matvec_t(&y);
            let scale = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if scale < 1e-9 {
                continue; // essentially impossible, but keeps the scaling sound
            }
            for yi in &mut y {
                *yi /= scale;
            }
            out.push(y);
        }
        out
    };
    let train_ys = sample(n_train, &mut rng);
    let test_ys = sample(n_test, &mut rng);

    Ok(ListaProblem {
        dict,
        lasso_lambda,
        eta,
        train_ys,
        test_ys,
    })
}

/// Largest eigenvalue of `DᵀD` (i.e. `‖D‖₂²`) by power iteration.
fn gram_spectral_norm(dict: &Matrix) -> Result<f64> {
    let p = dict.cols();
    let mut z = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0f64;
    for _ in 0..500 {
        let w = dict.matvec(&z);
        let q = dict.matvec_t(&w);
        let norm = norm2(&q);
        if norm < 1e-300 {
            return Err(Error::Singular("dictionary gram matrix is zero".into()));
        }
        let next = dot(&z, &q);
        for (zi, qi) in z.iter_mut().zip(&q) {
            *zi = qi / norm;
        }
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Lasso objective `½‖y − Dx‖² + λ‖x‖₁` for a single sample.
pub fn lasso_loss(problem: &ListaProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(problem, x, y)?;
    let dx = problem.dict.matvec(x);
    let mut quad = 0.0;
    for (yi, di) in y.iter().zip(&dx) {
        let r = yi - di;
        quad += r * r;
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    Ok(0.5 * quad + problem.lasso_lambda * l1)
}

/// Gradient of the lasso objective in `x`: `Dᵀ(Dx − y) + λ·sign(x)`,
/// with `sign(0) = 0` (the zero subgradient).
pub fn lasso_grad_x(problem: &ListaProblem, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dims(problem, x, y)?;
    let mut resid = problem.dict.matvec(x);
    for (ri, yi) in resid.iter_mut().zip(y) {
        *ri -= yi;
    }
    let mut g = problem.dict.matvec_t(&resid);
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi += problem.lasso_lambda * sign0(*xi);
    }
    Ok(g)
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_dims(problem: &ListaProblem, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != problem.code_dim() || y.len() != problem.data_dim() {
        return Err(Error::ShapeMismatch(format!(
            "expected code length {} and measurement length {}, got {} and {}",
            problem.code_dim(),
            problem.data_dim(),
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Runs `steps` ISTA iterations from `x = 0` and returns the final code.
pub fn ista_iterate(problem: &ListaProblem, y: &[f64], steps: usize) -> Result<Vec<f64>> {
    if y.len() != problem.data_dim() {
        return Err(Error::ShapeMismatch(format!(
            "expected measurement length {}, got {}",
            problem.data_dim(),
            y.len()
        )));
    }
    let t = problem.threshold();
    let mut x = vec![0.0; problem.code_dim()];
    for _ in 0..steps {
        let mut resid = problem.dict.matvec(&x);
        for (ri, yi) in resid.iter_mut().zip(y) {
            *ri -= yi;
        }
        let corr = problem.dict.matvec_t(&resid);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi = soft_threshold(*xi - problem.eta * ci, t);
        }
    }
    Ok(x)
}

/// Mean lasso objective of `steps`-iteration ISTA over the held-out set.
pub fn ista_mean_test_loss(problem: &ListaProblem, steps: usize) -> Result<f64> {
    let losses = batch::try_map_fold(
        problem.test_ys(),
        |_, y| {
            let x = ista_iterate(problem, y, steps)?;
            lasso_loss(problem, &x, y)
        },
        0.0f64,
        |acc, l| acc + l,
    )?;
    Ok(losses / problem.test_ys.len().max(1) as f64)
}

/// Which unrolled architecture a [`ListaNet`] uses.
#[derive(Clone, Debug, PartialEq)]
pub enum ListaVariant {
    /// One shrinkage map per layer: `x ← shrink(W¹x + W²y, t)`.
    Plain,
    /// Residual form driven through a velocity average:
    /// `F = shrink(W¹x + W²y, t) − x`, `v ← γv + (1−γ)F`, `x ← x + v`.
    Momentum {
        /// Velocity averaging weight `γ ∈ [0, 1)`.
        gamma: f64,
        /// Start with `v₀ = F(x₀)` (computed with the first layer's weights)
        /// instead of `v₀ = 0`.
        v0_residual: bool,
    },
    /// Two-stream additive coupling with two weight sets per layer:
    /// `v ← v + (shrink(W¹ᵃx + W²ᵃy, t) − x)`, then
    /// `x ← x + (shrink(W¹ᵇv + W²ᵇy, t) − v)` using the updated `v`.
    Coupled,
}

/// An unrolled shrinkage network over a fixed [`ListaProblem`], trainable via
/// the [`Model`] interface.  Per-layer matrices are the parameters; the
/// shrinkage threshold is frozen at `ηλ`.
#[derive(Clone, Debug)]
pub struct ListaNet {
    problem: ListaProblem,
    variant: ListaVariant,
    depth: usize,
    // One slot per layer for Plain/Momentum; two per layer (a then b) for
    // Coupled.  w1[s] is p×p, w2[s] is p×d.
    w1: Vec<Matrix>,
    w2: Vec<Matrix>,
    threshold: f64,
}

/// How many samples each parallel gradient chunk holds.  One gradient buffer
/// is allocated per chunk (not per sample) and chunks fold in ascending
/// order, so the reduction order is fixed regardless of thread count.
const GRAD_CHUNK: usize = 32;

impl ListaNet {
    /// Builds a depth-`depth` network initialized to exactly reproduce ISTA:
    /// `W¹ = I − η DᵀD`, `W² = η Dᵀ` in every slot.
    pub fn new(problem: ListaProblem, depth: usize, variant: ListaVariant) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if let ListaVariant::Momentum { gamma, .. } = variant {
            if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
                return Err(Error::InvalidArgument(format!(
                    "momentum gamma must lie in [0, 1), got {gamma}"
                )));
            }
        }
        let p = problem.code_dim();
        let gram = problem.dict.transpose().matmul(&problem.dict);
        let mut w1_init = Matrix::identity(p);
        w1_init.add_scaled(&gram, -problem.eta);
        let w2_init = problem.dict.transpose().scale(problem.eta);
        let slots = if variant == ListaVariant::Coupled {
            2 * depth
        } else {
            depth
        };
        let threshold = problem.threshold();
        Ok(ListaNet {
            problem,
            variant,
            depth,
            w1: vec![w1_init; slots],
            w2: vec![w2_init; slots],
            threshold,
        })
    }

    /// The problem this network is trained on.
    pub fn problem(&self) -> &ListaProblem {
        &self.problem
    }

    /// Architecture variant.
    pub fn variant(&self) -> &ListaVariant {
        &self.variant
    }

    /// Number of layers.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Runs the network on one measurement and returns the final code.
    pub fn forward_code(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.problem.data_dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected measurement length {}, got {}",
                self.problem.data_dim(),
                y.len()
            )));
        }
        let (xs, _, _) = self.forward_trace(y);
        Ok(xs.into_iter().next_back().expect("trace is non-empty"))
    }

    /// Pre-activation `W¹[slot]·x + W²[slot]·y`.
    fn preact(&self, slot: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut u = self.w1[slot].matvec(x);
        let uy = self.w2[slot].matvec(y);
        for (ui, vi) in u.iter_mut().zip(&uy) {
            *ui += vi;
        }
        u
    }

    /// Forward pass keeping the per-layer states needed for the backward
    /// pass: `xs` has `depth+1` entries; `us` holds one pre-activation per
    /// slot (so the backward pass can reuse the shrinkage masks instead of
    /// recomputing them); `vs` is only populated for the coupled variant
    /// (the momentum backward reconstructs what it needs from `xs` alone).
    #[allow(clippy::type_complexity)]
    fn forward_trace(&self, y: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let p = self.problem.code_dim();
        let t = self.threshold;
        let mut xs = Vec::with_capacity(self.depth + 1);
        let mut us = Vec::with_capacity(self.w1.len());
        match &self.variant {
            ListaVariant::Plain => {
                let mut x = vec![0.0; p];
                xs.push(x.clone());
                for k in 0..self.depth {
                    let u = self.preact(k, &x, y);
                    x = u.iter().map(|&ui| soft_threshold(ui, t)).collect();
                    xs.push(x.clone());
                    us.push(u);
                }
                (xs, Vec::new(), us)
            }
            ListaVariant::Momentum { gamma, v0_residual } => {
                let mut x = vec![0.0; p];
                let mut v = if *v0_residual {
                    // Layer 0 runs from the same x, so its pre-activation is
                    // recorded when the loop reaches k = 0.
                    let u = self.preact(0, &x, y);
                    u.iter()
                        .zip(&x)
                        .map(|(&ui, &xi)| soft_threshold(ui, t) - xi)
                        .collect()
                } else {
                    vec![0.0; p]
                };
                xs.push(x.clone());
                for k in 0..self.depth {
                    let u = self.preact(k, &x, y);
                    for i in 0..p {
                        let f = soft_threshold(u[i], t) - x[i];
                        v[i] = gamma * v[i] + (1.0 - gamma) * f;
                        x[i] += v[i];
                    }
                    xs.push(x.clone());
                    us.push(u);
                }
                (xs, Vec::new(), us)
            }
            ListaVariant::Coupled => {
                let mut x = vec![0.0; p];
                let mut v = vec![0.0; p];
                let mut vs = Vec::with_capacity(self.depth + 1);
                xs.push(x.clone());
                vs.push(v.clone());
                for k in 0..self.depth {
                    let ua = self.preact(2 * k, &x, y);
                    for i in 0..p {
                        v[i] += soft_threshold(ua[i], t) - x[i];
                    }
                    let ub = self.preact(2 * k + 1, &v, y);
                    for i in 0..p {
                        x[i] += soft_threshold(ub[i], t) - v[i];
                    }
                    xs.push(x.clone());
                    vs.push(v.clone());
                    us.push(ua);
                    us.push(ub);
                }
                (xs, vs, us)
            }
        }
    }

    /// Flat length of one (w1, w2) slot.
    fn slot_len(&self) -> usize {
        let p = self.problem.code_dim();
        let d = self.problem.data_dim();
        p * p + p * d
    }

    /// Accumulates `scale · out ⊗ inp` into the w1 (or w2) block of `slot`.
    fn accumulate_outer(&self, grad: &mut [f64], slot: usize, into_w2: bool, out: &[f64], inp: &[f64]) {
        let p = self.problem.code_dim();
        let d = self.problem.data_dim();
        let base = slot * self.slot_len() + if into_w2 { p * p } else { 0 };
        let cols = if into_w2 { d } else { p };
        for (i, &oi) in out.iter().enumerate() {
            if oi == 0.0 {
                continue;
            }
            let row = &mut grad[base + i * cols..base + (i + 1) * cols];
            for (gij, &xj) in row.iter_mut().zip(inp) {
                *gij += oi * xj;
            }
        }
    }

    /// Backward pass for one sample; adds parameter gradients into `grad`
    /// (flat layout, see [`Model::update`]) given the loss gradient `gx0`
    /// at the final code.  `us` are the per-slot pre-activations recorded by
    /// [`ListaNet::forward_trace`].
    fn backward_sample(
        &self,
        y: &[f64],
        xs: &[Vec<f64>],
        vs: &[Vec<f64>],
        us: &[Vec<f64>],
        gx0: Vec<f64>,
        grad: &mut [f64],
    ) {
        let t = self.threshold;
        match &self.variant {
            ListaVariant::Plain => {
                let mut g = gx0;
                for k in (0..self.depth).rev() {
                    let gm: Vec<f64> = g
                        .iter()
                        .zip(&us[k])
                        .map(|(&gi, &ui)| if ui.abs() > t { gi } else { 0.0 })
                        .collect();
                    self.accumulate_outer(grad, k, false, &gm, &xs[k]);
                    self.accumulate_outer(grad, k, true, &gm, y);
                    g = self.w1[k].matvec_t(&gm);
                }
            }
            ListaVariant::Momentum { gamma, v0_residual } => {
                let mut gx = gx0;
                let mut gv = vec![0.0; gx.len()];
                for k in (0..self.depth).rev() {
                    let u_sens: Vec<f64> = gx.iter().zip(&gv).map(|(&a, &b)| a + b).collect();
                    let w: Vec<f64> = u_sens.iter().map(|&ui| (1.0 - gamma) * ui).collect();
                    let wm: Vec<f64> = w
                        .iter()
                        .zip(&us[k])
                        .map(|(&wi, &ui)| if ui.abs() > t { wi } else { 0.0 })
                        .collect();
                    self.accumulate_outer(grad, k, false, &wm, &xs[k]);
                    self.accumulate_outer(grad, k, true, &wm, y);
                    let back = self.w1[k].matvec_t(&wm);
                    for i in 0..gx.len() {
                        gx[i] += back[i] - w[i];
                        gv[i] = gamma * u_sens[i];
                    }
                }
                if *v0_residual {
                    // Extra path: v₀ was produced by slot 0 at x₀ = 0 (the
                    // same state layer 0 later reads, so us[0] applies); only
                    // the recorded mask decides which entries pass.
                    let gm: Vec<f64> = gv
                        .iter()
                        .zip(&us[0])
                        .map(|(&gi, &ui)| if ui.abs() > t { gi } else { 0.0 })
                        .collect();
                    self.accumulate_outer(grad, 0, false, &gm, &xs[0]);
                    self.accumulate_outer(grad, 0, true, &gm, y);
                }
            }
            ListaVariant::Coupled => {
                let mut gx = gx0;
                let mut gv = vec![0.0; gx.len()];
                for k in (0..self.depth).rev() {
                    let v_mid = &vs[k + 1];
                    let x_prev = &xs[k];
                    let gxm: Vec<f64> = gx
                        .iter()
                        .zip(&us[2 * k + 1])
                        .map(|(&gi, &ui)| if ui.abs() > t { gi } else { 0.0 })
                        .collect();
                    self.accumulate_outer(grad, 2 * k + 1, false, &gxm, v_mid);
                    self.accumulate_outer(grad, 2 * k + 1, true, &gxm, y);
                    let back_b = self.w1[2 * k + 1].matvec_t(&gxm);
                    let gv_mid: Vec<f64> = (0..gx.len())
                        .map(|i| gv[i] + back_b[i] - gx[i])
                        .collect();
                    let gvm: Vec<f64> = gv_mid
                        .iter()
                        .zip(&us[2 * k])
                        .map(|(&gi, &ui)| if ui.abs() > t { gi } else { 0.0 })
                        .collect();
                    self.accumulate_outer(grad, 2 * k, false, &gvm, x_prev);
                    self.accumulate_outer(grad, 2 * k, true, &gvm, y);
                    let back_a = self.w1[2 * k].matvec_t(&gvm);
                    for i in 0..gx.len() {
                        gx[i] += back_a[i] - gv_mid[i];
                    }
                    gv = gv_mid;
                }
            }
        }
    }

    /// Loss of one training sample, with its parameter gradient accumulated
    /// into `grad` (unscaled).
    fn sample_loss_grad_into(&self, y: &[f64], grad: &mut [f64]) -> Result<f64> {
        let (xs, vs, us) = self.forward_trace(y);
        let x_final = xs.last().expect("trace is non-empty");
        let loss = lasso_loss(&self.problem, x_final, y)?;
        let gx0 = lasso_grad_x(&self.problem, x_final, y)?;
        self.backward_sample(y, &xs, &vs, &us, gx0, grad);
        Ok(loss)
    }
}

impl Model for ListaNet {
    fn n_train(&self) -> usize {
        self.problem.train_ys.len()
    }

    fn param_len(&self) -> usize {
        self.w1.len() * self.slot_len()
    }

    fn loss_and_grad(&mut self, batch_idx: &[usize]) -> Result<(f64, Vec<f64>)> {
        if batch_idx.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        // Each parallel work item is one chunk of samples; within a chunk the
        // samples accumulate (ascending index) into a single buffer.
        let chunks: Vec<&[usize]> = batch_idx.chunks(GRAD_CHUNK).collect();
        let (loss_sum, mut grad) = batch::try_map_fold(
            &chunks,
            |_, chunk| {
                let mut grad = vec![0.0; self.param_len()];
                let mut loss = 0.0;
                for &idx in *chunk {
                    let y = self.problem.train_ys.get(idx).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "batch index {idx} out of range for {} training samples",
                            self.problem.train_ys.len()
                        ))
                    })?;
                    loss += self.sample_loss_grad_into(y, &mut grad)?;
                }
                Ok((loss, grad))
            },
            (0.0f64, vec![0.0; self.param_len()]),
            |(mut ls, mut acc), (l, g)| {
                ls += l;
                for (ai, gi) in acc.iter_mut().zip(&g) {
                    *ai += gi;
                }
                (ls, acc)
            },
        )?;
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
        let pp = self.problem.code_dim() * self.problem.code_dim();
        for s in 0..self.w1.len() {
            let base = s * slot_len;
            let w1 = self.w1[s].data_mut();
            for (i, wi) in w1.iter_mut().enumerate() {
                *wi = *wi * decay[base + i] - step[base + i];
            }
            let w2 = self.w2[s].data_mut();
            for (i, wi) in w2.iter_mut().enumerate() {
                *wi = *wi * decay[base + pp + i] - step[base + pp + i];
            }
        }
        Ok(())
    }

    fn decay_mask(&self) -> Vec<bool> {
        // The sparse-coding benchmark trains without weight decay.
        vec![false; self.param_len()]
    }

    fn eval_metric(&self) -> Result<f64> {
        let n = self.problem.test_ys.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no held-out samples".into()));
        }
        let total = batch::try_map_fold(
            self.problem.test_ys(),
            |_, y| {
                let x = self.forward_code(y)?;
                lasso_loss(&self.problem, &x, y)
            },
            0.0f64,
            |acc, l| acc + l,
        )?;
        Ok(total / n as f64)
    }
}

//! Gradients for momentum networks.
//!
//! The per-block backward applies the transposed Jacobian
//!   [[I + (1−γ)∂ₓf, γI], [(1−γ)∂ₓf, γI]]
//! to the cotangent (∇ₓL, ∇ᵥL) and accumulates (1−γ)·∂_θfᵀ(∇ₓL + ∇ᵥL) into
//! the parameter gradient. The memory-free full backward never stores a trace:
//! it reconstructs each layer input by reversing the forward step exactly.

use crate::error::{Error, Result};
use crate::momentum_net::{
    momentum_inverse_step, BlockParams, GaugeGuard, MomentumState, Network, Trace,
    V0Mode,
};
use crate::numerics::Matrix;

// ── Cotangents and parameter gradients ───────────────────────────────────────

/// Loss gradient with respect to a state z = (x, v).
#[derive(Clone, Debug, PartialEq)]
pub struct Cotangent {
    pub grad_x: Vec<f64>,
    pub grad_v: Vec<f64>,
}

impl Cotangent {
    pub fn new(grad_x: Vec<f64>, grad_v: Vec<f64>) -> Result<Cotangent> {
        if grad_x.len() != grad_v.len() {
            return Err(Error::ShapeMismatch(format!(
                "cotangent: x part {} vs v part {}",
                grad_x.len(),
                grad_v.len()
            )));
        }
        Ok(Cotangent { grad_x, grad_v })
    }

    /// Cotangent of a loss touching only the position output.
    pub fn from_output_grad(grad_x: Vec<f64>) -> Cotangent {
        let grad_v = vec![0.0; grad_x.len()];
        Cotangent { grad_x, grad_v }
    }
}

/// Gradient triple mirroring one block's parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrad {
    pub dw1: Matrix,
    pub dw2: Matrix,
    pub db: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros_like(params: &BlockParams) -> ParamGrad {
        ParamGrad {
            dw1: Matrix::zeros(params.width(), params.dim()),
            dw2: Matrix::zeros(params.width(), params.dim()),
            db: vec![0.0; params.width()],
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrad) {
        self.dw1.add_scaled(&other.dw1, 1.0);
        self.dw2.add_scaled(&other.dw2, 1.0);
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.dw1 = self.dw1.scale(s);
        self.dw2 = self.dw2.scale(s);
        for a in self.db.iter_mut() {
            *a *= s;
        }
    }

    /// Squared Euclidean norm over all entries.
    pub fn norm_sq(&self) -> f64 {
        let m: f64 = self.dw1.data().iter().map(|x| x * x).sum();
        let n: f64 = self.dw2.data().iter().map(|x| x * x).sum();
        let b: f64 = self.db.iter().map(|x| x * x).sum();
        m + n + b
    }
}

// ── Per-block backward ───────────────────────────────────────────────────────

/// Pulls a cotangent back through one momentum block evaluated at layer input
/// `x_prev`; returns the input cotangent and this block's parameter gradient.
pub fn block_backward(
    cot: &Cotangent,
    x_prev: &[f64],
    params: &BlockParams,
    gamma: f64,
) -> Result<(Cotangent, ParamGrad)> {
    let d = params.dim();
    let p = params.width();
    if x_prev.len() != d || cot.grad_x.len() != d || cot.grad_v.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "block backward: dim {d}, x_prev {}, grad_x {}, grad_v {}",
            x_prev.len(),
            cot.grad_x.len(),
            cot.grad_v.len()
        )));
    }
    // u = ∇ₓL + ∇ᵥL; w = (1−γ)u is the vector every f-Jacobian acts on.
    let u: Vec<f64> = cot.grad_x.iter().zip(&cot.grad_v).map(|(a, b)| a + b).collect();
    let w: Vec<f64> = u.iter().map(|t| (1.0 - gamma) * t).collect();

    // Forward pieces at x_prev: a = tanh(W₁x + b), f = W₂ᵀa.
    let mut a = params.w1.matvec(x_prev);
    for (ai, bi) in a.iter_mut().zip(&params.b) {
        *ai = (*ai + bi).tanh();
    }
    // h = (1 − a²) ⊙ (W₂ w): the hidden-layer cotangent of fᵀw.
    let w2w = params.w2.matvec(&w);
    let h: Vec<f64> = a.iter().zip(&w2w).map(|(ai, t)| (1.0 - ai * ai) * t).collect();

    let grad = ParamGrad {
        dw1: Matrix::from_fn(p, d, |i, j| h[i] * x_prev[j]),
        dw2: Matrix::from_fn(p, d, |i, j| a[i] * w[j]),
        db: h.clone(),
    };
    let w1th = params.w1.matvec_t(&h);
    let new_gx: Vec<f64> = cot.grad_x.iter().zip(&w1th).map(|(g, t)| g + t).collect();
    let new_gv: Vec<f64> = u.iter().map(|t| gamma * t).collect();
    Ok((Cotangent { grad_x: new_gx, grad_v: new_gv }, grad))
}

// ── Full-network backwards ───────────────────────────────────────────────────

/// Accumulates the v₀ = f(x₀, θ₀) path: ∂L/∂v₀ flows into block 0's
/// parameters and into ∇ₓ₀L.
fn accumulate_v0_path(
    x0: &[f64],
    grad_v0: &[f64],
    params: &BlockParams,
    grad: &mut ParamGrad,
    grad_x0: &mut [f64],
) {
    let p = params.width();
    let d = params.dim();
    let mut a = params.w1.matvec(x0);
    for (ai, bi) in a.iter_mut().zip(&params.b) {
        *ai = (*ai + bi).tanh();
    }
    let w2g = params.w2.matvec(grad_v0);
    let h: Vec<f64> = a.iter().zip(&w2g).map(|(ai, t)| (1.0 - ai * ai) * t).collect();
    grad.dw1.add_scaled(&Matrix::from_fn(p, d, |i, j| h[i] * x0[j]), 1.0);
    grad.dw2.add_scaled(&Matrix::from_fn(p, d, |i, j| a[i] * grad_v0[j]), 1.0);
    for (bi, hi) in grad.db.iter_mut().zip(&h) {
        *bi += hi;
    }
    let w1th = params.w1.matvec_t(&h);
    for (g, t) in grad_x0.iter_mut().zip(&w1th) {
        *g += t;
    }
}

fn grad_slot(net: &Network, layer: usize) -> usize {
    if net.is_tied() {
        0
    } else {
        layer
    }
}

/// Backward pass that reconstructs activations by inverting the forward steps;
/// consumes the final state and never stores a per-layer trace.
///
/// Returns one gradient per distinct parameter set (a tied network gets a
/// single accumulated entry) and the cotangent at the input. When
/// `v0_mode = ResidualOfInput`, `grad_x` includes the chain through v₀ while
/// `grad_v` reports ∂L/∂v₀ as if v₀ were free.
pub fn backward_memory_free(
    net: &Network,
    final_state: MomentumState,
    cot_out: &Cotangent,
) -> Result<(Vec<ParamGrad>, Cotangent)> {
    let mut s = final_state;
    let _live = GaugeGuard::new(2); // running x and v being unwound
    let gamma = net.gamma().as_f64();
    let mut grads: Vec<ParamGrad> =
        net.blocks().iter().map(ParamGrad::zeros_like).collect();
    let mut cot = cot_out.clone();
    for layer in (0..net.depth()).rev() {
        let params = net.block(layer);
        momentum_inverse_step(&mut s, params)?;
        let _decoded_guard = GaugeGuard::new(1);
        let x_prev = s.x.decode();
        let (new_cot, g) = block_backward(&cot, &x_prev, params, gamma)?;
        cot = new_cot;
        grads[grad_slot(net, layer)].add_assign(&g);
    }
    if net.v0_mode == V0Mode::ResidualOfInput && net.depth() > 0 {
        let _decoded_guard = GaugeGuard::new(1);
        let x0 = s.x.decode();
        let grad_v0 = cot.grad_v.clone();
        accumulate_v0_path(&x0, &grad_v0, net.block(0), &mut grads[0], &mut cot.grad_x);
    }
    if !s.buffers_empty() {
        return Err(Error::CorruptBuffer(
            "buffers non-empty after full inversion; final state does not match this network"
                .into(),
        ));
    }
    Ok((grads, cot))
}

/// Reference backward over a recorded activation trace; same contract as
/// [`backward_memory_free`], used as its oracle.
pub fn backward_stored(
    net: &Network,
    trace: &Trace,
    cot_out: &Cotangent,
) -> Result<(Vec<ParamGrad>, Cotangent)> {
    if trace.xs.len() != net.depth() {
        return Err(Error::ShapeMismatch(format!(
            "trace holds {} layers, network has depth {}",
            trace.xs.len(),
            net.depth()
        )));
    }
    let gamma = net.gamma().as_f64();
    let mut grads: Vec<ParamGrad> =
        net.blocks().iter().map(ParamGrad::zeros_like).collect();
    let mut cot = cot_out.clone();
    for layer in (0..net.depth()).rev() {
        let params = net.block(layer);
        let (new_cot, g) = block_backward(&cot, &trace.xs[layer], params, gamma)?;
        cot = new_cot;
        grads[grad_slot(net, layer)].add_assign(&g);
    }
    if net.v0_mode == V0Mode::ResidualOfInput && net.depth() > 0 {
        let grad_v0 = cot.grad_v.clone();
        accumulate_v0_path(&trace.xs[0], &grad_v0, net.block(0), &mut grads[0], &mut cot.grad_x);
    }
    Ok((grads, cot))
}

// ── Finite-difference oracle ─────────────────────────────────────────────────

/// Central-difference gradient of a scalar loss over every parameter entry of
/// every distinct block.
pub fn finite_diff_loss_grad(
    net: &Network,
    loss: &mut dyn FnMut(&Network) -> Result<f64>,
    h: f64,
) -> Result<Vec<ParamGrad>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite differences: h = {h} must be > 0")));
    }
    let mut work = net.clone();
    let mut grads: Vec<ParamGrad> =
        net.blocks().iter().map(ParamGrad::zeros_like).collect();
    for bi in 0..net.blocks().len() {
        let p = net.blocks()[bi].width();
        let d = net.blocks()[bi].dim();
        for which in 0..2 {
            for i in 0..p {
                for j in 0..d {
                    let probe = |w: &mut Network, delta: f64| {
                        let blk = &mut w.blocks_mut()[bi];
                        let m = if which == 0 { &mut blk.w1 } else { &mut blk.w2 };
                        m[(i, j)] += delta;
                    };
                    probe(&mut work, h);
                    let up = loss(&work)?;
                    probe(&mut work, -2.0 * h);
                    let down = loss(&work)?;
                    probe(&mut work, h);
                    let g = (up - down) / (2.0 * h);
                    let m = if which == 0 { &mut grads[bi].dw1 } else { &mut grads[bi].dw2 };
                    m[(i, j)] = g;
                }
            }
        }
        for i in 0..p {
            work.blocks_mut()[bi].b[i] += h;
            let up = loss(&work)?;
            work.blocks_mut()[bi].b[i] -= 2.0 * h;
            let down = loss(&work)?;
            work.blocks_mut()[bi].b[i] += h;
            grads[bi].db[i] = (up - down) / (2.0 * h);
        }
    }
    Ok(grads)
}

/// Central-difference gradient of a scalar function of a point.
pub fn finite_diff_input_grad(
    x: &[f64],
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    h: f64,
) -> Result<Vec<f64>> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let up = f(&xp)?;
        xp[j] = x[j] - h;
        let down = f(&xp)?;
        xp[j] = x[j];
        g[j] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

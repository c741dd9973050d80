//! Residual network blocks and exactly invertible momentum dynamics.
//!
//! A momentum block updates a state (x, v) by
//!   v ← γ·v + (1−γ)·f(x, θ),   x ← x + v,
//! carried out on a fixed-point grid with the γ-multiplication made reversible
//! by banking destroyed bits ([`crate::revarith`]). The whole forward pass can
//! then be undone step by step, so no per-layer activations need storing.

use std::cell::Cell;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::revarith::{
    self, buffer_bits, decode_mantissa, read_pair, write_pair, InfoBuffer, Ratio,
};

// ── Mixing coefficient ───────────────────────────────────────────────────────

/// Block mixing coefficient γ: zero (plain residual mode, buffers unused) or a
/// positive rational (invertible mode).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gamma {
    Zero,
    Ratio(Ratio),
}

impl Gamma {
    pub fn ratio(n: u64, d: u64) -> Result<Gamma> {
        if n == 0 {
            if d == 0 {
                return Err(Error::InvalidArgument("gamma 0/0 is undefined".into()));
            }
            return Ok(Gamma::Zero);
        }
        Ok(Gamma::Ratio(Ratio::new(n, d)?))
    }

    /// Parses "0" or "n/d".
    pub fn parse(s: &str) -> Result<Gamma> {
        let s = s.trim();
        if s == "0" {
            return Ok(Gamma::Zero);
        }
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidArgument(format!("gamma '{s}': expected 0 or n/d")))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("gamma '{s}': bad numerator")))?;
        let d: u64 = d
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("gamma '{s}': bad denominator")))?;
        Gamma::ratio(n, d)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Gamma::Zero)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Gamma::Zero => 0.0,
            Gamma::Ratio(r) => r.as_f64(),
        }
    }

    /// (numerator, denominator), with zero encoded as (0, 1).
    pub fn parts(&self) -> (u64, u64) {
        match self {
            Gamma::Zero => (0, 1),
            Gamma::Ratio(r) => (r.numer(), r.denom()),
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Zero => write!(f, "0"),
            Gamma::Ratio(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

// ── Fixed-point vectors and the momentum state ───────────────────────────────

/// A vector on the 2^(−frac_bits) grid, one big-integer mantissa per entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointVector {
    pub mantissas: Vec<BigInt>,
    pub frac_bits: u32,
}

impl FixedPointVector {
    pub fn zeros(d: usize, frac_bits: u32) -> FixedPointVector {
        FixedPointVector { mantissas: vec![BigInt::zero(); d], frac_bits }
    }

    pub fn encode(xs: &[f64], frac_bits: u32) -> Result<FixedPointVector> {
        let mantissas = xs
            .iter()
            .map(|&x| revarith::encode(x, frac_bits).map(|fp| fp.mantissa))
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedPointVector { mantissas, frac_bits })
    }

    pub fn decode(&self) -> Vec<f64> {
        self.mantissas.iter().map(|m| decode_mantissa(m, self.frac_bits)).collect()
    }

    pub fn len(&self) -> usize {
        self.mantissas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mantissas.is_empty()
    }

    fn add_assign(&mut self, other: &FixedPointVector) {
        debug_assert_eq!(self.len(), other.len());
        debug_assert_eq!(self.frac_bits, other.frac_bits);
        for (a, b) in self.mantissas.iter_mut().zip(&other.mantissas) {
            *a += b;
        }
    }

    fn sub_assign(&mut self, other: &FixedPointVector) {
        debug_assert_eq!(self.len(), other.len());
        debug_assert_eq!(self.frac_bits, other.frac_bits);
        for (a, b) in self.mantissas.iter_mut().zip(&other.mantissas) {
            *a -= b;
        }
    }
}

/// Running state of an invertible forward pass: position x, velocity v, and
/// one information buffer per velocity coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumState {
    pub x: FixedPointVector,
    pub v: FixedPointVector,
    pub buffers: Vec<InfoBuffer>,
}

impl MomentumState {
    pub fn new(x0: &[f64], v0: &[f64], frac_bits: u32) -> Result<MomentumState> {
        if x0.len() != v0.len() {
            return Err(Error::ShapeMismatch(format!(
                "state: x has {} coordinates, v has {}",
                x0.len(),
                v0.len()
            )));
        }
        Ok(MomentumState {
            x: FixedPointVector::encode(x0, frac_bits)?,
            v: FixedPointVector::encode(v0, frac_bits)?,
            buffers: vec![InfoBuffer::new(); x0.len()],
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn frac_bits(&self) -> u32 {
        self.x.frac_bits
    }

    /// Banked bits per coordinate.
    pub fn buffer_bits(&self) -> Vec<u64> {
        self.buffers.iter().map(buffer_bits).collect()
    }

    pub fn buffers_empty(&self) -> bool {
        self.buffers.iter().all(|b| b.is_empty())
    }

    fn check_shapes(&self) -> Result<()> {
        if self.v.len() != self.x.len() || self.buffers.len() != self.x.len() {
            return Err(Error::ShapeMismatch(format!(
                "state: x {}, v {}, buffers {}",
                self.x.len(),
                self.v.len(),
                self.buffers.len()
            )));
        }
        if self.v.frac_bits != self.x.frac_bits {
            return Err(Error::ShapeMismatch("state: mixed frac_bits".into()));
        }
        Ok(())
    }
}

// ── Block parameters and residual functions ──────────────────────────────────

/// Parameters of one residual block f(x) = W₂ᵀ·tanh(W₁·x + b), plus the
/// mixing coefficient γ shared across a network.
#[derive(Clone, Debug)]
pub struct BlockParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub b: Vec<f64>,
    pub gamma: Gamma,
}

impl BlockParams {
    pub fn new(w1: Matrix, w2: Matrix, b: Vec<f64>, gamma: Gamma) -> Result<BlockParams> {
        if w1.rows() != w2.rows() || w1.cols() != w2.cols() || b.len() != w1.rows() {
            return Err(Error::ShapeMismatch(format!(
                "block: W1 {}×{}, W2 {}×{}, b {}",
                w1.rows(),
                w1.cols(),
                w2.rows(),
                w2.cols(),
                b.len()
            )));
        }
        Ok(BlockParams { w1, w2, b, gamma })
    }

    /// Hidden width p.
    pub fn width(&self) -> usize {
        self.w1.rows()
    }

    /// State dimension d.
    pub fn dim(&self) -> usize {
        self.w1.cols()
    }
}

/// Two-layer residual function W₂ᵀ·tanh(W₁x + b).
pub fn residual_mlp(x: &[f64], params: &BlockParams) -> Result<Vec<f64>> {
    if x.len() != params.dim() {
        return Err(Error::ShapeMismatch(format!(
            "residual: input {} vs block dim {}",
            x.len(),
            params.dim()
        )));
    }
    let mut h = params.w1.matvec(x);
    for (hi, bi) in h.iter_mut().zip(&params.b) {
        *hi = (*hi + bi).tanh();
    }
    Ok(params.w2.matvec_t(&h))
}

/// Plain residual step x + f(x, θ).
pub fn resnet_step(x: &[f64], params: &BlockParams) -> Result<Vec<f64>> {
    let f = residual_mlp(x, params)?;
    Ok(x.iter().zip(&f).map(|(a, b)| a + b).collect())
}

/// Soft-thresholding st(u, t) = sign(u)·max(|u| − t, 0).
pub fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

/// Per-layer parameters of a learned sparse-coding step
/// g(x, y) = st(W¹x + W²y, t).
#[derive(Clone, Debug)]
pub struct ListaParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub threshold: f64,
}

impl ListaParams {
    pub fn new(w1: Matrix, w2: Matrix, threshold: f64) -> Result<ListaParams> {
        if w1.rows() != w1.cols() || w2.rows() != w1.rows() {
            return Err(Error::ShapeMismatch(format!(
                "sparse-coding layer: W1 {}×{}, W2 {}×{}",
                w1.rows(),
                w1.cols(),
                w2.rows(),
                w2.cols()
            )));
        }
        Ok(ListaParams { w1, w2, threshold })
    }
}

/// Residual form of the sparse-coding step: st(W¹x + W²y, t) − x.
pub fn lista_residual(x: &[f64], y: &[f64], layer: &ListaParams) -> Result<Vec<f64>> {
    if x.len() != layer.w1.cols() || y.len() != layer.w2.cols() {
        return Err(Error::ShapeMismatch(format!(
            "sparse-coding residual: x {} vs {}, y {} vs {}",
            x.len(),
            layer.w1.cols(),
            y.len(),
            layer.w2.cols()
        )));
    }
    let mut u = layer.w1.matvec(x);
    let wy = layer.w2.matvec(y);
    for ((ui, wyi), xi) in u.iter_mut().zip(&wy).zip(x) {
        *ui = soft_threshold(*ui + wyi, layer.threshold) - xi;
    }
    Ok(u)
}

// ── Momentum step and its exact inverse ──────────────────────────────────────

fn quantized_residual(
    x: &FixedPointVector,
    scale: f64,
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<FixedPointVector> {
    let fx = f(&x.decode())?;
    if fx.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "residual returned {} coordinates for a {}-dimensional state",
            fx.len(),
            x.len()
        )));
    }
    let scaled: Vec<f64> = fx.iter().map(|&t| scale * t).collect();
    FixedPointVector::encode(&scaled, x.frac_bits)
}

/// One invertible momentum update with an arbitrary residual function:
/// v ← reversible γ·v, then v ← v + quantize((1−γ)·f(decode x)), then x ← x + v.
///
/// With γ = 0 the buffers are untouched and the update degenerates to the
/// plain residual step on the grid.
pub fn momentum_step_with(
    s: &mut MomentumState,
    gamma: Gamma,
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    s.check_shapes()?;
    match gamma {
        Gamma::Ratio(r) => {
            for (m, buf) in s.v.mantissas.iter_mut().zip(s.buffers.iter_mut()) {
                revarith::reversible_mul(buf, m, r);
            }
        }
        Gamma::Zero => {
            // γ·v = 0 erases the velocity outright — exactly why these
            // dynamics have no inverse; the buffers stay untouched.
            for m in s.v.mantissas.iter_mut() {
                m.set_zero();
            }
        }
    }
    let q = quantized_residual(&s.x, 1.0 - gamma.as_f64(), f)?;
    s.v.add_assign(&q);
    s.x.add_assign(&s.v);
    Ok(())
}

/// Exact inverse of [`momentum_step_with`]:
/// x ← x − v, then v ← v − quantize((1−γ)·f(decode x)), then reversible v/γ.
pub fn momentum_inverse_step_with(
    s: &mut MomentumState,
    gamma: Gamma,
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    s.check_shapes()?;
    let r = match gamma {
        Gamma::Zero => {
            return Err(Error::InvalidArgument(
                "inverse step: gamma = 0 has no 1/gamma factor; dynamics are not invertible".into(),
            ))
        }
        Gamma::Ratio(r) => r,
    };
    s.x.sub_assign(&s.v);
    let q = quantized_residual(&s.x, 1.0 - gamma.as_f64(), f)?;
    s.v.sub_assign(&q);
    for (m, buf) in s.v.mantissas.iter_mut().zip(s.buffers.iter_mut()) {
        revarith::reversible_mul_inverse(buf, m, r);
    }
    Ok(())
}

/// Momentum update with the two-layer residual of `params`.
pub fn momentum_step(s: &mut MomentumState, params: &BlockParams) -> Result<()> {
    momentum_step_with(s, params.gamma, &mut |x| residual_mlp(x, params))
}

/// Inverse momentum update with the two-layer residual of `params`.
pub fn momentum_inverse_step(s: &mut MomentumState, params: &BlockParams) -> Result<()> {
    momentum_inverse_step_with(s, params.gamma, &mut |x| residual_mlp(x, params))
}

/// Float-arithmetic momentum update v += (1−γ)(f(x) − v); x += v; not
/// invertible, but bit-identical to a damped Verlet integrator step with
/// h = 1, ε = 1/(1−γ).
pub fn momentum_step_float(
    x: &mut [f64],
    v: &mut [f64],
    gamma: f64,
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    let fx = f(x)?;
    for (vi, fi) in v.iter_mut().zip(&fx) {
        *vi += (1.0 - gamma) * (fi - *vi);
    }
    for (xi, vi) in x.iter_mut().zip(v.iter()) {
        *xi += *vi;
    }
    Ok(())
}

// ── Reversible two-stream coupling ───────────────────────────────────────────

/// Coupled reversible step v₁ = v + φ(x); x₁ = x + ψ(v₁); returns (v₁, x₁).
pub fn revnet_step(
    x: &[f64],
    v: &[f64],
    phi: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    psi: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("coupled step: x {} vs v {}", x.len(), v.len())));
    }
    let fx = phi(x)?;
    let v1: Vec<f64> = v.iter().zip(&fx).map(|(a, b)| a + b).collect();
    let gv = psi(&v1)?;
    let x1: Vec<f64> = x.iter().zip(&gv).map(|(a, b)| a + b).collect();
    Ok((v1, x1))
}

/// Algebraic inverse of [`revnet_step`]: x = x₁ − ψ(v₁); v = v₁ − φ(x).
pub fn revnet_inverse_step(
    v1: &[f64],
    x1: &[f64],
    phi: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    psi: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let gv = psi(v1)?;
    let x: Vec<f64> = x1.iter().zip(&gv).map(|(a, b)| a - b).collect();
    let fx = phi(&x)?;
    let v: Vec<f64> = v1.iter().zip(&fx).map(|(a, b)| a - b).collect();
    Ok((x, v))
}

// ── Full networks ────────────────────────────────────────────────────────────

/// How the initial velocity is derived from the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum V0Mode {
    Zero,
    ResidualOfInput,
}

/// A depth-k momentum network; `blocks` holds one entry per layer, or a single
/// entry shared by all layers in tied-weights mode.
#[derive(Clone, Debug)]
pub struct Network {
    blocks: Vec<BlockParams>,
    tied: bool,
    depth: usize,
    pub v0_mode: V0Mode,
    pub frac_bits: u32,
}

impl Network {
    pub fn new(blocks: Vec<BlockParams>, v0_mode: V0Mode, frac_bits: u32) -> Result<Network> {
        let depth = blocks.len();
        Network::validate(&blocks)?;
        Ok(Network { blocks, tied: false, depth, v0_mode, frac_bits })
    }

    /// One parameter set shared across `depth` layers.
    pub fn new_tied(
        block: BlockParams,
        depth: usize,
        v0_mode: V0Mode,
        frac_bits: u32,
    ) -> Result<Network> {
        Ok(Network { blocks: vec![block], tied: true, depth, v0_mode, frac_bits })
    }

    fn validate(blocks: &[BlockParams]) -> Result<()> {
        if let Some(first) = blocks.first() {
            if !blocks.iter().all(|b| b.gamma == first.gamma) {
                return Err(Error::InvalidArgument("network: blocks disagree on gamma".into()));
            }
            if !blocks.iter().all(|b| b.dim() == first.dim()) {
                return Err(Error::ShapeMismatch("network: blocks disagree on dimension".into()));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_tied(&self) -> bool {
        self.tied
    }

    pub fn block(&self, layer: usize) -> &BlockParams {
        if self.tied {
            &self.blocks[0]
        } else {
            &self.blocks[layer]
        }
    }

    pub fn block_mut(&mut self, layer: usize) -> &mut BlockParams {
        if self.tied {
            &mut self.blocks[0]
        } else {
            &mut self.blocks[layer]
        }
    }

    /// Distinct parameter sets (1 if tied).
    pub fn blocks(&self) -> &[BlockParams] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [BlockParams] {
        &mut self.blocks
    }

    pub fn gamma(&self) -> Gamma {
        self.blocks.first().map_or(Gamma::Zero, |b| b.gamma)
    }

    pub fn dim(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.dim())
    }

    fn initial_state(&self, x0: &[f64]) -> Result<MomentumState> {
        let x = FixedPointVector::encode(x0, self.frac_bits)?;
        let v = match self.v0_mode {
            V0Mode::Zero => FixedPointVector::zeros(x0.len(), self.frac_bits),
            V0Mode::ResidualOfInput => {
                if self.depth == 0 {
                    FixedPointVector::zeros(x0.len(), self.frac_bits)
                } else {
                    // v₀ = f(x₀, θ₀), evaluated on the grid point x₀ lands on.
                    let f = residual_mlp(&x.decode(), self.block(0))?;
                    FixedPointVector::encode(&f, self.frac_bits)?
                }
            }
        };
        let buffers = vec![InfoBuffer::new(); x0.len()];
        Ok(MomentumState { x, v, buffers })
    }

    /// Invertible forward pass; stores nothing per layer. Returns the decoded
    /// output and the final state (whose buffers allow exact inversion).
    pub fn forward(&self, x0: &[f64]) -> Result<(Vec<f64>, MomentumState)> {
        let mut s = self.initial_state(x0)?;
        let _live = GaugeGuard::new(2); // running x and v
        for layer in 0..self.depth {
            momentum_step(&mut s, self.block(layer))?;
        }
        Ok((s.x.decode(), s))
    }

    /// Reference forward that records every layer-input activation (decoded).
    pub fn forward_recording(&self, x0: &[f64]) -> Result<(Vec<f64>, MomentumState, Trace)> {
        let mut s = self.initial_state(x0)?;
        let mut xs = Vec::with_capacity(self.depth);
        let _live = GaugeGuard::new(2);
        for layer in 0..self.depth {
            xs.push(s.x.decode());
            momentum_step(&mut s, self.block(layer))?;
        }
        let guard = GaugeGuard::new(xs.len() as u64);
        Ok((s.x.decode(), s, Trace { xs, _guard: guard }))
    }

    /// Float-arithmetic forward (not invertible); with γ = 0 and v₀ = 0 this
    /// is exactly the plain residual network composition.
    pub fn forward_float(&self, x0: &[f64]) -> Result<Vec<f64>> {
        let mut x = x0.to_vec();
        let mut v = match self.v0_mode {
            V0Mode::Zero => vec![0.0; x0.len()],
            V0Mode::ResidualOfInput => {
                if self.depth == 0 {
                    vec![0.0; x0.len()]
                } else {
                    residual_mlp(&x, self.block(0))?
                }
            }
        };
        let gamma = self.gamma().as_f64();
        for layer in 0..self.depth {
            let params = self.block(layer);
            momentum_step_float(&mut x, &mut v, gamma, &mut |t| residual_mlp(t, params))?;
        }
        Ok(x)
    }

    /// Undoes `steps` layers in place, ending before layer `first_layer`.
    pub fn invert(&self, s: &mut MomentumState, first_layer: usize, steps: usize) -> Result<()> {
        for layer in (first_layer..first_layer + steps).rev() {
            momentum_inverse_step(s, self.block(layer))?;
        }
        Ok(())
    }
}

/// Recorded layer-input activations from [`Network::forward_recording`].
pub struct Trace {
    pub xs: Vec<Vec<f64>>,
    _guard: GaugeGuard,
}

// ── Activation gauge ─────────────────────────────────────────────────────────

thread_local! {
    static GAUGE_LIVE: Cell<u64> = const { Cell::new(0) };
    static GAUGE_PEAK: Cell<u64> = const { Cell::new(0) };
}

/// Counts network-state-valued vectors (activations) held live, to make the
/// constant-memory claim of the reconstructing backward assertable. Gradient
/// accumulators are not counted; they are identical across implementations.
pub struct GaugeGuard {
    n: u64,
}

impl GaugeGuard {
    pub fn new(n: u64) -> GaugeGuard {
        GAUGE_LIVE.with(|l| {
            let now = l.get() + n;
            l.set(now);
            GAUGE_PEAK.with(|p| p.set(p.get().max(now)));
        });
        GaugeGuard { n }
    }
}

impl Drop for GaugeGuard {
    fn drop(&mut self) {
        GAUGE_LIVE.with(|l| l.set(l.get() - self.n));
    }
}

/// Resets the peak (and returns the current live count, normally 0).
pub fn gauge_reset() -> u64 {
    GAUGE_PEAK.with(|p| p.set(0));
    GAUGE_LIVE.with(|l| l.get())
}

/// Highest number of simultaneously live tracked activation vectors since the
/// last reset.
pub fn gauge_peak() -> u64 {
    GAUGE_PEAK.with(|p| p.get())
}

// ── Checkpoint serialization ─────────────────────────────────────────────────

const NET_MAGIC: &[u8; 4] = b"MRN1";
const STATE_MAGIC: &[u8; 4] = b"MRS1";

/// Versioned binary network checkpoint: shapes, γ as (n, d), fractional bits,
/// row-major little-endian f64 weights.
pub fn save_network(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(NET_MAGIC);
    out.push(1); // version
    out.push(match net.v0_mode {
        V0Mode::Zero => 0,
        V0Mode::ResidualOfInput => 1,
    });
    out.push(net.tied as u8);
    out.extend_from_slice(&(net.depth as u32).to_le_bytes());
    out.extend_from_slice(&net.frac_bits.to_le_bytes());
    let (gn, gd) = net.gamma().parts();
    out.extend_from_slice(&gn.to_le_bytes());
    out.extend_from_slice(&gd.to_le_bytes());
    out.extend_from_slice(&(net.blocks.len() as u32).to_le_bytes());
    for blk in &net.blocks {
        out.extend_from_slice(&(blk.width() as u32).to_le_bytes());
        out.extend_from_slice(&(blk.dim() as u32).to_le_bytes());
        for m in [&blk.w1, &blk.w2] {
            for &w in m.data() {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        for &w in &blk.b {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

pub fn load_network(bytes: &[u8]) -> Result<Network> {
    let mut rd = ByteReader::new(bytes);
    if rd.take(4)? != NET_MAGIC {
        return Err(Error::Malformed("checkpoint: bad magic".into()));
    }
    let version = rd.u8()?;
    if version != 1 {
        return Err(Error::Malformed(format!("checkpoint: unsupported version {version}")));
    }
    let v0_mode = match rd.u8()? {
        0 => V0Mode::Zero,
        1 => V0Mode::ResidualOfInput,
        m => return Err(Error::Malformed(format!("checkpoint: bad v0 mode {m}"))),
    };
    let tied = match rd.u8()? {
        0 => false,
        1 => true,
        t => return Err(Error::Malformed(format!("checkpoint: bad tied flag {t}"))),
    };
    let depth = rd.u32()? as usize;
    let frac_bits = rd.u32()?;
    let gn = rd.u64()?;
    let gd = rd.u64()?;
    let gamma = Gamma::ratio(gn, gd).map_err(|e| Error::Malformed(format!("checkpoint: {e}")))?;
    let nblocks = rd.u32()? as usize;
    if tied && nblocks != 1 {
        return Err(Error::Malformed(format!("checkpoint: tied with {nblocks} blocks")));
    }
    if !tied && nblocks != depth {
        return Err(Error::Malformed(format!(
            "checkpoint: depth {depth} with {nblocks} blocks"
        )));
    }
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let p = rd.u32()? as usize;
        let d = rd.u32()? as usize;
        let w1 = rd.matrix(p, d)?;
        let w2 = rd.matrix(p, d)?;
        let b = rd.f64s(p)?;
        blocks.push(BlockParams::new(w1, w2, b, gamma)?);
    }
    rd.finish()?;
    Network::validate(&blocks)?;
    Ok(Network { blocks, tied, depth, v0_mode, frac_bits })
}

/// State checkpoint: dimension, fractional bits, then per coordinate the
/// (mantissa, buffer) pairs for x (empty buffers) and v (live buffers).
pub fn save_state(s: &MomentumState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STATE_MAGIC);
    out.push(1);
    out.extend_from_slice(&(s.dim() as u32).to_le_bytes());
    out.extend_from_slice(&s.frac_bits().to_le_bytes());
    let empty = InfoBuffer::new();
    for m in &s.x.mantissas {
        write_pair(&mut out, m, &empty);
    }
    for (m, buf) in s.v.mantissas.iter().zip(&s.buffers) {
        write_pair(&mut out, m, buf);
    }
    out
}

pub fn load_state(bytes: &[u8]) -> Result<MomentumState> {
    let mut rd = ByteReader::new(bytes);
    if rd.take(4)? != STATE_MAGIC {
        return Err(Error::Malformed("state checkpoint: bad magic".into()));
    }
    let version = rd.u8()?;
    if version != 1 {
        return Err(Error::Malformed(format!("state checkpoint: unsupported version {version}")));
    }
    let d = rd.u32()? as usize;
    let frac_bits = rd.u32()?;
    let mut x_mantissas = Vec::with_capacity(d);
    for _ in 0..d {
        let (m, _) = rd.pair()?;
        x_mantissas.push(m);
    }
    let mut v_mantissas = Vec::with_capacity(d);
    let mut buffers = Vec::with_capacity(d);
    for _ in 0..d {
        let (m, buf) = rd.pair()?;
        v_mantissas.push(m);
        buffers.push(buf);
    }
    rd.finish()?;
    Ok(MomentumState {
        x: FixedPointVector { mantissas: x_mantissas, frac_bits },
        v: FixedPointVector { mantissas: v_mantissas, frac_bits },
        buffers,
    })
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> ByteReader<'a> {
        ByteReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Malformed("checkpoint: truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        if rows.saturating_mul(cols) > (1 << 28) {
            return Err(Error::Malformed(format!("checkpoint: implausible shape {rows}×{cols}")));
        }
        Ok(Matrix::from_vec(rows, cols, self.f64s(rows * cols)?))
    }

    fn pair(&mut self) -> Result<(BigInt, InfoBuffer)> {
        let (pair, used) = read_pair(&self.bytes[self.pos..])?;
        self.pos += used;
        Ok(pair)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Malformed(format!(
                "checkpoint: {} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut ChaCha8Rng, p: usize, d: usize, gamma: Gamma) -> BlockParams {
        let w1 = Matrix::from_fn(p, d, |_, _| rng.gen_range(-0.6..0.6));
        let w2 = Matrix::from_fn(p, d, |_, _| rng.gen_range(-0.6..0.6));
        let b = (0..p).map(|_| rng.gen_range(-0.2..0.2)).collect();
        BlockParams::new(w1, w2, b, gamma).unwrap()
    }

    fn random_net(rng: &mut ChaCha8Rng, depth: usize, gamma: Gamma) -> Network {
        let blocks = (0..depth).map(|_| random_block(rng, 5, 3, gamma)).collect();
        Network::new(blocks, V0Mode::Zero, 32).unwrap()
    }

    #[test]
    fn residual_vanishes_when_either_weight_is_zero() {
        let d = 3;
        let zero1 = BlockParams::new(
            Matrix::zeros(4, d),
            Matrix::from_fn(4, d, |i, j| (i + j) as f64),
            vec![0.0; 4],
            Gamma::Zero,
        )
        .unwrap();
        assert_eq!(residual_mlp(&[1.0, -2.0, 0.5], &zero1).unwrap(), vec![0.0; d]);
        let zero2 = BlockParams::new(
            Matrix::from_fn(4, d, |i, j| (i * j) as f64 + 1.0),
            Matrix::zeros(4, d),
            vec![0.3; 4],
            Gamma::Zero,
        )
        .unwrap();
        assert_eq!(residual_mlp(&[1.0, -2.0, 0.5], &zero2).unwrap(), vec![0.0; d]);
    }

    #[test]
    fn residual_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = random_block(&mut rng, 4, 3, Gamma::Zero);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-5;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = residual_mlp(&xp, &params).unwrap();
            let fm = residual_mlp(&xm, &params).unwrap();
            // Analytic column j of the Jacobian: W₂ᵀ diag(1 − tanh²) W₁ e_j.
            let mut hvec = params.w1.matvec(&x);
            for (hi, bi) in hvec.iter_mut().zip(&params.b) {
                *hi += bi;
            }
            let col: Vec<f64> = (0..3)
                .map(|i| {
                    (0..4)
                        .map(|k| {
                            params.w2[(k, i)]
                                * (1.0 - hvec[k].tanh().powi(2))
                                * params.w1[(k, j)]
                        })
                        .sum()
                })
                .collect();
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - col[i]).abs() < 1e-6, "J[{i}][{j}]: fd {fd} vs {}", col[i]);
            }
        }
    }

    #[test]
    fn plain_step_is_identity_for_zero_residual() {
        let params = BlockParams::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 2),
            vec![0.0; 2],
            Gamma::Zero,
        )
        .unwrap();
        assert_eq!(resnet_step(&[1.5, -0.5], &params).unwrap(), vec![1.5, -0.5]);
    }

    #[test]
    fn gamma_zero_float_forward_equals_plain_residual_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = random_net(&mut rng, 8, Gamma::Zero);
        let x0 = vec![0.3, -0.8, 0.1];
        let out = net.forward_float(&x0).unwrap();
        let mut x = x0;
        for layer in 0..net.depth() {
            x = resnet_step(&x, net.block(layer)).unwrap();
        }
        assert_eq!(out, x, "γ=0 forward must be bit-identical to the plain composition");
    }

    #[test]
    fn gamma_zero_fixed_point_forward_equals_grid_residual_composition() {
        // On the fixed-point grid the γ=0 step must be x ← x + round(f(x)·2^F)/2^F
        // with the velocity overwritten each layer, not accumulated.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = random_net(&mut rng, 6, Gamma::Zero);
        let frac = 32u32;
        let scale = (1u64 << frac) as f64;
        let x0 = vec![0.4, -0.9, 0.25];
        let (out, state) = net.forward(&x0).unwrap();
        let mut x: Vec<f64> = x0
            .iter()
            .map(|v| (v * scale).round_ties_even() / scale)
            .collect();
        for layer in 0..net.depth() {
            let fx = residual_mlp(&x, net.block(layer)).unwrap();
            for (xi, fi) in x.iter_mut().zip(&fx) {
                *xi += (fi * scale).round_ties_even() / scale;
            }
        }
        assert_eq!(out, x, "fixed-point γ=0 forward must compose plain grid steps");
        assert!(state.buffers_empty(), "γ=0 must not grow information buffers");
    }

    #[test]
    fn scalar_linear_composition_plain_is_monotone_while_momentum_crosses() {
        // Tied scalar residual f(x) = a·x with a ∈ (−1, 0): the plain network's
        // depth-15 multiplier (1+a)^15 stays positive (trajectories never cross
        // zero ordering), while the momentum version oscillates to a negative
        // multiplier — distinct dynamics from the same residual.
        let a = -0.5f64;
        let plain = (1.0 + a).powi(15);
        assert!(plain > 0.0);
        let gamma = 0.9;
        let mult = |x0: f64| {
            let mut x = x0;
            let mut v = 0.0;
            for _ in 0..15 {
                v = gamma * v + (1.0 - gamma) * (a * x);
                x += v;
            }
            x
        };
        let m = mult(1.0);
        assert!(m < 0.0, "momentum multiplier {m} should be negative (crossing)");
        // Order of two plain trajectories is preserved for any pair.
        let mut lo = -0.7;
        let mut hi = 0.4;
        for _ in 0..15 {
            lo += a * lo;
            hi += a * hi;
            assert!(lo < hi);
        }
    }

    #[test]
    fn momentum_step_trivial_examples() {
        // γ=0: v₁ = f(x₀), x₁ = x₀ + f(x₀), buffers untouched.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = random_block(&mut rng, 4, 2, Gamma::Zero);
        let x0 = [0.25, -0.75];
        let mut s = MomentumState::new(&x0, &[0.0, 0.0], 32).unwrap();
        momentum_step(&mut s, &params).unwrap();
        assert!(s.buffers_empty());
        let f = residual_mlp(&x0, &params).unwrap();
        for i in 0..2 {
            let q = revarith::encode(f[i], 32).unwrap().mantissa;
            assert_eq!(s.v.mantissas[i], q);
            assert_eq!(
                s.x.mantissas[i],
                revarith::encode(x0[i], 32).unwrap().mantissa + q
            );
        }

        // f ≡ 0, γ = 1/2, x₀ = 1, v₀ = 2 → v₁ = 1, x₁ = 2.
        let zero = BlockParams::new(
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 1),
            vec![0.0; 2],
            Gamma::ratio(1, 2).unwrap(),
        )
        .unwrap();
        let mut s = MomentumState::new(&[1.0], &[2.0], 32).unwrap();
        momentum_step(&mut s, &zero).unwrap();
        assert_eq!(s.v.decode(), vec![1.0]);
        assert_eq!(s.x.decode(), vec![2.0]);
        momentum_inverse_step(&mut s, &zero).unwrap();
        assert_eq!(s.x.decode(), vec![1.0]);
        assert_eq!(s.v.decode(), vec![2.0]);
        assert!(s.buffers_empty());
    }

    #[test]
    fn inverse_step_rejects_gamma_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = random_block(&mut rng, 4, 2, Gamma::Zero);
        let mut s = MomentumState::new(&[0.1, 0.2], &[0.0, 0.0], 32).unwrap();
        assert!(matches!(
            momentum_inverse_step(&mut s, &params),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn deep_forward_then_inverse_recovers_state_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, d) in [(1u64, 2u64), (9, 10), (99, 100), (1, 1)] {
            let gamma = Gamma::ratio(n, d).unwrap();
            let net = random_net(&mut rng, 100, gamma);
            let x0 = [0.4, -0.3, 0.9];
            let s0 = net.initial_state(&x0).unwrap();
            let (_, mut s) = net.forward(&x0).unwrap();
            net.invert(&mut s, 0, net.depth()).unwrap();
            assert_eq!(s, s0, "round trip failed for γ = {n}/{d}");
            assert!(s.buffers_empty());
        }
    }

    #[test]
    fn partial_inversion_recovers_intermediate_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = random_net(&mut rng, 12, Gamma::ratio(9, 10).unwrap());
        let x0 = [0.2, 0.1, -0.5];
        let (_, _, trace) = net.forward_recording(&x0).unwrap();
        let (_, mut s) = net.forward(&x0).unwrap();
        for layer in (0..12).rev() {
            momentum_inverse_step(&mut s, net.block(layer)).unwrap();
            assert_eq!(s.x.decode(), trace.xs[layer], "mismatch at layer {layer}");
        }
    }

    #[test]
    fn buffer_bits_respect_the_information_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = 200usize;
        let gamma = Gamma::ratio(9, 10).unwrap();
        let blocks = (0..k).map(|_| random_block(&mut rng, 5, 3, gamma)).collect();
        let net = Network::new(blocks, V0Mode::Zero, 32).unwrap();
        let (_, s) = net.forward(&[0.5, -0.2, 0.8]).unwrap();
        let bound = k as f64 * (10.0f64 / 9.0).log2() + k as f64;
        for (i, bits) in s.buffer_bits().iter().enumerate() {
            assert!(
                (*bits as f64) <= bound,
                "coordinate {i}: {bits} bits exceeds k·log₂(1/γ) + k = {bound}"
            );
        }
    }

    #[test]
    fn forward_trivial_cases() {
        // Depth 0 → output = x0.
        let net = Network::new(Vec::new(), V0Mode::Zero, 32).unwrap();
        let (out, _) = net.forward(&[0.5, -1.25]).unwrap();
        assert_eq!(out, vec![0.5, -1.25]);

        // f ≡ 0, v0 = 0 → output = x0 at any depth.
        let zero = BlockParams::new(
            Matrix::zeros(3, 2),
            Matrix::zeros(3, 2),
            vec![0.0; 3],
            Gamma::ratio(9, 10).unwrap(),
        )
        .unwrap();
        let net = Network::new(vec![zero; 40], V0Mode::Zero, 32).unwrap();
        let (out, s) = net.forward(&[0.5, -1.25]).unwrap();
        assert_eq!(out, vec![0.5, -1.25]);
        assert_eq!(s.v.decode(), vec![0.0, 0.0]);
    }

    #[test]
    fn recording_forward_matches_plain_forward_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for v0_mode in [V0Mode::Zero, V0Mode::ResidualOfInput] {
            let mut net = random_net(&mut rng, 30, Gamma::ratio(9, 10).unwrap());
            net.v0_mode = v0_mode;
            let x0 = [0.7, -0.1, 0.2];
            let (out_a, s_a) = net.forward(&x0).unwrap();
            let (out_b, s_b, trace) = net.forward_recording(&x0).unwrap();
            assert_eq!(out_a, out_b);
            assert_eq!(s_a, s_b);
            assert_eq!(trace.xs.len(), 30);
            assert_eq!(trace.xs[0], FixedPointVector::encode(&x0, 32).unwrap().decode());
        }
    }

    #[test]
    fn tied_network_shares_one_parameter_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let block = random_block(&mut rng, 5, 3, Gamma::ratio(9, 10).unwrap());
        let tied = Network::new_tied(block.clone(), 15, V0Mode::Zero, 32).unwrap();
        let untied = Network::new(vec![block; 15], V0Mode::Zero, 32).unwrap();
        assert_eq!(tied.depth(), 15);
        assert_eq!(tied.blocks().len(), 1);
        let x0 = [0.3, 0.4, -0.6];
        assert_eq!(tied.forward(&x0).unwrap().0, untied.forward(&x0).unwrap().0);
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(0.5, 0.5), 0.0);
    }

    #[test]
    fn sparse_coding_residual_reproduces_one_ista_step() {
        // With W¹ = I − ηDᵀD, W² = ηDᵀ: x + f(x) = st(x − ηDᵀ(Dx − y), ηλ).
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (d, p) = (3, 5);
        let dict = Matrix::from_fn(d, p, |_, _| rng.gen_range(-1.0..1.0));
        let eta = 0.2;
        let lam = 0.1;
        let dtd = dict.transpose().matmul(&dict);
        let mut w1 = Matrix::identity(p);
        w1.add_scaled(&dtd, -eta);
        let w2 = dict.transpose().scale(eta);
        let layer = ListaParams::new(w1, w2, eta * lam).unwrap();
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = lista_residual(&x, &y, &layer).unwrap();
        let step: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + b).collect();
        // Direct ISTA step.
        let resid: Vec<f64> = dict.matvec(&x).iter().zip(&y).map(|(a, b)| a - b).collect();
        let grad = dict.matvec_t(&resid);
        for i in 0..p {
            let ista = soft_threshold(x[i] - eta * grad[i], eta * lam);
            assert!((step[i] - ista).abs() < 1e-12, "coordinate {i}: {} vs {ista}", step[i]);
        }
        // x = 0, y = 0 → zero residual.
        let z = lista_residual(&vec![0.0; p], &vec![0.0; d], &layer).unwrap();
        assert_eq!(z, vec![0.0; p]);
    }

    #[test]
    fn coupled_step_identity_and_linear_substitution() {
        let x = [1.0, -2.0];
        let v = [0.5, 0.25];
        let mut zero = |t: &[f64]| Ok(vec![0.0; t.len()]);
        let mut zero2 = |t: &[f64]| Ok(vec![0.0; t.len()]);
        let (v1, x1) = revnet_step(&x, &v, &mut zero, &mut zero2).unwrap();
        assert_eq!((v1, x1), (v.to_vec(), x.to_vec()));

        // φ(x) = A x, ψ(v) = B v → (v + Ax, x + B(v + Ax)).
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 1.0]]);
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let (v1, x1) = revnet_step(
            &x,
            &v,
            &mut |t| Ok(a.matvec(t)),
            &mut |t| Ok(b.matvec(t)),
        )
        .unwrap();
        let ax = a.matvec(&x);
        let ev1: Vec<f64> = v.iter().zip(&ax).map(|(p, q)| p + q).collect();
        let bv = b.matvec(&ev1);
        let ex1: Vec<f64> = x.iter().zip(&bv).map(|(p, q)| p + q).collect();
        assert_eq!(v1, ev1);
        assert_eq!(x1, ex1);
    }

    #[test]
    fn coupled_round_trip_stays_tight_over_100_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p1 = random_block(&mut rng, 4, 3, Gamma::Zero);
        let p2 = random_block(&mut rng, 4, 3, Gamma::Zero);
        let x0 = vec![0.1, 0.2, -0.3];
        let v0 = vec![0.05, -0.02, 0.01];
        let mut states = vec![(v0.clone(), x0.clone())];
        let (mut v, mut x) = (v0, x0);
        for _ in 0..100 {
            let (nv, nx) = revnet_step(
                &x,
                &v,
                &mut |t| residual_mlp(t, &p1),
                &mut |t| residual_mlp(t, &p2),
            )
            .unwrap();
            v = nv;
            x = nx;
            states.push((v.clone(), x.clone()));
        }
        // One step + inverse composes to identity within 1e−12.
        let (v1, x1) = revnet_step(
            &states[0].1,
            &states[0].0,
            &mut |t| residual_mlp(t, &p1),
            &mut |t| residual_mlp(t, &p2),
        )
        .unwrap();
        let (bx, bv) = revnet_inverse_step(
            &v1,
            &x1,
            &mut |t| residual_mlp(t, &p1),
            &mut |t| residual_mlp(t, &p2),
        )
        .unwrap();
        for i in 0..3 {
            assert!((bx[i] - states[0].1[i]).abs() < 1e-12);
            assert!((bv[i] - states[0].0[i]).abs() < 1e-12);
        }
        // Full unwind: rounding errors compound through 100 nonlinear steps,
        // so the bound is relative to the (growing) state magnitude.
        for step in (0..100).rev() {
            let (nx, nv) = revnet_inverse_step(
                &v,
                &x,
                &mut |t| residual_mlp(t, &p1),
                &mut |t| residual_mlp(t, &p2),
            )
            .unwrap();
            x = nx;
            v = nv;
            let (ev, ex) = &states[step];
            for i in 0..3 {
                let sx = ex[i].abs().max(1.0);
                let sv = ev[i].abs().max(1.0);
                assert!((x[i] - ex[i]).abs() < 1e-9 * sx, "x[{i}] at step {step}");
                assert!((v[i] - ev[i]).abs() < 1e-9 * sv, "v[{i}] at step {step}");
            }
        }
    }

    #[test]
    fn network_checkpoint_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for tied in [false, true] {
            let mut net = if tied {
                Network::new_tied(
                    random_block(&mut rng, 5, 3, Gamma::ratio(99, 100).unwrap()),
                    17,
                    V0Mode::ResidualOfInput,
                    48,
                )
                .unwrap()
            } else {
                random_net(&mut rng, 6, Gamma::ratio(9, 10).unwrap())
            };
            net.v0_mode = V0Mode::ResidualOfInput;
            let bytes = save_network(&net);
            let back = load_network(&bytes).unwrap();
            assert_eq!(back.depth(), net.depth());
            assert_eq!(back.is_tied(), net.is_tied());
            assert_eq!(back.v0_mode, net.v0_mode);
            assert_eq!(back.frac_bits, net.frac_bits);
            assert_eq!(back.gamma(), net.gamma());
            for (a, b) in back.blocks().iter().zip(net.blocks()) {
                assert_eq!(a.w1.data(), b.w1.data());
                assert_eq!(a.w2.data(), b.w2.data());
                assert_eq!(a.b, b.b);
            }
            // Same forward outputs.
            let x0 = [0.2, -0.4, 0.6];
            assert_eq!(net.forward(&x0).unwrap().0, back.forward(&x0).unwrap().0);
        }
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = random_net(&mut rng, 3, Gamma::ratio(9, 10).unwrap());
        let bytes = save_network(&net);
        assert!(load_network(&bytes[..bytes.len() - 1]).is_err());
        assert!(load_network(&[]).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(load_network(&bad_magic).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(load_network(&trailing).is_err());
        let mut bad_version = bytes;
        bad_version[4] = 9;
        assert!(load_network(&bad_version).is_err());
    }

    #[test]
    fn state_checkpoint_round_trips_with_live_buffers() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let net = random_net(&mut rng, 60, Gamma::ratio(9, 10).unwrap());
        let (_, s) = net.forward(&[0.3, -0.9, 0.5]).unwrap();
        assert!(!s.buffers_empty());
        let bytes = save_state(&s);
        let back = load_state(&bytes).unwrap();
        assert_eq!(back, s);
        // The restored state still inverts all the way down.
        let mut restored = back;
        net.invert(&mut restored, 0, 60).unwrap();
        assert!(restored.buffers_empty());
        assert!(load_state(&bytes[..10]).is_err());
    }

    #[test]
    fn gamma_parsing_and_display() {
        assert_eq!(Gamma::parse("9/10").unwrap(), Gamma::ratio(9, 10).unwrap());
        assert_eq!(Gamma::parse("0").unwrap(), Gamma::Zero);
        assert_eq!(Gamma::parse(" 3 / 4 ").unwrap(), Gamma::ratio(3, 4).unwrap());
        assert!(Gamma::parse("1.5").is_err());
        assert!(Gamma::parse("5/4").is_err());
        assert_eq!(Gamma::ratio(9, 10).unwrap().to_string(), "9/10");
        assert_eq!(Gamma::Zero.to_string(), "0");
        assert_eq!(Gamma::Zero.parts(), (0, 1));
    }

    #[test]
    fn gauge_tracks_peak_live_vectors() {
        gauge_reset();
        {
            let _a = GaugeGuard::new(2);
            {
                let _b = GaugeGuard::new(3);
            }
            let _c = GaugeGuard::new(1);
        }
        assert_eq!(gauge_peak(), 5);
        assert_eq!(gauge_reset(), 0);
        assert_eq!(gauge_peak(), 0);
    }
}

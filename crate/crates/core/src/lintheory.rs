//! Theory of linear residual maps realizable by damped second-order dynamics.
//!
//! For the continuous-depth limit of a momentum network with linear residual
//! `f(x) = θx`, the input→output map at unit time is an analytic matrix
//! function `Ψ_ε(θ)` of the residual matrix and the damping parameter
//! `ε = 1/(1-γ)`.  This module evaluates `Ψ_ε`, characterizes which matrices
//! `D` arise as `Ψ_ε(θ)` for some real `θ` (a spectral test with threshold
//! `λ_ε < 0`), and analyzes the fixed-point iteration used by
//! coupled-channel reversible blocks, whose linearization is generically
//! expansive (modulus-1-exceeding eigenvalues).

use crate::error::{Error, Result};
use crate::numerics::{det, eigenvalues, matrix_exp, minimize_scalar, Matrix};
use num_complex::Complex64;

// ── Problem description ──────────────────────────────────────────────────────

/// A linear residual field `f(x) = θx` with damping `ε > 0`.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    theta: Matrix,
    epsilon: f64,
}

impl LinearDynamics {
    /// Validates shape and damping; `theta` must be square, `epsilon > 0`.
    pub fn new(theta: Matrix, epsilon: f64) -> Result<Self> {
        if !theta.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "LinearDynamics: theta must be square, got {}x{}",
                theta.rows(),
                theta.cols()
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(
                "LinearDynamics: theta has non-finite entries".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "LinearDynamics: epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self { theta, epsilon })
    }

    /// The residual matrix θ.
    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    /// The damping parameter ε.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// State dimension d.
    pub fn dim(&self) -> usize {
        self.theta.rows()
    }
}

// ── The scalar gain function and its minimum ─────────────────────────────────

/// Gain of the damped oscillator mode with angular rate `alpha`:
/// `G_ε(α) = e^{-1/(2ε)} (cos α + sin α / (2εα))`, even in α, with the
/// continuous limit `e^{-1/(2ε)}(1 + 1/(2ε))` at α = 0.
pub fn g_eps(alpha: f64, eps: f64) -> f64 {
    let pref = (-0.5 / eps).exp();
    let a = alpha.abs();
    if a < 1e-12 {
        return pref * (1.0 + 0.5 / eps);
    }
    pref * (a.cos() + a.sin() / (2.0 * eps * a))
}

/// Most negative value reachable by `G_ε` (the representability threshold),
/// together with its minimizer in `(0, 4π]`.
pub fn lambda_eps_detail(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda_eps: epsilon must be positive and finite, got {eps}"
        )));
    }
    // The minimizer sits in (π, 3π/2) for all ε > 0 (first negative lobe of
    // cos, pulled right by the sin/α term); searching (0, 4π] is generous.
    let four_pi = 4.0 * std::f64::consts::PI;
    minimize_scalar(|a| g_eps(a, eps), 1e-9, four_pi, 4096, 200)
}

/// The representability threshold `λ_ε = min_α G_ε(α) < 0`.
pub fn lambda_eps(eps: f64) -> Result<f64> {
    lambda_eps_detail(eps).map(|(_, v)| v)
}

// ── Ψ_ε: the unit-time linear flow map ───────────────────────────────────────

/// Switch point between the power-series and block-exponential routes:
/// the series prefactor `e^{-1/(2ε)}` times `cosh`-sized sums loses all
/// precision (and overflows) once `1/(2ε)` is several hundred.
const SERIES_EXP_LIMIT: f64 = 300.0;

/// Hard cap on series terms before reporting non-convergence.
const SERIES_MAX_TERMS: usize = 2000;

/// Evaluates Ψ_ε(θ) by its power series
/// `e^{-1/(2ε)} Σ_n (1/(2n)! + 1/(2ε(2n+1)!)) Mⁿ` with `M = θ/ε + I/(4ε²)`,
/// truncated when a term's Frobenius norm falls below `tol`.
///
/// Terms are built by the recurrence `P_n = P_{n-1}·M / ((2n-1)(2n))` so the
/// factorially damped products never overflow even when `‖M‖` is large.
/// Fails with `NoConvergence` when ε is so small that the `e^{-1/(2ε)}`
/// prefactor cancellation exceeds double precision (use the block route).
pub fn psi_eps_series(dynamics: &LinearDynamics, tol: f64) -> Result<Matrix> {
    let eps = dynamics.epsilon;
    if 0.5 / eps > SERIES_EXP_LIMIT {
        return Err(Error::NoConvergence(format!(
            "psi_eps_series: prefactor exp(-{:.1}) underflows; use psi_eps_block",
            0.5 / eps
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "psi_eps_series: tol must be positive, got {tol}"
        )));
    }
    let d = dynamics.dim();
    let pref = (-0.5 / eps).exp();

    // M = θ/ε + I/(4ε²)
    let mut m = dynamics.theta.scale(1.0 / eps);
    let diag_shift = 0.25 / (eps * eps);
    for i in 0..d {
        m[(i, i)] += diag_shift;
    }

    // n = 0 term: pref·(1/0! + 1/(2ε·1!))·I
    let mut sum = Matrix::identity(d);
    let mut coeff0 = pref * (1.0 + 0.5 / eps);
    for i in 0..d {
        for j in 0..d {
            sum[(i, j)] = if i == j { coeff0 } else { 0.0 };
        }
    }
    let _ = &mut coeff0;

    // P_n = Mⁿ/(2n)! built multiplicatively; the n-th term is
    // pref·(1 + 1/(2ε(2n+1)))·P_n.
    let mut p = Matrix::identity(d);
    for n in 1..=SERIES_MAX_TERMS {
        let k = (2 * n) as f64;
        p = p.matmul(&m);
        p = p.scale(1.0 / ((k - 1.0) * k));
        let coeff = pref * (1.0 + 0.5 / (eps * (k + 1.0)));
        let term = p.scale(coeff);
        sum.add_scaled(&term, 1.0);
        if !sum.is_finite() {
            return Err(Error::NoConvergence(
                "psi_eps_series: series overflowed before truncation".into(),
            ));
        }
        if term.norm_fro() < tol {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(format!(
        "psi_eps_series: no term below tol={tol} within {SERIES_MAX_TERMS} terms"
    )))
}

/// Evaluates Ψ_ε(θ) as the top-left d×d block of the exponential of the
/// companion block matrix `[[0, I], [θ/ε, -I/ε]]` (the unit-time propagator of
/// the equivalent first-order system in (x, ẋ)).  Stable for all ε > 0,
/// including ε far below the series route's reach.
pub fn psi_eps_block(dynamics: &LinearDynamics) -> Result<Matrix> {
    let d = dynamics.dim();
    let eps = dynamics.epsilon;
    let mut b = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        b[(i, d + i)] = 1.0;
        b[(d + i, d + i)] = -1.0 / eps;
        for j in 0..d {
            b[(d + i, j)] = dynamics.theta[(i, j)] / eps;
        }
    }
    let e = matrix_exp(&b)?;
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = e[(i, j)];
        }
    }
    Ok(out)
}

/// Evaluates Ψ_ε(θ), choosing the series for moderate ε and the block
/// exponential when `e^{-1/(2ε)}` would underflow the series prefactor.
pub fn psi_eps(dynamics: &LinearDynamics, tol: f64) -> Result<Matrix> {
    if 0.5 / dynamics.epsilon > SERIES_EXP_LIMIT {
        psi_eps_block(dynamics)
    } else {
        psi_eps_series(dynamics, tol)
    }
}

/// Scalar Ψ_ε(μ) in closed form.  With `w = μ/ε + 1/(4ε²)`:
/// oscillatory modes (`w < 0`) give `G_ε(√-w)`; overdamped modes (`w > 0`)
/// give `e^{-1/(2ε)}(cosh √w + sinh √w/(2ε√w))`, evaluated through shifted
/// exponentials so huge `1/(2ε)` cancels analytically instead of overflowing.
pub fn psi_eps_scalar(mu: f64, eps: f64) -> f64 {
    let half = 0.5 / eps;
    let w = mu / eps + half * half;
    if w.abs() < 1e-8 {
        // Taylor in w around the critically damped point.
        let cosh_part = 1.0 + w / 2.0 + w * w / 24.0;
        let sinc_part = 1.0 + w / 6.0 + w * w / 120.0;
        return (-half).exp() * (cosh_part + half * sinc_part);
    }
    if w < 0.0 {
        return g_eps((-w).sqrt(), eps);
    }
    let a = w.sqrt();
    let s = half / a; // 1/(2εa)
    0.5 * ((a - half).exp() * (1.0 + s) + (-a - half).exp() * (1.0 - s))
}

// ── Representability of a linear map as a damped flow ────────────────────────

/// Outcome of the spectral representability test for a target map `D`.
#[derive(Debug, Clone)]
pub struct RepresentabilityVerdict {
    /// Whether some real θ satisfies Ψ_ε(θ) = D.
    pub representable: bool,
    /// The threshold λ_ε used (0.0 when ε = 0, where the test degenerates to
    /// the real-matrix-logarithm condition).
    pub lambda_eps: f64,
    /// Real eigenvalue groups that violate the test: value and multiplicity.
    /// For ε = 0 this also lists a zero group when D is singular.
    pub offending: Vec<(f64, usize)>,
    /// Real eigenvalue groups lying within `tol` of λ_ε.  These sit exactly on
    /// the threshold, are counted as representable, and are surfaced here so
    /// callers can treat the knife-edge case explicitly.
    pub boundary: Vec<f64>,
}

/// Default eigenvalue grouping tolerance for a target matrix: `1e-7·max(1, ‖D‖_F)`.
pub fn default_grouping_tol(d: &Matrix) -> f64 {
    1e-7 * d.norm_fro().max(1.0)
}

/// Groups sorted values into clusters joined by gaps ≤ tol (single linkage).
/// Gaps in `(tol, 2·tol)` are reported as ambiguous: an adjacent choice of
/// tolerance would merge or split them, so multiplicity counting is unsafe.
fn cluster_reals(mut vals: Vec<f64>, tol: f64) -> Result<Vec<(f64, usize)>> {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    let mut start = 0usize;
    for i in 0..vals.len() {
        let gap = if i + 1 < vals.len() {
            vals[i + 1] - vals[i]
        } else {
            f64::INFINITY
        };
        if gap <= tol {
            continue;
        }
        if gap < 2.0 * tol {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue grouping ambiguous: gap {:.3e} between {} and {} is \
                 within (tol, 2·tol) for tol={:.3e}",
                gap,
                vals[i],
                vals[i + 1],
                tol
            )));
        }
        let members = &vals[start..=i];
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        clusters.push((mean, members.len()));
        start = i + 1;
    }
    Ok(clusters)
}

/// Decides whether `D = Ψ_ε(θ)` for some real θ, up to eigenvalue grouping
/// tolerance `tol` (pass `default_grouping_tol(d)` when in doubt).
///
/// For ε > 0: a diagonalizable real `D` is representable iff every real
/// eigenvalue below λ_ε occurs with even multiplicity (such values can only
/// arise from complex-conjugate oscillatory mode pairs).  Eigenvalues within
/// `tol` of λ_ε are accepted and reported in `boundary`.
///
/// For ε = 0 the flow map is a plain matrix exponential, so the classical
/// real-logarithm condition applies: `D` must be nonsingular and its negative
/// real eigenvalues must have even multiplicity.
pub fn representable(d: &Matrix, eps: f64, tol: f64) -> Result<RepresentabilityVerdict> {
    if !d.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "representable: matrix must be square, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "representable: epsilon must be finite and >= 0, got {eps}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "representable: tol must be positive, got {tol}"
        )));
    }
    let spec = eigenvalues(d, 1e-9)?;
    // Classify realness with the caller's grouping tolerance, not the
    // eigensolver's residual tolerance.
    let reals: Vec<f64> = spec
        .eigenvalues
        .iter()
        .filter(|l| l.im.abs() <= tol)
        .map(|l| l.re)
        .collect();
    let clusters = cluster_reals(reals, tol)?;

    let threshold = if eps > 0.0 { lambda_eps(eps)? } else { 0.0 };
    let mut offending = Vec::new();
    let mut boundary = Vec::new();
    for &(value, mult) in &clusters {
        if eps == 0.0 && value.abs() <= tol {
            // Singular targets have no real logarithm at all.
            offending.push((value, mult));
            continue;
        }
        if (value - threshold).abs() <= tol {
            boundary.push(value);
            continue;
        }
        if value < threshold && mult % 2 == 1 {
            offending.push((value, mult));
        }
    }
    Ok(RepresentabilityVerdict {
        representable: offending.is_empty(),
        lambda_eps: threshold,
        offending,
        boundary,
    })
}

/// Smallest-shrink factor `α ∈ (0, 1]` such that `αD` passes the
/// representability test at damping ε: real eigenvalues are pulled above λ_ε
/// by rescaling, with a small safety margin past the threshold.
pub fn scale_to_representable(d: &Matrix, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale_to_representable: epsilon must be positive, got {eps}"
        )));
    }
    let tol = default_grouping_tol(d);
    let spec = eigenvalues(d, 1e-9)?;
    let mu_min = spec
        .eigenvalues
        .iter()
        .filter(|l| l.im.abs() <= tol)
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min);
    if !mu_min.is_finite() || mu_min >= 0.0 {
        return Ok(1.0);
    }
    let threshold = lambda_eps(eps)?;
    // Target strictly inside (λ_ε, 0): λ_ε plus a margin that never crosses 0
    // even when λ_ε itself is vanishingly small.
    let target = threshold + 1e-6f64.min(0.5 * threshold.abs());
    Ok((target / mu_min).min(1.0))
}

// ── Coupled-channel reversible blocks: fixed-point instability ───────────────

/// Jacobian of one linearized coupled-channel reversible block with residual
/// Jacobians `A` (first half-step) and `B` (second): `[[I, A], [B, I + BA]]`.
pub fn revnet_jacobian(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "revnet_jacobian: need equal square blocks, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let d = a.rows();
    let ba = b.matmul(a);
    let mut j = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, i)] = 1.0;
        j[(d + i, d + i)] = 1.0;
        for k in 0..d {
            j[(i, d + k)] = a[(i, k)];
            j[(d + i, k)] = b[(i, k)];
            j[(d + i, d + k)] += ba[(i, k)];
        }
    }
    Ok(j)
}

/// Verdict on the iterated linearized coupled-channel block.
#[derive(Debug, Clone)]
pub struct InstabilityReport {
    /// True when some Jacobian eigenvalue has modulus ≥ 1 - tol while staying
    /// away from the neutral value 1 (the generic expansive case).
    pub unstable: bool,
    /// Largest eigenvalue modulus of the block Jacobian.
    pub max_modulus: f64,
    /// Whether both residual Jacobians look invertible (determinant well above
    /// roundoff at the matrix's scale) — the hypothesis under which
    /// instability is guaranteed rather than merely generic.
    pub hypothesis_invertible: bool,
    /// All eigenvalues of the block Jacobian, for reporting.
    pub eigenvalues: Vec<Complex64>,
}

/// Detects the expansive fixed-point behavior of a coupled-channel reversible
/// block: eigenvalues of `[[I, A], [B, I + BA]]` come in pairs with product 1
/// (per eigenvalue μ of `BA`, the roots of `λ² - (2+μ)λ + 1`), so whenever a
/// pair leaves the unit circle one root has modulus > 1.
pub fn revnet_instability_check(a: &Matrix, b: &Matrix, tol: f64) -> Result<InstabilityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "revnet_instability_check: tol must be positive, got {tol}"
        )));
    }
    let j = revnet_jacobian(a, b)?;
    let spec = eigenvalues(&j, 1e-9)?;
    let max_modulus = spec
        .eigenvalues
        .iter()
        .map(|l| l.norm())
        .fold(0.0f64, f64::max);
    let unstable = spec
        .eigenvalues
        .iter()
        .any(|l| l.norm() >= 1.0 - tol && (l - Complex64::new(1.0, 0.0)).norm() > tol);

    let invertible = |m: &Matrix| -> Result<bool> {
        let dimension = m.rows() as f64;
        let scale = (m.norm_fro() / dimension.sqrt()).max(1e-150);
        Ok(det(m)?.abs() > 1e-10 * scale.powi(m.rows() as i32))
    };
    Ok(InstabilityReport {
        unstable,
        max_modulus,
        hypothesis_invertible: invertible(a)? && invertible(b)?,
        eigenvalues: spec.eigenvalues,
    })
}

// ── Tests ────────────────────────────────────────────────────────────────────

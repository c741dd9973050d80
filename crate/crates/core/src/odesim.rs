//! Fixed-step integrators linking the discrete network updates to their
//! continuous limits: explicit Euler for the first-order flow `ẋ = f(x)` and a
//! phase-space (velocity-first) scheme for the damped second-order flow
//! `εẍ + ẋ = f(x)`, whose unit step with `ε = 1/(1-γ)` is exactly the
//! float-mode momentum update.  Includes the damping-limit comparison sweeps
//! and closed-form witnesses used by the experiment commands.

use crate::error::{Error, Result};

// ── Trajectory container ─────────────────────────────────────────────────────

/// A uniformly sampled solution path: `times[i] = i·h`, with position and
/// velocity snapshots per sample (velocities empty for first-order flows).
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    xs: Vec<Vec<f64>>,
    vs: Vec<Vec<f64>>,
    h: f64,
}

impl Trajectory {
    fn new(h: f64) -> Self {
        Trajectory { times: Vec::new(), xs: Vec::new(), vs: Vec::new(), h }
    }

    /// Number of samples (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when the trajectory holds no samples.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The step size.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Sample times, starting at 0.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Position snapshot at sample `i`.
    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.xs[i]
    }

    /// Velocity snapshot at sample `i` (empty for first-order flows).
    pub fn v_at(&self, i: usize) -> &[f64] {
        &self.vs[i]
    }

    /// Final position.
    pub fn final_x(&self) -> &[f64] {
        self.xs.last().expect("trajectory is never empty")
    }

    /// Final velocity (empty for first-order flows).
    pub fn final_v(&self) -> &[f64] {
        self.vs.last().expect("trajectory is never empty")
    }

    /// Sup over samples of the max-norm distance between position snapshots.
    pub fn sup_distance_x(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "sup_distance_x: {} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.xs.iter().zip(&other.xs) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch(format!(
                    "sup_distance_x: dimension {} vs {}",
                    a.len(),
                    b.len()
                )));
            }
            for (ai, bi) in a.iter().zip(b) {
                worst = worst.max((ai - bi).abs());
            }
        }
        Ok(worst)
    }

    /// CSV rendering `t,x0,…,v0,…` (RFC 4180: CRLF line endings, header row).
    pub fn to_csv(&self) -> String {
        let d = self.xs[0].len();
        let dv = self.vs[0].len();
        let mut out = String::from("t");
        for i in 0..d {
            out.push_str(&format!(",x{i}"));
        }
        for i in 0..dv {
            out.push_str(&format!(",v{i}"));
        }
        out.push_str("\r\n");
        for k in 0..self.len() {
            out.push_str(&format!("{}", self.times[k]));
            for val in &self.xs[k] {
                out.push_str(&format!(",{val}"));
            }
            for val in &self.vs[k] {
                out.push_str(&format!(",{val}"));
            }
            out.push_str("\r\n");
        }
        out
    }

    fn push(&mut self, t: f64, x: &[f64], v: &[f64]) {
        self.times.push(t);
        self.xs.push(x.to_vec());
        self.vs.push(v.to_vec());
    }
}

// ── Step-count bookkeeping ───────────────────────────────────────────────────

fn step_count(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {t_final}"
        )));
    }
    let n = (t_final / h).round();
    if n < 1.0 || (n * h - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "step size {h} does not divide horizon {t_final}"
        )));
    }
    Ok(n as usize)
}

fn apply_field(
    f: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    x: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let fx = f(x);
    if fx.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector field returned dimension {} for state of dimension {}",
            fx.len(),
            x.len()
        )));
    }
    if fx.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence(format!(
            "vector field produced non-finite values at t = {t}"
        )));
    }
    Ok(fx)
}

fn check_state(x: &[f64], t: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence(format!("state blew up at t = {t}")));
    }
    Ok(())
}

// ── Integrators ──────────────────────────────────────────────────────────────

/// Explicit Euler for `ẋ = f(x)`: `x ← x + h·f(x)`.  With `h = 1` one step is
/// exactly one plain residual-layer application.
pub fn integrate_first_order(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    let n = step_count(t_final, h)?;
    let mut x = x0.to_vec();
    check_state(&x, 0.0)?;
    let mut traj = Trajectory::new(h);
    traj.push(0.0, &x, &[]);
    for k in 1..=n {
        let t = k as f64 * h;
        let fx = apply_field(&mut f, &x, t)?;
        for (xi, fi) in x.iter_mut().zip(&fx) {
            *xi += h * fi;
        }
        check_state(&x, t)?;
        traj.push(t, &x, &[]);
    }
    Ok(traj)
}

/// Phase-space scheme for `εẍ + ẋ = f(x)`: `v ← v + (h/ε)(f(x) − v)` then
/// `x ← x + h·v` (velocity first, then position with the new velocity).  At
/// `h = 1`, `ε = 1/(1-γ)` this is bit-for-bit the float momentum update.
pub fn integrate_second_order(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    v0: &[f64],
    eps: f64,
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping eps must be positive, got {eps}")));
    }
    if x0.len() != v0.len() {
        return Err(Error::ShapeMismatch(format!(
            "position dimension {} vs velocity dimension {}",
            x0.len(),
            v0.len()
        )));
    }
    let n = step_count(t_final, h)?;
    let coef = h / eps;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    check_state(&x, 0.0)?;
    check_state(&v, 0.0)?;
    let mut traj = Trajectory::new(h);
    traj.push(0.0, &x, &v);
    for k in 1..=n {
        let t = k as f64 * h;
        let fx = apply_field(&mut f, &x, t)?;
        for (vi, fi) in v.iter_mut().zip(&fx) {
            *vi += coef * (fi - *vi);
        }
        for (xi, vi) in x.iter_mut().zip(v.iter()) {
            *xi += h * *vi;
        }
        check_state(&x, t)?;
        check_state(&v, t)?;
        traj.push(t, &x, &v);
    }
    Ok(traj)
}

/// Same scheme for the weak-damping normalization `ẍ + ẋ/ε = f(x)`:
/// `v ← v + h·(f(x) − v/ε)`, `x ← x + h·v`.  As ε → ∞ this approaches the
/// undamped flow `ẍ = f(x)`.
pub fn integrate_weak_damping(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    v0: &[f64],
    eps: f64,
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping eps must be positive, got {eps}")));
    }
    if x0.len() != v0.len() {
        return Err(Error::ShapeMismatch(format!(
            "position dimension {} vs velocity dimension {}",
            x0.len(),
            v0.len()
        )));
    }
    let n = step_count(t_final, h)?;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut traj = Trajectory::new(h);
    traj.push(0.0, &x, &v);
    for k in 1..=n {
        let t = k as f64 * h;
        let fx = apply_field(&mut f, &x, t)?;
        for (vi, fi) in v.iter_mut().zip(&fx) {
            *vi += h * (fi - *vi / eps);
        }
        for (xi, vi) in x.iter_mut().zip(v.iter()) {
            *xi += h * *vi;
        }
        check_state(&x, t)?;
        check_state(&v, t)?;
        traj.push(t, &x, &v);
    }
    Ok(traj)
}

/// Undamped second-order flow `ẍ = f(x)`: `v ← v + h·f(x)`, `x ← x + h·v`.
pub fn integrate_undamped(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    v0: &[f64],
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    if x0.len() != v0.len() {
        return Err(Error::ShapeMismatch(format!(
            "position dimension {} vs velocity dimension {}",
            x0.len(),
            v0.len()
        )));
    }
    let n = step_count(t_final, h)?;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut traj = Trajectory::new(h);
    traj.push(0.0, &x, &v);
    for k in 1..=n {
        let t = k as f64 * h;
        let fx = apply_field(&mut f, &x, t)?;
        for (vi, fi) in v.iter_mut().zip(&fx) {
            *vi += h * fi;
        }
        for (xi, vi) in x.iter_mut().zip(v.iter()) {
            *xi += h * *vi;
        }
        check_state(&x, t)?;
        check_state(&v, t)?;
        traj.push(t, &x, &v);
    }
    Ok(traj)
}

// ── Damping-limit comparison sweeps ──────────────────────────────────────────

/// For each ε in a strictly decreasing list, integrates `εẍ + ẋ = f` and
/// reports the sup-norm distance of its position path from the first-order
/// Euler path of `ẋ = f` on the same grid.
pub fn convergence_eps_to_zero(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    v0: &[f64],
    eps_list: &[f64],
    t_final: f64,
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "eps list must be non-empty and strictly decreasing".into(),
        ));
    }
    let base = integrate_first_order(&mut f, x0, t_final, h)?;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let traj = integrate_second_order(&mut f, x0, v0, eps, t_final, h)?;
        out.push((eps, traj.sup_distance_x(&base)?));
    }
    Ok(out)
}

/// For each ε in a strictly increasing list, integrates `ẍ + ẋ/ε = f` and
/// reports the sup-norm distance of its position path from the undamped flow
/// `ẍ = f` on the same grid.
pub fn convergence_eps_to_infty(
    mut f: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    v0: &[f64],
    eps_list: &[f64],
    t_final: f64,
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "eps list must be non-empty and strictly increasing".into(),
        ));
    }
    let base = integrate_undamped(&mut f, x0, v0, t_final, h)?;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let traj = integrate_weak_damping(&mut f, x0, v0, eps, t_final, h)?;
        out.push((eps, traj.sup_distance_x(&base)?));
    }
    Ok(out)
}

// ── Simultaneous-crossing witness ────────────────────────────────────────────

/// Exact solution of `ẍ + ẋ/ε = -(1/4 + 1/(4ε²))x` with `v₀ = -x₀/(2ε)`:
/// `x(t) = x₀·e^{-t/(2ε)}·cos(t/2)`, which vanishes at `t = π` for every x₀ —
/// second-order paths from distinct starts meeting at one point, impossible
/// for a first-order flow.
pub fn crossing_closed_form(x0: f64, eps: f64, t: f64) -> f64 {
    x0 * (-t / (2.0 * eps)).exp() * (t / 2.0).cos()
}

/// Velocity of the crossing solution.
pub fn crossing_closed_form_velocity(x0: f64, eps: f64, t: f64) -> f64 {
    let decay = (-t / (2.0 * eps)).exp();
    x0 * decay * (-(t / 2.0).cos() / (2.0 * eps) - (t / 2.0).sin() / 2.0)
}

/// The residual field of the crossing system (pair with the weak-damping
/// integrator): `f(x) = -(1/4 + 1/(4ε²))x`.
pub fn crossing_field(eps: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    let k = 0.25 + 0.25 / (eps * eps);
    move |x: &[f64]| x.iter().map(|xi| -k * xi).collect()
}

/// Closed-form trajectory bundle on `[0, π]` from the given starting points:
/// every member's position at `t = π` is exactly zero up to floating-point
/// evaluation of `cos(π/2)`.  The grid uses the step nearest to `h` that
/// divides π evenly.
pub fn crossing_witness(eps: f64, x0s: &[f64], h: f64) -> Result<Vec<Trajectory>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("damping eps must be positive, got {eps}")));
    }
    if !(h > 0.0 && h.is_finite() && h < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("step {h} unusable on [0, pi]")));
    }
    let n = (std::f64::consts::PI / h).round().max(1.0) as usize;
    let h_adj = std::f64::consts::PI / n as f64;
    let mut bundle = Vec::with_capacity(x0s.len());
    for &x0 in x0s {
        let mut traj = Trajectory::new(h_adj);
        for k in 0..=n {
            let t = if k == n { std::f64::consts::PI } else { k as f64 * h_adj };
            traj.push(
                t,
                &[crossing_closed_form(x0, eps, t)],
                &[crossing_closed_form_velocity(x0, eps, t)],
            );
        }
        bundle.push(traj);
    }
    Ok(bundle)
}

// ── Tests ────────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum_net::{momentum_step_float, residual_mlp, resnet_step, BlockParams, Gamma};
    use crate::numerics::{matrix_exp, Matrix};
    use std::f64::consts::PI;

    fn sample_block(seed: u64) -> BlockParams {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = 5;
        let d = 3;
        let w1 = Matrix::from_fn(p, d, |_, _| rng.gen_range(-0.5..0.5));
        let w2 = Matrix::from_fn(p, d, |_, _| rng.gen_range(-0.5..0.5));
        let b = (0..p).map(|_| rng.gen_range(-0.2..0.2)).collect();
        BlockParams::new(w1, w2, b, Gamma::ratio(1, 2).unwrap()).unwrap()
    }

    #[test]
    fn zero_field_first_order_is_constant() {
        let traj = integrate_first_order(|x| vec![0.0; x.len()], &[1.0, -2.0], 1.0, 0.25).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(*traj.times().last().unwrap(), 1.0);
        for i in 0..traj.len() {
            assert_eq!(traj.x_at(i), &[1.0, -2.0]);
        }
    }

    #[test]
    fn zero_field_zero_velocity_second_order_is_constant() {
        let traj =
            integrate_second_order(|x| vec![0.0; x.len()], &[3.0], &[0.0], 1.0, 2.0, 0.5).unwrap();
        for i in 0..traj.len() {
            assert_eq!(traj.x_at(i), &[3.0]);
            assert_eq!(traj.v_at(i), &[0.0]);
        }
    }

    #[test]
    fn unit_step_euler_is_residual_layer_composition() {
        let block = sample_block(3);
        let x0 = vec![0.4, -0.2, 0.9];
        let traj = integrate_first_order(
            |x| residual_mlp(x, &block).unwrap(),
            &x0,
            4.0,
            1.0,
        )
        .unwrap();
        let mut x = x0.clone();
        for k in 1..=4 {
            x = resnet_step(&x, &block).unwrap();
            assert_eq!(traj.x_at(k), x.as_slice(), "mismatch at layer {k}");
        }
    }

    #[test]
    fn linear_decay_error_is_first_order_in_h() {
        // ẋ = -x from 1: x(1) = e^{-1}.  Global error should halve with h.
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let traj = integrate_first_order(|x| vec![-x[0]], &[1.0], 1.0, h).unwrap();
            (traj.final_x()[0] - exact).abs()
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        let ratio = e1 / e2;
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        assert!(err(1e-3) < 1e-3);
    }

    #[test]
    fn coarse_step_agrees_with_refined_reference() {
        // A much finer grid is an independent reference: the coarse error
        // against it matches the coarse error against the closed form.
        let exact = (-1.0f64).exp();
        let fine = integrate_first_order(|x| vec![-x[0]], &[1.0], 1.0, 1e-5).unwrap();
        let coarse = integrate_first_order(|x| vec![-x[0]], &[1.0], 1.0, 1e-3).unwrap();
        let err_vs_fine = (coarse.final_x()[0] - fine.final_x()[0]).abs();
        let err_vs_exact = (coarse.final_x()[0] - exact).abs();
        assert!((err_vs_fine - err_vs_exact).abs() < 1e-5);
        assert!(err_vs_fine < 1e-3);
    }

    #[test]
    fn damped_oscillator_final_state_matches_closed_form() {
        // ẍ + ẋ/ε = (-π² - 1/(4ε²))x with v₀ = 0 reaches -x₀·e^{-1/(2ε)} at
        // t = 1.  The same dynamics in the strong-damping normalization is
        // εẍ + ẋ = (-επ² - 1/(4ε))x; both integrators must land there.
        for &eps in &[0.5, 1.0, 2.0] {
            let k = PI * PI + 0.25 / (eps * eps);
            let x0 = 1.7;
            let expected = -x0 * (-0.5 / eps as f64).exp();
            let weak =
                integrate_weak_damping(|x| vec![-k * x[0]], &[x0], &[0.0], eps, 1.0, 1e-3)
                    .unwrap();
            let rel = (weak.final_x()[0] - expected).abs() / expected.abs();
            assert!(rel <= 1e-3, "eps={eps}: got {} want {expected}", weak.final_x()[0]);
            let strong = integrate_second_order(
                |x| vec![-eps * k * x[0]],
                &[x0],
                &[0.0],
                eps,
                1.0,
                1e-3,
            )
            .unwrap();
            let rel2 = (strong.final_x()[0] - expected).abs() / expected.abs();
            assert!(rel2 <= 1e-3, "eps={eps} (rescaled field): got {}", strong.final_x()[0]);
        }
    }

    #[test]
    fn free_velocity_flow_reaches_prescribed_target() {
        // εẍ + ẋ = 0 with ε = 1: x(t) = x₀ - v₀(e^{-t} - 1).  Choosing
        // v₀ = (target - x₀)/(1 - 1/e) lands exactly on the target at t = 1.
        let x0 = 0.8;
        let target = 3.7;
        let v0 = (target - x0) / (1.0 - (-1.0f64).exp());
        let traj = integrate_second_order(
            |x| vec![0.0; x.len()],
            &[x0],
            &[v0],
            1.0,
            1.0,
            1e-4,
        )
        .unwrap();
        assert!((traj.final_x()[0] - target).abs() < 1e-3);
        // Whole path against the closed form.
        for (i, &t) in traj.times().iter().enumerate() {
            let exact = x0 - v0 * ((-t as f64).exp() - 1.0);
            assert!((traj.x_at(i)[0] - exact).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn unit_step_scheme_is_exactly_float_momentum_update() {
        // h = 1, ε = 1/(1-γ) must replay the float momentum recursion bit for
        // bit (dyadic γ keeps 1/ε exact).
        for &(n, d) in &[(1u64, 2u64), (3, 4)] {
            let gamma = n as f64 / d as f64;
            let eps = 1.0 / (1.0 - gamma);
            let block = sample_block(17);
            let x0 = vec![0.3, -0.8, 0.5];
            let v0 = vec![0.1, 0.0, -0.4];
            let traj = integrate_second_order(
                |x| residual_mlp(x, &block).unwrap(),
                &x0,
                &v0,
                eps,
                50.0,
                1.0,
            )
            .unwrap();
            let mut x = x0.clone();
            let mut v = v0.clone();
            let mut f = |y: &[f64]| residual_mlp(y, &block);
            for k in 1..=50 {
                momentum_step_float(&mut x, &mut v, gamma, &mut f).unwrap();
                assert_eq!(traj.x_at(k), x.as_slice(), "x differs at step {k}, gamma={gamma}");
                assert_eq!(traj.v_at(k), v.as_slice(), "v differs at step {k}, gamma={gamma}");
            }
        }
    }

    #[test]
    fn strong_damping_limit_errors_decrease() {
        let eps_list = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];
        let errors = convergence_eps_to_zero(
            |x| vec![-x[0].sin()],
            &[1.5],
            &[0.0],
            &eps_list,
            2.0,
            1e-3,
        )
        .unwrap();
        for w in errors.windows(2) {
            assert!(
                w[1].1 < w[0].1,
                "errors not decreasing: {:?} -> {:?}",
                w[0],
                w[1]
            );
        }
        assert!(errors.last().unwrap().1 < 0.05);
    }

    #[test]
    fn zero_field_sweeps_report_zero_error() {
        let to_zero = convergence_eps_to_zero(
            |x| vec![0.0; x.len()],
            &[1.0],
            &[0.0],
            &[0.1, 0.05, 0.01],
            1.0,
            0.01,
        )
        .unwrap();
        assert!(to_zero.iter().all(|&(_, e)| e == 0.0));
        let to_infty = convergence_eps_to_infty(
            |x| vec![0.0; x.len()],
            &[1.0],
            &[0.0],
            &[1.0, 10.0, 100.0],
            1.0,
            0.01,
        )
        .unwrap();
        assert!(to_infty.iter().all(|&(_, e)| e == 0.0));
    }

    #[test]
    fn weak_damping_limit_errors_decrease() {
        let eps_list = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
        let errors = convergence_eps_to_infty(
            |x| vec![-x[0].sin()],
            &[1.5],
            &[0.3],
            &eps_list,
            2.0,
            1e-3,
        )
        .unwrap();
        for w in errors.windows(2) {
            assert!(w[1].1 < w[0].1, "errors not decreasing: {:?} -> {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn constant_field_weak_damping_matches_closed_form() {
        // ẍ + ẋ/ε = c: v(t) = cε + (v₀ - cε)e^{-t/ε}, x by integration.
        let c = 0.7;
        let eps = 2.0;
        let x0 = 0.3;
        let v0 = -0.5;
        let traj =
            integrate_weak_damping(|x| vec![c; x.len()], &[x0], &[v0], eps, 1.0, 1e-4).unwrap();
        for (i, &t) in traj.times().iter().enumerate() {
            let decay = (-t / eps as f64).exp();
            let exact_x = x0 + c * eps * t + eps * (v0 - c * eps) * (1.0 - decay);
            assert!((traj.x_at(i)[0] - exact_x).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn crossing_bundle_vanishes_at_pi() {
        let bundle = crossing_witness(1.0, &[1.0, 2.0, 0.0], 1e-3).unwrap();
        assert_eq!(bundle.len(), 3);
        for traj in &bundle {
            assert!((traj.times().last().unwrap() - PI).abs() < 1e-12);
            assert!(traj.final_x()[0].abs() <= 1e-6);
        }
        // The zero start stays identically zero.
        for i in 0..bundle[2].len() {
            assert_eq!(bundle[2].x_at(i)[0], 0.0);
        }
        // Distinct nonzero starts produce genuinely distinct paths before π.
        let mid = bundle[0].len() / 2;
        assert!((bundle[0].x_at(mid)[0] - bundle[1].x_at(mid)[0]).abs() > 1e-3);
    }

    #[test]
    fn crossing_integrator_tracks_closed_form() {
        for &eps in &[1.0, 2.0] {
            let field = crossing_field(eps);
            for &x0 in &[1.0, 2.0] {
                let v0 = -x0 / (2.0 * eps);
                // Integrate on a grid dividing π.
                let n = (PI / 1e-4).round() as usize;
                let h = PI / n as f64;
                let traj = integrate_weak_damping(&field, &[x0], &[v0], eps, PI, h).unwrap();
                for (i, &t) in traj.times().iter().enumerate() {
                    let exact = crossing_closed_form(x0, eps, t);
                    assert!(
                        (traj.x_at(i)[0] - exact).abs() <= 1e-4,
                        "eps={eps} x0={x0} t={t}: {} vs {exact}",
                        traj.x_at(i)[0]
                    );
                }
            }
        }
    }

    #[test]
    fn first_order_paths_from_distinct_starts_never_meet() {
        // Uniqueness of first-order solutions: tied-weight Euler paths from
        // distinct starts keep a positive gap for all time.
        let starts = [-2.0, -1.0, 0.5, 1.0, 2.0];
        let trajs: Vec<Trajectory> = starts
            .iter()
            .map(|&s| {
                integrate_first_order(|x| vec![-x[0] * x[0] * x[0]], &[s], 2.0, 1e-3).unwrap()
            })
            .collect();
        let mut min_gap = f64::INFINITY;
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                for k in 0..trajs[i].len() {
                    min_gap = min_gap.min((trajs[i].x_at(k)[0] - trajs[j].x_at(k)[0]).abs());
                }
            }
        }
        assert!(min_gap > 1e-4, "paths nearly met: gap {min_gap}");
    }

    #[test]
    fn first_order_solutions_embed_into_second_order_family() {
        // Any solution of ẋ = θx also solves εẍ + ẋ = f̂(x) with the enriched
        // field f̂(x) = θx + ε·θ(θx) and matching initial velocity v₀ = θx₀.
        let theta = Matrix::from_vec(2, 2, vec![-0.3, 0.2, 0.1, -0.5]);
        let x0 = vec![1.0, -0.6];
        let eps = 0.7;
        let f_hat = |x: &[f64]| {
            let fx = theta.matvec(x);
            let ffx = theta.matvec(&fx);
            fx.iter().zip(&ffx).map(|(a, b)| a + eps * b).collect::<Vec<f64>>()
        };
        let v0 = theta.matvec(&x0);
        let traj = integrate_second_order(f_hat, &x0, &v0, eps, 1.0, 1e-3).unwrap();
        let expm = matrix_exp(&theta).unwrap();
        let exact = expm.matvec(&x0);
        for (got, want) in traj.final_x().iter().zip(&exact) {
            assert!((got - want).abs() < 5e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn blow_up_is_reported_as_divergence() {
        let r = integrate_first_order(|x| vec![x[0] * x[0] * x[0]], &[3.0], 2.0, 1e-3);
        assert!(matches!(r, Err(Error::Divergence(_))));
        let r2 = integrate_second_order(
            |x| vec![x[0] * x[0] * x[0]],
            &[3.0],
            &[0.0],
            0.1,
            2.0,
            1e-3,
        );
        assert!(matches!(r2, Err(Error::Divergence(_))));
    }

    #[test]
    fn invalid_grids_and_lists_are_rejected() {
        let f = |x: &[f64]| vec![0.0; x.len()];
        assert!(integrate_first_order(f, &[1.0], 1.0, 0.0).is_err());
        assert!(integrate_first_order(f, &[1.0], 1.0, -0.1).is_err());
        assert!(integrate_first_order(f, &[1.0], 1.0, 0.3).is_err(), "0.3 does not divide 1");
        assert!(integrate_first_order(f, &[1.0], 0.0, 0.1).is_err());
        assert!(integrate_second_order(f, &[1.0], &[0.0], 0.0, 1.0, 0.1).is_err());
        assert!(integrate_second_order(f, &[1.0], &[0.0, 1.0], 1.0, 1.0, 0.1).is_err());
        assert!(convergence_eps_to_zero(f, &[1.0], &[0.0], &[0.1, 0.2], 1.0, 0.1).is_err());
        assert!(convergence_eps_to_infty(f, &[1.0], &[0.0], &[2.0, 1.0], 1.0, 0.1).is_err());
        assert!(convergence_eps_to_zero(f, &[1.0], &[0.0], &[], 1.0, 0.1).is_err());
    }

    #[test]
    fn trajectory_grid_is_uniform_and_csv_renders() {
        let traj = integrate_first_order(|x| vec![-x[0]], &[1.0], 1.0, 0.25).unwrap();
        assert_eq!(traj.len(), 5);
        for (i, &t) in traj.times().iter().enumerate() {
            assert!((t - 0.25 * i as f64).abs() < 1e-15);
        }
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,x0\r\n0,1\r\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}

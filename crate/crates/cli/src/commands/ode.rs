//! Damped-oscillator integrator checks: convergence of the second-order flow
//! to its first-order (ε → 0) and undamped (ε → ∞) limits, agreement with a
//! closed-form damped oscillation, and the simultaneous-crossing bundle that
//! separates second-order flows from any first-order one.

use crate::runner::{fmt, with_manifest};
use crate::Global;
use clap::Args;
use momrev_core::odesim::{
    convergence_eps_to_infty, convergence_eps_to_zero, crossing_witness,
    integrate_weak_damping,
};
use momrev_core::{Error, Result};
use serde::Serialize;

#[derive(Args, Debug, Clone, Serialize)]
pub struct OdeOpts {
    /// Horizon of the convergence sweeps.
    #[arg(long, default_value_t = 2.0)]
    pub t_final: f64,
    /// Integration step for every table.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Dampings for the ε → 0 sweep (strictly decreasing).
    #[arg(long, default_value = "0.5,0.2,0.1,0.05,0.02,0.01", value_delimiter = ',')]
    pub eps_to_zero: Vec<f64>,
    /// Dampings for the ε → ∞ sweep (strictly increasing).
    #[arg(long, default_value = "1,2,5,10,20,50", value_delimiter = ',')]
    pub eps_to_infty: Vec<f64>,
    /// Starting position for the sweeps and the closed-form check.
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
}

#[derive(Serialize)]
struct Echo<'a> {
    seed: u64,
    #[serde(flatten)]
    opts: &'a OdeOpts,
}

pub fn run(g: &Global, opts: &OdeOpts) -> Result<()> {
    let echo = serde_json::to_value(Echo { seed: g.seed, opts })
        .map_err(|e| Error::Malformed(e.to_string()))?;

    with_manifest("odecheck", g.seed, echo, &g.out_dir, |runner| {
        let field = |x: &[f64]| vec![-x[0].sin()];
        let x0 = [opts.x0];
        let v0 = [0.0];

        // ── ε → 0: strong damping collapses onto the first-order flow ────
        let sweep =
            convergence_eps_to_zero(field, &x0, &v0, &opts.eps_to_zero, opts.t_final, opts.step)?;
        let rows: Vec<Vec<String>> = sweep
            .iter()
            .map(|&(eps, dist)| vec![fmt(eps), fmt(dist)])
            .collect();
        runner.write_csv("ode_eps_to_zero.csv", &["epsilon", "sup_distance"], rows)?;

        // ── ε → ∞: weak damping approaches the undamped flow ─────────────
        let sweep =
            convergence_eps_to_infty(field, &x0, &v0, &opts.eps_to_infty, opts.t_final, opts.step)?;
        let rows: Vec<Vec<String>> = sweep
            .iter()
            .map(|&(eps, dist)| vec![fmt(eps), fmt(dist)])
            .collect();
        runner.write_csv("ode_eps_to_infty.csv", &["epsilon", "sup_distance"], rows)?;

        // ── Closed form: ẍ + ẋ/ε = −(π² + 1/(4ε²))x, v₀ = 0 has
        //    x(1) = −x₀·e^(−1/(2ε)) exactly ─────────────────────────────────
        let mut rows = Vec::new();
        for eps in [0.5, 1.0, 2.0] {
            let k = std::f64::consts::PI.powi(2) + 0.25 / (eps * eps);
            let traj = integrate_weak_damping(
                |x: &[f64]| vec![-k * x[0]],
                &x0,
                &v0,
                eps,
                1.0,
                opts.step,
            )?;
            let integrated = traj.final_x()[0];
            let closed = -opts.x0 * (-0.5 / eps).exp();
            rows.push(vec![
                fmt(eps),
                fmt(opts.x0),
                fmt(integrated),
                fmt(closed),
                fmt((integrated - closed).abs() / closed.abs().max(1e-300)),
            ]);
        }
        runner.write_csv(
            "ode_closed_form.csv",
            &["epsilon", "x0", "integrated", "closed_form", "rel_error"],
            rows,
        )?;

        // ── Crossing bundle: distinct starts, one meeting point at t = π ──
        let starts = [-1.0, -0.5, 0.5, 1.0];
        let mut rows = Vec::new();
        for eps in [1.0, 2.0] {
            let bundle = crossing_witness(eps, &starts, opts.step)?;
            for (start, traj) in starts.iter().zip(&bundle) {
                rows.push(vec![fmt(eps), fmt(*start), fmt(traj.final_x()[0].abs())]);
            }
        }
        runner.write_csv("ode_crossing.csv", &["epsilon", "x0", "final_abs_x"], rows)?;
        Ok(())
    })
}

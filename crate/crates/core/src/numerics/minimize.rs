//! Scalar minimization: uniform grid scan plus golden-section refinement.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1) / 2

/// Minimizes `f` on `[lo, hi]`: scans `grid` uniform points, then refines the
/// best bracket with `refine_iters` golden-section steps.
///
/// Returns `(argmin, min)`. The grid must be fine enough to land in the basin
/// of the global minimum; refinement is local.
pub fn minimize_scalar(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: usize,
    refine_iters: usize,
) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "minimize_scalar: invalid bracket [{lo}, {hi}]"
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("minimize_scalar: grid must be ≥ 2".into()));
    }

    let step = (hi - lo) / (grid - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..grid {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }

    // Bracket the best grid point by its neighbours and contract.
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..refine_iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let (xm, fm) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // The coarse scan may still win if refinement stayed flat.
    if best_v < fm {
        Ok((lo + step * best_i as f64, best_v))
    } else {
        Ok((xm, fm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_is_found_to_high_precision() {
        let (x, v) = minimize_scalar(|x| (x - 1.3) * (x - 1.3) + 0.25, -4.0, 4.0, 200, 80).unwrap();
        // Argmin precision is limited to ≈ √eps by value comparisons; the
        // minimum value itself converges quadratically and is far tighter.
        assert!((x - 1.3).abs() < 1e-7);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn multimodal_function_needs_the_grid_to_find_the_global_basin() {
        // Global minimum of sin(x) + 0.05x on [0, 20] is near x = 3π/2 + small.
        let f = |x: f64| x.sin() + 0.05 * x;
        let (x, v) = minimize_scalar(f, 0.0, 20.0, 500, 60).unwrap();
        // Candidate basins at ≈ 4.66 and ≈ 10.95; the first is lower.
        assert!((x - 4.662).abs() < 1e-2, "argmin {x}");
        assert!(v < -0.7);
    }

    #[test]
    fn invalid_bracket_is_rejected() {
        assert!(minimize_scalar(|x| x, 1.0, 1.0, 100, 10).is_err());
        assert!(minimize_scalar(|x| x, 2.0, 1.0, 100, 10).is_err());
        assert!(minimize_scalar(|x| x, f64::NAN, 1.0, 100, 10).is_err());
        assert!(minimize_scalar(|x| x, 0.0, 1.0, 1, 10).is_err());
    }

    #[test]
    fn endpoint_minimum_is_honoured() {
        let (x, _) = minimize_scalar(|x| x, 0.0, 5.0, 100, 50).unwrap();
        assert!(x < 1e-9);
    }
}

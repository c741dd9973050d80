//! Dense eigenvalue computation: balancing, Hessenberg reduction, shifted QR.
//!
//! Real input is promoted to complex and driven to triangular form with a
//! single-shift QR iteration (Wilkinson shift, Givens rotations). Every
//! returned eigenvalue is re-verified with one pass of inverse iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Size cap for the dense routines; callers stay well under it.
pub const MAX_DIM: usize = 64;

const MACH_EPS: f64 = f64::EPSILON;

/// Eigenvalues of a square real matrix plus the tolerance used to interpret them.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Absolute tolerance for realness tests and multiplicity grouping.
    pub tol: f64,
}

impl Spectrum {
    /// Eigenvalues whose imaginary part is below the tolerance, as reals.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|l| l.im.abs() <= self.tol)
            .map(|l| l.re)
            .collect()
    }

    /// All eigenvalues sorted by (re, im); handy for multiset comparisons.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }
}

/// Computes all eigenvalues of `m` with algebraic multiplicity.
///
/// `tol` is the absolute tolerance later used for realness/grouping decisions;
/// it also gates the eigenpair verification residual `‖m·v − λ·v‖ ≤ tol·‖m‖`
/// (with a machine-precision floor).
pub fn eigenvalues(m: &Matrix, tol: f64) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues: matrix is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues: dimension {n} outside 1..={MAX_DIM}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("eigenvalues: non-finite entry".into()));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument("eigenvalues: tol must be finite and >= 0".into()));
    }

    let mut a = CMat::from_real(m);
    balance(&mut a);
    hessenberg(&mut a);
    let eigenvalues = qr_eigenvalues(&mut a)?;
    verify_eigenpairs(m, &eigenvalues, tol)?;
    Ok(Spectrum { eigenvalues, tol })
}

// ── Complex dense matrix (internal) ──────────────────────────────────────────

#[derive(Clone)]
struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    fn from_real(m: &Matrix) -> CMat {
        let n = m.rows();
        let data = m.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        CMat { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }

    fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

// ── Balancing (Parlett–Reinsch, powers of two) ───────────────────────────────

fn balance(a: &mut CMat) {
    let n = a.n;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a.at(j, i).norm()).sum();
            let mut r: f64 = (0..n).filter(|&j| j != i).map(|j| a.at(i, j).norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if c + r < 0.95 * s {
                converged = false;
                // Similarity scaling: column i by f, row i by 1/f.
                for j in 0..n {
                    *a.at_mut(j, i) *= f;
                }
                for j in 0..n {
                    *a.at_mut(i, j) /= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

// ── Householder reduction to upper Hessenberg form ───────────────────────────

fn hessenberg(a: &mut CMat) {
    let n = a.n;
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, rows k+1..n.
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a.at(i, k)).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm_sqr = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm_sqr == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sqr;

        // Left: A ← (I − β v v*) A on rows k+1..n.
        for j in 0..n {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * a.at(k + 1 + t, j))
                .sum();
            let bs = beta * s;
            for (t, vt) in v.iter().enumerate() {
                *a.at_mut(k + 1 + t, j) -= vt * bs;
            }
        }
        // Right: A ← A (I − β v v*) on columns k+1..n.
        for i in 0..n {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| a.at(i, k + 1 + t) * vt)
                .sum();
            let bs = beta * s;
            for (t, vt) in v.iter().enumerate() {
                *a.at_mut(i, k + 1 + t) -= bs * vt.conj();
            }
        }
        // Column k is now (…, alpha, 0, …, 0)ᵀ below the diagonal.
        *a.at_mut(k + 1, k) = alpha;
        for i in k + 2..n {
            *a.at_mut(i, k) = Complex64::new(0.0, 0.0);
        }
    }
}

// ── Shifted QR iteration on the Hessenberg form ──────────────────────────────

/// Givens rotation zeroing b in (a, b): returns (c, s) with c real.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let r = (an * an + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Wilkinson shift: eigenvalue of the trailing 2×2 closest to its (2,2) entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let mu1 = tr_half + disc;
    let mu2 = tr_half - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn qr_eigenvalues(h: &mut CMat) -> Result<Vec<Complex64>> {
    let n = h.n;
    let norm = h.norm_fro().max(f64::MIN_POSITIVE);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters_here = 0usize;

    loop {
        // Deflate negligible subdiagonal entries.
        let mut lo = hi;
        while lo > 0 {
            let sub = h.at(lo, lo - 1).norm();
            let local = h.at(lo - 1, lo - 1).norm() + h.at(lo, lo).norm();
            let thresh = MACH_EPS * if local > 0.0 { local } else { norm };
            if sub <= thresh {
                *h.at_mut(lo, lo - 1) = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            // 1×1 block converged.
            eigs.push(h.at(hi, hi));
            if hi == 0 {
                break;
            }
            hi -= 1;
            iters_here = 0;
            continue;
        }

        iters_here += 1;
        if iters_here > 60 {
            return Err(Error::NoConvergence(format!(
                "QR iteration stalled on block [{lo}, {hi}]"
            )));
        }

        // Shift: Wilkinson, with an occasional exceptional shift to break cycles.
        let mu = if iters_here % 12 == 0 {
            h.at(hi, hi) + Complex64::new(0.75 * h.at(hi, hi - 1).norm(), 0.0)
        } else {
            wilkinson_shift(
                h.at(hi - 1, hi - 1),
                h.at(hi - 1, hi),
                h.at(hi, hi - 1),
                h.at(hi, hi),
            )
        };

        // Explicit shifted QR sweep on the active block [lo, hi].
        for i in lo..=hi {
            *h.at_mut(i, i) -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(h.at(i, i), h.at(i + 1, i));
            rots.push((c, s));
            // Rows i, i+1 over columns i..=hi.
            for j in i..=hi {
                let x = h.at(i, j);
                let y = h.at(i + 1, j);
                *h.at_mut(i, j) = c * x + s * y;
                *h.at_mut(i + 1, j) = -s.conj() * x + c * y;
            }
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let i = lo + t;
            // Columns i, i+1 over rows lo..=min(i+1, hi).
            for r in lo..=(i + 1).min(hi) {
                let x = h.at(r, i);
                let y = h.at(r, i + 1);
                *h.at_mut(r, i) = c * x + s.conj() * y;
                *h.at_mut(r, i + 1) = -s * x + c * y;
            }
        }
        for i in lo..=hi {
            *h.at_mut(i, i) += mu;
        }
    }

    Ok(eigs)
}

// ── Verification: inverse iteration per returned eigenvalue ──────────────────

/// Complex LU solve with pivot flooring, for inverse iteration near singularity.
fn lu_solve_guarded(a: &CMat, b: &[Complex64]) -> Vec<Complex64> {
    let n = a.n;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let floor = MACH_EPS * a.norm_fro().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut p = k;
        let mut max = lu.at(k, k).norm();
        for i in k + 1..n {
            if lu.at(i, k).norm() > max {
                max = lu.at(i, k).norm();
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                let t = lu.at(k, j);
                *lu.at_mut(k, j) = lu.at(p, j);
                *lu.at_mut(p, j) = t;
            }
            perm.swap(k, p);
        }
        if lu.at(k, k).norm() < floor {
            // The shifted matrix is numerically singular by construction; a
            // floored pivot still yields a usable inverse-iteration direction.
            *lu.at_mut(k, k) = Complex64::new(floor, 0.0);
        }
        let piv = lu.at(k, k);
        for i in k + 1..n {
            let m = lu.at(i, k) / piv;
            *lu.at_mut(i, k) = m;
            for j in k + 1..n {
                let s = m * lu.at(k, j);
                *lu.at_mut(i, j) -= s;
            }
        }
    }
    let mut x: Vec<Complex64> = perm.iter().map(|&i| b[i]).collect();
    for k in 0..n {
        for i in k + 1..n {
            let s = lu.at(i, k) * x[k];
            x[i] -= s;
        }
    }
    for k in (0..n).rev() {
        x[k] /= lu.at(k, k);
        for i in 0..k {
            let s = lu.at(i, k) * x[k];
            x[i] -= s;
        }
    }
    x
}

fn verify_eigenpairs(m: &Matrix, eigs: &[Complex64], tol: f64) -> Result<()> {
    let n = m.rows();
    let a = CMat::from_real(m);
    let norm = a.norm_fro();
    if norm == 0.0 {
        // Zero matrix: spectrum must be exactly zero.
        return if eigs.iter().all(|l| l.norm() == 0.0) {
            Ok(())
        } else {
            Err(Error::NoConvergence("nonzero eigenvalue for zero matrix".into()))
        };
    }
    let gate = norm * tol.max(64.0 * n as f64 * MACH_EPS);
    for &lambda in eigs {
        // Shift slightly off the eigenvalue so the solve is merely ill-conditioned.
        let delta = 1e-13 * norm;
        let mut shifted = a.clone();
        for i in 0..n {
            *shifted.at_mut(i, i) -= lambda + Complex64::new(delta, delta);
        }
        // Deterministic start vector with unequal components.
        let b0: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(1.0 / (i + 1) as f64, 0.3 / (i + 2) as f64)).collect();
        let mut v = lu_solve_guarded(&shifted, &b0);
        normalize(&mut v);
        v = lu_solve_guarded(&shifted, &v);
        normalize(&mut v);
        // Residual ‖A v − λ v‖ with ‖v‖ = 1.
        let mut res = 0.0f64;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += a.at(i, j) * v[j];
            }
            acc -= lambda * v[i];
            res += acc.norm_sqr();
        }
        let res = res.sqrt();
        if res > gate {
            return Err(Error::NoConvergence(format!(
                "eigenpair residual {res:.3e} exceeds gate {gate:.3e} for λ = {lambda}"
            )));
        }
    }
    Ok(())
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v {
            *z /= n;
        }
    }
}

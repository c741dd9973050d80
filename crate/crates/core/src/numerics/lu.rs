//! LU factorization with partial pivoting: linear solves and determinants.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// PA = LU factorization with partial pivoting.
pub struct Lu {
    /// Packed L (unit lower, below diagonal) and U (upper, on/above diagonal).
    lu: Matrix,
    /// Row permutation: `perm[i]` is the original row now in position i.
    perm: Vec<usize>,
    /// Sign of the permutation, for determinants.
    sign: f64,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            // Partial pivot: largest |entry| in column k at or below the diagonal.
            let mut p = k;
            let mut max = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 {
                return Err(Error::Singular(format!("zero pivot at column {k}")));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                for j in k + 1..n {
                    let s = m * lu[(k, j)];
                    lu[(i, j)] -= s;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    /// Solves `A X = B` for X with B given column-wise.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::ShapeMismatch(format!(
                "solve: rhs has {} rows, matrix is {n}x{n}",
                b.rows()
            )));
        }
        let m = b.cols();
        let mut x = Matrix::zeros(n, m);
        // Apply the permutation, then forward/back substitution.
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = b[(self.perm[i], j)];
            }
        }
        for k in 0..n {
            for i in k + 1..n {
                let l = self.lu[(i, k)];
                for j in 0..m {
                    let s = l * x[(k, j)];
                    x[(i, j)] -= s;
                }
            }
        }
        for k in (0..n).rev() {
            let d = self.lu[(k, k)];
            for j in 0..m {
                x[(k, j)] /= d;
            }
            for i in 0..k {
                let u = self.lu[(i, k)];
                for j in 0..m {
                    let s = u * x[(k, j)];
                    x[(i, j)] -= s;
                }
            }
        }
        Ok(x)
    }

    pub fn det(&self) -> f64 {
        let n = self.lu.rows();
        (0..n).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Convenience wrapper: solve `A X = B` in one call.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Lu::factor(a)?.solve(b)
}

/// Determinant via LU; 0.0 for an exactly singular matrix.
pub fn det(a: &Matrix) -> Result<f64> {
    match Lu::factor(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

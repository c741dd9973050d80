//! Matrix exponential via scaling-and-squaring with a degree-13 Padé approximant.

use crate::error::{Error, Result};
use crate::numerics::lu;
use crate::numerics::matrix::Matrix;

/// Degree-13 Padé numerator coefficients b₀..b₁₃ (denominator uses alternating signs).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm threshold below which the degree-13 approximant is accurate to eps.
const THETA13: f64 = 5.371920351148152;

/// Computes exp(m) for a square real matrix with dimension ≤ 64.
pub fn matrix_exp(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "matrix_exp: matrix is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 || n > crate::numerics::eig::MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "matrix_exp: dimension {n} outside 1..={}",
            crate::numerics::eig::MAX_DIM
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix_exp: non-finite entry".into()));
    }

    // Scale A by 2^(−s) until its 1-norm is under the Padé threshold.
    let norm = m.norm_one();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(s as i32));

    let id = Matrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    // U = A · (A6·(b13·A6 + b11·A4 + b9·A2) + b7·A6 + b5·A4 + b3·A2 + b1·I)
    let mut inner = a6.scale(PADE13[13]);
    inner.add_scaled(&a4, PADE13[11]);
    inner.add_scaled(&a2, PADE13[9]);
    let mut u = a6.matmul(&inner);
    u.add_scaled(&a6, PADE13[7]);
    u.add_scaled(&a4, PADE13[5]);
    u.add_scaled(&a2, PADE13[3]);
    u.add_scaled(&id, PADE13[1]);
    let u = a.matmul(&u);

    // V = A6·(b12·A6 + b10·A4 + b8·A2) + b6·A6 + b4·A4 + b2·A2 + b0·I
    let mut inner = a6.scale(PADE13[12]);
    inner.add_scaled(&a4, PADE13[10]);
    inner.add_scaled(&a2, PADE13[8]);
    let mut v = a6.matmul(&inner);
    v.add_scaled(&a6, PADE13[6]);
    v.add_scaled(&a4, PADE13[4]);
    v.add_scaled(&a2, PADE13[2]);
    v.add_scaled(&id, PADE13[0]);

    // exp(A) ≈ (V − U)⁻¹ (V + U), then undo the scaling by repeated squaring.
    let mut e = lu::solve(&v.sub(&u), &v.add(&u))
        .map_err(|_| Error::Singular("matrix_exp: Padé denominator singular".into()))?;
    for _ in 0..s {
        e = e.matmul(&e);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_zero_is_identity() {
        let e = matrix_exp(&Matrix::zeros(3, 3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_exponential_is_entrywise_exp() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0]]);
        let e = matrix_exp(&m).unwrap();
        assert!((e[(0, 0)] - 1.0f64.exp()).abs() < 1e-13);
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15 && e[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn rotation_generator_exponentiates_to_rotation() {
        // exp([[0, −t], [t, 0]]) = [[cos t, −sin t], [sin t, cos t]]
        let t = 0.7;
        let m = Matrix::from_rows(&[vec![0.0, -t], vec![t, 0.0]]);
        let e = matrix_exp(&m).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(0, 1)] + t.sin()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
        assert!((e[(1, 1)] - t.cos()).abs() < 1e-14);
    }

    #[test]
    fn large_norm_input_triggers_scaling_and_stays_accurate() {
        // Nilpotent: exp([[0, a], [0, 0]]) = [[1, a], [0, 1]] exactly.
        let m = Matrix::from_rows(&[vec![0.0, 1000.0], vec![0.0, 0.0]]);
        let e = matrix_exp(&m).unwrap();
        assert!((e[(0, 0)] - 1.0).abs() < 1e-9);
        assert!((e[(0, 1)] - 1000.0).abs() < 1e-6);
        assert!(e[(1, 0)].abs() < 1e-12);
        assert!((e[(1, 1)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn addition_rule_holds_for_commuting_matrices() {
        let a = Matrix::from_rows(&[vec![0.3, 0.1], vec![0.1, -0.2]]);
        let lhs = matrix_exp(&a.scale(2.0)).unwrap();
        let ea = matrix_exp(&a).unwrap();
        let rhs = ea.matmul(&ea);
        for i in 0..2 {
            for j in 0..2 {
                assert!((lhs[(i, j)] - rhs[(i, j)]).abs() < 1e-13);
            }
        }
    }
}

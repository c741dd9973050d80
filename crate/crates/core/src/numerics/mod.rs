//! Dense linear algebra sized for this crate: matrices up to 64×64,
//! eigenvalues, matrix exponentials, LU solves, and scalar minimization.

pub mod eig;
pub mod expm;
pub mod lu;
pub mod matrix;
pub mod minimize;

pub use eig::{eigenvalues, Spectrum};
pub use num_complex::Complex64;
pub use expm::matrix_exp;
pub use lu::{det, solve};
pub use matrix::{axpy, dot, norm2, norm_inf_vec, Matrix};
pub use minimize::minimize_scalar;

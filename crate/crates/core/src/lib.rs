//! Momentum residual networks with exactly invertible forward dynamics.
//!
//! The crate provides:
//! - reversible fixed-point arithmetic with information buffers ([`revarith`]),
//! - momentum / plain / reversible-coupling residual blocks and invertible
//!   forward passes ([`momentum_net`]),
//! - memory-free backpropagation by reconstructing activations on the fly
//!   ([`autodiff`]),
//! - the linear-dynamics theory: which linear maps depth-K momentum nets can
//!   represent, and the sharp spectral threshold λ_ε ([`lintheory`]),
//! - continuous-time integrators for the damped-oscillator limit ([`odesim`]),
//! - deterministic experiment pipelines ([`trainer`]).

pub mod autodiff;
pub mod batch;
pub mod error;
pub mod lintheory;
pub mod momentum_net;
pub mod numerics;
pub mod odesim;
pub mod revarith;
pub mod trainer;

pub use error::{Error, Result};

//! Model-free optimal tracking for discrete-time linear plants whose
//! reference trajectory is supplied as a time-varying coefficient matrix
//! over fixed basis functions.
//!
//! The crate has three layers:
//!
//! * [`reference`] — polynomial basis families, reference parameter
//!   matrices `P` with `r(P, i) = P ρ(i)`, shift operators `T(i)` and
//!   cubic-spline fitting of knot parameter matrices from sampled
//!   reference points.
//! * [`lq`] — the model-based ground truth: extended-system construction,
//!   discounted Riccati solution and the optimal tracking gain, used to
//!   validate what the learner produces.
//! * [`qtracker`] / [`baseline`] / [`sim`] — the learner itself
//!   (quadratic Q-function over `(x, u, P)`, batch least-squares policy
//!   iteration), a comparison controller that assumes a time-invariant
//!   exo-system, and the simulation harness that generates excitation
//!   data and rollouts.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the
//! experiment CLI live in the companion `pradp-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baseline;
pub mod error;
pub mod lq;
pub mod qtracker;
pub mod reference;
pub mod sim;

pub use error::{Error, Result};

pub use nalgebra;

/// Modulus of a complex number; avoids the std-gated `Complex::norm`.
pub fn complex_modulus(c: nalgebra::Complex<f64>) -> f64 {
    libm::hypot(c.re, c.im)
}

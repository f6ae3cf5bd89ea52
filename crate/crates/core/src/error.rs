//! Crate-wide error type.

use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix or vector did not have the expected size.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A scalar parameter was outside its admissible range.
    InvalidParameter { what: &'static str },
    /// Spline fitting needs at least four samples per state dimension.
    InsufficientSamples { got: usize, needed: usize },
    /// Spline samples must sit at steps `0, d, 2d, …` with constant spacing.
    BadKnotSpacing { at: usize, expected: usize, got: usize },
    /// The requested operation is only defined for the cubic basis.
    UnsupportedBasis { op: &'static str },
    /// A step index lies past the last knot segment.
    OutOfHorizon { step: usize, horizon: usize },
    /// `(I - T/2 A)` in the bilinear transform is singular.
    DiscretizationSingular,
    /// The controllability matrix of `(A, B)` is rank deficient.
    Uncontrollable { rank: usize, n: usize },
    /// The Riccati fixed-point iteration did not reach the tolerance.
    RiccatiNoConvergence { iterations: usize, last_delta: f64 },
    /// A matrix that must be positive definite could not be factorized.
    IllConditioned { what: &'static str },
    /// `h_uu` of the current Q-function iterate is not positive definite,
    /// so the greedy policy has no minimizer.
    PolicyUndefined,
    /// The regression matrix does not span the weight space.
    ExcitationInsufficient { rank: usize, needed: usize },
    /// The policy-iteration loop exhausted `max_iter` without the weight
    /// update dropping below the threshold.
    LspiNoConvergence { iterations: usize, last_delta: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected dimension {expected}, got {got}"),
            Error::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            Error::InsufficientSamples { got, needed } => {
                write!(f, "spline fit needs at least {needed} samples, got {got}")
            }
            Error::BadKnotSpacing { at, expected, got } => write!(
                f,
                "sample {at}: expected step {expected} (uniform knot spacing), got {got}"
            ),
            Error::UnsupportedBasis { op } => {
                write!(f, "{op} is only defined for the cubic basis")
            }
            Error::OutOfHorizon { step, horizon } => {
                write!(f, "step {step} is past the reference horizon {horizon}")
            }
            Error::DiscretizationSingular => {
                write!(f, "bilinear transform is singular for this sample time")
            }
            Error::Uncontrollable { rank, n } => {
                write!(f, "(A, B) not controllable: controllability rank {rank} < {n}")
            }
            Error::RiccatiNoConvergence {
                iterations,
                last_delta,
            } => write!(
                f,
                "Riccati iteration did not converge in {iterations} steps (last delta {last_delta:e})"
            ),
            Error::IllConditioned { what } => {
                write!(f, "{what} is not positive definite / invertible")
            }
            Error::PolicyUndefined => {
                write!(f, "h_uu is not positive definite; greedy policy undefined")
            }
            Error::ExcitationInsufficient { rank, needed } => write!(
                f,
                "excitation insufficient: numerical rank {rank} < {needed} required weights"
            ),
            Error::LspiNoConvergence {
                iterations,
                last_delta,
            } => write!(
                f,
                "policy iteration did not converge in {iterations} iterations (last weight change {last_delta:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}

//! Translation-invariant valuations on convex polytopes.
//!
//! Valuations are finite signed combinations of mixed-volume functionals
//! `L -> V(L[i], K_1, ..., K_{n-i})`. The crate computes mixed volumes,
//! convolutions, norms, degrees and dynamical degrees of linear maps,
//! invariant valuations, and solves a variational Minkowski-type problem.
//!
//! Everything is generic over [`Scalar`]: `f64` or exact [`Rational`].

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod minkowski;
pub mod mixed_volume;
pub mod scalar;
pub mod valuation;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ball_polytope, LinearMap, Polytope, ReferenceBody};
pub use scalar::{ArithmeticMode, Rational, Scalar};
pub use valuation::{ConvMode, Valuation};

/// Worker pool size from `VALGEBRA_THREADS`, if set and positive.
pub fn configured_threads() -> Option<usize> {
    std::env::var("VALGEBRA_THREADS").ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Installs the global rayon pool honoring `VALGEBRA_THREADS`. Later calls are no-ops.
pub fn init_thread_pool() {
    if let Some(t) = configured_threads() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

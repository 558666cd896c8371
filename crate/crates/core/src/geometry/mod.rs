//! Polytope arithmetic: hulls, Minkowski sums, volumes, support functions,
//! Hausdorff distance, linear images, sections and projections.

pub mod ball;
pub mod hausdorff;
pub mod hull;
pub mod linear_map;
pub mod polytope;
pub mod random;
pub mod section;

pub use ball::{ball_polytope, ReferenceBody, ReferenceInfo};
pub use hausdorff::{distance_to, hausdorff_distance};
pub use hull::Halfspace;
pub use linear_map::LinearMap;
pub use polytope::Polytope;
pub use section::{orthonormal_complement, restrict_and_project, Section, SectionProjection};

use crate::error::Result;
use crate::scalar::Scalar;

pub fn minkowski_sum<S: Scalar>(p: &Polytope<S>, q: &Polytope<S>) -> Result<Polytope<S>> {
    p.minkowski_sum(q)
}

pub fn volume<S: Scalar>(p: &Polytope<S>) -> S {
    p.volume()
}

pub fn apply_linear_map<S: Scalar>(g: &LinearMap<S>, p: &Polytope<S>) -> Result<Polytope<S>> {
    g.apply_polytope(p)
}

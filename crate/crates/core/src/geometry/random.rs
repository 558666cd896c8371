//! Random bodies and maps for property sweeps.

use rand::Rng;

use crate::scalar::{ArithmeticMode, Scalar};

use super::linear_map::LinearMap;
use super::polytope::Polytope;

fn coordinate<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> S {
    match S::MODE {
        ArithmeticMode::Exact => S::from_ratio(rng.gen_range(-6..=6), 2),
        ArithmeticMode::Float => S::from_f64(rng.gen_range(-1.0..1.0)),
    }
}

/// Hull of `k` random points; may be lower-dimensional.
pub fn random_polytope<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Polytope<S> {
    let pts: Vec<Vec<S>> = (0..k.max(1)).map(|_| (0..n).map(|_| coordinate(rng)).collect()).collect();
    Polytope::from_points(n, pts).expect("valid points")
}

/// Full-dimensional hull of `k >= n+1` random points.
pub fn random_full_polytope<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Polytope<S> {
    loop {
        let p = random_polytope(rng, n, k.max(n + 1));
        if p.is_full_dimensional() {
            return p;
        }
    }
}

/// Random polytope contained in `body` (convex combinations of its vertices).
pub fn random_polytope_inside<S: Scalar, R: Rng + ?Sized>(rng: &mut R, body: &Polytope<S>, k: usize) -> Polytope<S> {
    let verts = body.vertices();
    let pts: Vec<Vec<S>> = (0..k.max(1))
        .map(|_| {
            let w: Vec<u32> = (0..verts.len()).map(|_| rng.gen_range(0..4u32).pow(2)).collect();
            let total: u32 = w.iter().sum::<u32>().max(1);
            let mut x = vec![S::zero(); body.dim()];
            if w.iter().all(|&t| t == 0) {
                return verts[rng.gen_range(0..verts.len())].clone();
            }
            for (v, &wi) in verts.iter().zip(&w) {
                let c = S::from_ratio(wi as i64, total as i64);
                for (xk, vk) in x.iter_mut().zip(v) {
                    *xk = xk.clone() + c.clone() * vk.clone();
                }
            }
            x
        })
        .collect();
    Polytope::from_points(body.dim(), pts).expect("valid points")
}

/// Random segment through the origin side `[0, v]`.
pub fn random_segment<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Polytope<S> {
    loop {
        let v: Vec<S> = (0..n).map(|_| coordinate(rng)).collect();
        if v.iter().any(|x| !x.is_zero()) {
            return Polytope::segment_from_origin(v).expect("valid segment");
        }
    }
}

/// Random invertible matrix with entries in `[-1, 1]` (or halves in exact mode).
pub fn random_invertible<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> LinearMap<S> {
    loop {
        let rows = (0..n).map(|_| (0..n).map(|_| coordinate::<S, R>(rng)).collect()).collect();
        let g = LinearMap::new(rows).expect("square");
        let well_conditioned = match S::MODE {
            ArithmeticMode::Exact => !g.det().is_zero(),
            ArithmeticMode::Float => Scalar::to_f64(g.det()).abs() > 1e-2,
        };
        if well_conditioned {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_bodies_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let p: Polytope<Rational> = random_full_polytope(&mut rng, n, n + 4);
            assert!(p.is_full_dimensional());
            let q = random_polytope_inside(&mut rng, &p, 5);
            assert!(q.vertices().iter().all(|v| p.contains(v)));
        }
    }
}

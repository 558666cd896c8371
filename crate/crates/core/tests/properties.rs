//! Property tests over small integer polytopes in exact arithmetic.

use proptest::prelude::*;
use valgebra::dynamics::log_concavity_report;
use valgebra::geometry::LinearMap;
use valgebra::mixed_volume::{mixed_volume, mixed_volume_repeated};
use valgebra::valuation::Term;
use valgebra::{ConvMode, Polytope, Rational, Scalar, Valuation};

fn r(x: i64) -> Rational {
    Rational::from_i64(x)
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(-4i64..=4, n).prop_map(|v| v.into_iter().map(r).collect())
}

/// Convex hull of a few lattice points plus a lattice simplex, so the body is full-dimensional.
fn body(n: usize) -> impl Strategy<Value = Polytope<Rational>> {
    (point(n), 1i64..=3, prop::collection::vec(point(n), 0..4)).prop_map(move |(base, s, extra)| {
        let mut pts = vec![base.clone()];
        for j in 0..n {
            let mut p = base.clone();
            p[j] = p[j].clone() + r(s);
            pts.push(p);
        }
        pts.extend(extra);
        Polytope::from_points(n, pts).expect("nonempty")
    })
}

fn invertible(n: usize) -> impl Strategy<Value = LinearMap<Rational>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, n), n)
        .prop_map(|rows| LinearMap::new(rows.into_iter().map(|row| row.into_iter().map(r).collect()).collect()).unwrap())
        .prop_filter("invertible", |g| !g.is_singular())
}

fn mv(bodies: &[&Polytope<Rational>]) -> Rational {
    mixed_volume(bodies).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn diagonal_is_volume(k in body(3)) {
        prop_assert_eq!(mixed_volume_repeated(&[(&k, 3)]).unwrap(), k.volume());
    }

    #[test]
    fn symmetric_in_arguments(a in body(3), b in body(3), c in body(3)) {
        let v = mv(&[&a, &b, &c]);
        prop_assert_eq!(&v, &mv(&[&b, &c, &a]));
        prop_assert_eq!(&v, &mv(&[&c, &a, &b]));
        prop_assert_eq!(&v, &mv(&[&b, &a, &c]));
    }

    #[test]
    fn additive_under_minkowski_sum(a in body(2), a2 in body(2), b in body(2)) {
        let s = a.minkowski_sum(&a2).unwrap();
        prop_assert_eq!(mv(&[&s, &b]), mv(&[&a, &b]) + mv(&[&a2, &b]));
    }

    #[test]
    fn homogeneous_and_translation_invariant(a in body(2), b in body(2), t in 1i64..5, shift in point(2)) {
        let scaled = a.scale(&r(t));
        prop_assert_eq!(mv(&[&scaled, &b]), r(t) * mv(&[&a, &b]));
        let moved = a.translate(&shift).unwrap();
        prop_assert_eq!(mv(&[&moved, &b]), mv(&[&a, &b]));
    }

    #[test]
    fn monotone_under_inclusion(a in body(3), extra in point(3), b in body(3), c in body(3)) {
        let mut pts = a.vertices().to_vec();
        pts.push(extra);
        let bigger = Polytope::from_points(3, pts).unwrap();
        prop_assert!(mv(&[&a, &b, &c]) <= mv(&[&bigger, &b, &c]));
    }

    #[test]
    fn linear_equivariance(g in invertible(2), a in body(2), b in body(2)) {
        let ga = g.apply_polytope(&a).unwrap();
        let gb = g.apply_polytope(&b).unwrap();
        prop_assert_eq!(mv(&[&ga, &gb]), abs(g.det()) * mv(&[&a, &b]));
    }

    #[test]
    fn planar_minkowski_inequality(a in body(2), b in body(2)) {
        let m = mv(&[&a, &b]);
        prop_assert!(m.clone() * m >= a.volume() * b.volume());
    }

    #[test]
    fn alexandrov_fenchel(a in body(3), b in body(3), c in body(3)) {
        let ab = mv(&[&a, &b, &c]);
        prop_assert!(ab.clone() * ab >= mv(&[&a, &a, &c]) * mv(&[&b, &b, &c]));
    }

    #[test]
    fn convolution_commutes_and_has_unit(a in body(2), b in body(2), w in -3i64..=3) {
        let phi = Valuation::new(2, 1, vec![Term { weight: r(w), bodies: vec![a] }]).unwrap();
        let psi = Valuation::mixed(2, vec![b]).unwrap();
        let vol = Valuation::<Rational>::volume(2);
        for mode in [ConvMode::Unit, ConvMode::Paper] {
            prop_assert_eq!(
                phi.convolve(&psi, mode).unwrap().constant().unwrap(),
                psi.convolve(&phi, mode).unwrap().constant().unwrap()
            );
        }
        prop_assert_eq!(vol.convolve(&phi, ConvMode::Unit).unwrap(), phi);
    }

    #[test]
    fn group_action_transports_evaluation(g in invertible(2), a in body(2), k in body(2)) {
        let phi = Valuation::mixed(2, vec![a]).unwrap();
        let gk = g.apply_polytope(&k).unwrap();
        prop_assert_eq!(phi.group_action(&g).unwrap().evaluate(&gk).unwrap(), phi.evaluate(&k).unwrap());
    }

    #[test]
    fn even_odd_split_recombines(a in body(2), k in body(2)) {
        let phi = Valuation::mixed(2, vec![a]).unwrap();
        let (even, odd) = phi.even_odd_split();
        prop_assert_eq!(even.evaluate(&k).unwrap() + odd.evaluate(&k).unwrap(), phi.evaluate(&k).unwrap());
        prop_assert_eq!(even.evaluate(&k.reflect()).unwrap(), even.evaluate(&k).unwrap());
    }

    #[test]
    fn degree_sequence_is_log_concave(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 3)) {
        let g = LinearMap::new(rows).unwrap();
        prop_assume!(g.det().abs() > 1e-3);
        let worst = log_concavity_report(&g).unwrap().relative_margins().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= -1e-9);
    }
}

fn abs(x: &Rational) -> Rational {
    if *x < r(0) { -x.clone() } else { x.clone() }
}

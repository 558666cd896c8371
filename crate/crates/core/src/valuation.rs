//! Valuations as finite signed combinations of mixed-volume functionals.
//!
//! A term `(w, (K_1, ..., K_{n-i}))` stands for `L -> w V(L[i], K_1, ..., K_{n-i})`.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::random::random_polytope_inside;
use crate::geometry::{LinearMap, Polytope, ReferenceBody};
use crate::mixed_volume::{containment_scale, mixed_volume};
use crate::scalar::{factorial, Scalar};

/// Normalization of the convolution coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvMode {
    /// `i! j! / (n! (i+j-n)!)`; volume is the unit.
    #[default]
    Unit,
    /// `i! j! / n!`.
    Paper,
}

impl fmt::Display for ConvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvMode::Unit => f.write_str("unit_normalized"),
            ConvMode::Paper => f.write_str("paper_literal"),
        }
    }
}

impl std::str::FromStr for ConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "unit_normalized" => Ok(ConvMode::Unit),
            "paper" | "paper_literal" => Ok(ConvMode::Paper),
            other => Err(Error::Parse(format!("unknown convolution mode {other:?}"))),
        }
    }
}

impl ConvMode {
    /// Coefficient for degrees `i`, `j` in dimension `n` (requires `i + j >= n`).
    pub fn coefficient<S: Scalar>(self, n: usize, i: usize, j: usize) -> S {
        let base = factorial::<S>(i) * factorial::<S>(j) / factorial::<S>(n);
        match self {
            ConvMode::Paper => base,
            ConvMode::Unit => base / factorial::<S>(i + j - n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<S: Scalar> {
    pub weight: S,
    pub bodies: Vec<Polytope<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Valuation<S: Scalar = f64> {
    dim: usize,
    degree: usize,
    terms: Vec<Term<S>>,
}

fn tuple_cmp<S: Scalar>(a: &[Polytope<S>], b: &[Polytope<S>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.canonical_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

impl<S: Scalar> Valuation<S> {
    pub fn new(dim: usize, degree: usize, terms: Vec<Term<S>>) -> Result<Self> {
        if dim == 0 || degree > dim {
            return Err(Error::Precondition(format!("degree {degree} outside 0..={dim}")));
        }
        for t in &terms {
            if t.bodies.len() != dim - degree {
                return Err(Error::Arity { expected: dim - degree, found: t.bodies.len() });
            }
            for b in &t.bodies {
                check_dim(dim, b.dim())?;
            }
        }
        let mut v = Valuation { dim, degree, terms };
        v.canonicalize();
        Ok(v)
    }

    fn canonicalize(&mut self) {
        for t in &mut self.terms {
            t.bodies.sort_by(|a, b| a.canonical_cmp(b));
        }
        self.terms.sort_by(|a, b| tuple_cmp(&a.bodies, &b.bodies));
        let mut merged: Vec<Term<S>> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.bodies == t.bodies => last.weight = last.weight.clone() + t.weight,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.weight.is_zero());
        self.terms = merged;
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Valuation { dim, degree, terms: Vec::new() }
    }

    /// `vol`, the degree-`n` unit.
    pub fn volume(dim: usize) -> Self {
        Valuation { dim, degree: dim, terms: vec![Term { weight: S::one(), bodies: Vec::new() }] }
    }

    /// `L -> V(L[i], K_1, ..., K_{n-i})` with `i = n - bodies.len()`.
    pub fn mixed(dim: usize, bodies: Vec<Polytope<S>>) -> Result<Self> {
        let degree = dim
            .checked_sub(bodies.len())
            .ok_or(Error::Arity { expected: dim, found: bodies.len() })?;
        Self::new(dim, degree, vec![Term { weight: S::one(), bodies }])
    }

    /// `V(B[n-i], -)`, the degree-`i` functional of the reference body.
    pub fn reference(b: &ReferenceBody<S>, degree: usize) -> Result<Self> {
        let n = b.dim();
        if degree > n {
            return Err(Error::Precondition(format!("degree {degree} outside 0..={n}")));
        }
        Self::mixed(n, vec![b.body.clone(); n - degree])
    }

    /// Degree-0 valuation with constant value `c`.
    pub fn constant_valuation(dim: usize, c: S) -> Self {
        Self::new(dim, 0, vec![Term { weight: c, bodies: vec![Polytope::unit_cube(dim); dim] }])
            .expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[Term<S>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All weights nonnegative.
    pub fn is_positive(&self) -> bool {
        self.terms.iter().all(|t| !t.weight.is_negative())
    }

    pub fn scale(&self, s: &S) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { weight: t.weight.clone() * s.clone(), bodies: t.bodies.clone() })
            .collect();
        let mut v = Valuation { dim: self.dim, degree: self.degree, terms };
        v.canonicalize();
        v
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        if self.degree != other.degree {
            return Err(Error::Precondition(format!(
                "cannot add degrees {} and {}",
                self.degree, other.degree
            )));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.dim, self.degree, terms)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-S::one()))
    }

    fn term_value(&self, t: &Term<S>, ls: &[&Polytope<S>]) -> Result<S> {
        let mut tuple: Vec<&Polytope<S>> = ls.to_vec();
        tuple.extend(t.bodies.iter());
        Ok(t.weight.clone() * mixed_volume(&tuple)?)
    }

    fn sum_terms(&self, ls: &[&Polytope<S>]) -> Result<S> {
        let parts: Vec<Result<S>> = self.terms.par_iter().map(|t| self.term_value(t, ls)).collect();
        parts.into_iter().try_fold(S::zero(), |acc, v| Ok(acc + v?))
    }

    /// `phi(L)`.
    pub fn evaluate(&self, l: &Polytope<S>) -> Result<S> {
        check_dim(self.dim, l.dim())?;
        if self.degree == 0 {
            return self.constant();
        }
        if self.degree == self.dim {
            let w = self.terms.iter().fold(S::zero(), |acc, t| acc + t.weight.clone());
            return Ok(w * l.volume());
        }
        let ls = vec![l; self.degree];
        self.sum_terms(&ls)
    }

    /// Symmetric multilinear extension `phi(L_1, ..., L_i)`.
    pub fn polarized_evaluate(&self, ls: &[&Polytope<S>]) -> Result<S> {
        if ls.len() != self.degree {
            return Err(Error::Arity { expected: self.degree, found: ls.len() });
        }
        for l in ls {
            check_dim(self.dim, l.dim())?;
        }
        self.sum_terms(ls)
    }

    /// Value of a degree-0 valuation.
    pub fn constant(&self) -> Result<S> {
        if self.degree != 0 {
            return Err(Error::Precondition(format!("degree {} is not 0", self.degree)));
        }
        self.sum_terms(&[])
    }

    /// `phi * psi`, of degree `i + j - n`.
    pub fn convolve(&self, other: &Self, mode: ConvMode) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let (i, j) = (self.degree, other.degree);
        if i + j < n {
            return Err(Error::Precondition(format!("degrees {i} + {j} below dimension {n}")));
        }
        let coef: S = mode.coefficient(n, i, j);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut bodies = a.bodies.clone();
                bodies.extend(b.bodies.iter().cloned());
                terms.push(Term { weight: a.weight.clone() * b.weight.clone() * coef.clone(), bodies });
            }
        }
        Self::new(n, i + j - n, terms)
    }

    /// `(g . phi)(K) = phi(g^{-1} K)`.
    pub fn group_action(&self, g: &LinearMap<S>) -> Result<Self> {
        check_dim(self.dim, g.dim())?;
        g.require_invertible()?;
        let inv_det = S::one() / g.det().abs();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(Term {
                    weight: t.weight.clone() * inv_det.clone(),
                    bodies: t.bodies.iter().map(|b| g.apply_polytope(b)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(self.dim, self.degree, terms)
    }

    /// `K -> phi(-K)`.
    pub fn reflect(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { weight: t.weight.clone(), bodies: t.bodies.iter().map(Polytope::reflect).collect() })
            .collect();
        Self::new(self.dim, self.degree, terms).expect("same shape")
    }

    /// `(phi_even, phi_odd)`.
    pub fn even_odd_split(&self) -> (Self, Self) {
        let half = S::one() / S::from_i64(2);
        let r = self.reflect();
        let even = self.add(&r).expect("same shape").scale(&half);
        let odd = self.sub(&r).expect("same shape").scale(&half);
        (even, odd)
    }

    /// `sum |w| V(B[i], bodies)`; an upper bound for the cone norm.
    pub fn cone_norm(&self, b: &ReferenceBody<S>) -> Result<S> {
        check_dim(self.dim, b.dim())?;
        let abs = Valuation {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|t| Term { weight: t.weight.abs(), bodies: t.bodies.clone() })
                .collect(),
        };
        abs.evaluate(&b.body)
    }

    /// `sum |w| prod_k r(A_k, B)`, an upper bound for the P-norm, where
    /// `r(A, B)` is the least `r` with `A ⊆ rB + t`.
    pub fn p_norm_upper(&self, b: &ReferenceBody<S>) -> Result<f64> {
        check_dim(self.dim, b.dim())?;
        let mut total = 0.0;
        for t in &self.terms {
            let mut prod = t.weight.to_f64().abs();
            for a in &t.bodies {
                prod *= containment_scale(&b.body, a)?.0;
            }
            total += prod;
        }
        Ok(total)
    }

    /// Ratio `|phi(Ls)| / V(Ls, B[n-i])`; `None` on a degenerate tuple.
    pub fn p_ratio(&self, b: &ReferenceBody<S>, ls: &[&Polytope<S>]) -> Result<Option<f64>> {
        let num = self.polarized_evaluate(ls)?.to_f64().abs();
        let mut tuple: Vec<&Polytope<S>> = ls.to_vec();
        tuple.extend(std::iter::repeat(&b.body).take(self.dim - self.degree));
        let den = mixed_volume(&tuple)?.to_f64();
        let scale = b.volume().to_f64().abs().max(f64::MIN_POSITIVE);
        Ok((den > 1e-12 * scale).then(|| num / den))
    }

    /// Sampled lower bound of the P-norm with a coordinate local search.
    pub fn p_norm_estimate<R: Rng + ?Sized>(
        &self,
        b: &ReferenceBody<S>,
        budget: usize,
        rng: &mut R,
    ) -> Result<PNormEstimate<S>> {
        if self.degree == 0 {
            return Err(Error::Precondition("P-norm needs degree >= 1".into()));
        }
        check_dim(self.dim, b.dim())?;
        let n = self.dim;
        let i = self.degree;
        let mut best: Option<(f64, Vec<Polytope<S>>)> = None;
        let mut samples = 0usize;
        let consider = |tuple: Vec<Polytope<S>>, best: &mut Option<(f64, Vec<Polytope<S>>)>| -> Result<()> {
            let refs: Vec<&Polytope<S>> = tuple.iter().collect();
            if let Some(r) = self.p_ratio(b, &refs)? {
                if best.as_ref().map_or(true, |(v, _)| r > *v) {
                    *best = Some((r, tuple));
                }
            }
            Ok(())
        };
        consider(vec![b.body.clone(); i], &mut best)?;
        samples += 1;
        let verts = b.body.vertices();
        while samples < budget.max(2) {
            let kind = samples % 3;
            let tuple: Vec<Polytope<S>> = (0..i)
                .map(|_| match kind {
                    0 => {
                        let a = &verts[rng.gen_range(0..verts.len())];
                        let c = &verts[rng.gen_range(0..verts.len())];
                        Polytope::segment(a.clone(), c.clone()).expect("same dim")
                    }
                    1 => random_polytope_inside(rng, &b.body, n + 1),
                    _ => random_polytope_inside(rng, &b.body, 2 * n + 2),
                })
                .collect();
            consider(tuple, &mut best)?;
            samples += 1;
        }
        let Some((mut value, mut tuple)) = best else {
            return Err(Error::Precondition("every sampled tuple was degenerate".into()));
        };
        // coordinate-wise local search on vertices of the best tuple
        let mut step = 0.25;
        for _ in 0..budget.min(200) {
            let k = rng.gen_range(0..tuple.len());
            let body = &tuple[k];
            let vi = rng.gen_range(0..body.num_vertices());
            let ci = rng.gen_range(0..n);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut pts = body.vertices().to_vec();
            pts[vi][ci] = pts[vi][ci].clone() + S::from_f64(sign * step);
            let Ok(moved) = Polytope::from_points(n, pts) else { continue };
            let mut cand = tuple.clone();
            cand[k] = moved;
            let refs: Vec<&Polytope<S>> = cand.iter().collect();
            if let Some(r) = self.p_ratio(b, &refs)? {
                if r > value {
                    value = r;
                    tuple = cand;
                    continue;
                }
            }
            step *= 0.97;
        }
        Ok(PNormEstimate { lower_bound: value, argmax: tuple, samples: budget })
    }

    /// Largest `eps` with `phi >= eps V(B[n-i], -)` certified from inradii:
    /// each body `A_k ⊇ s_k B + t` contributes `w prod s_k`.
    pub fn certify_strict_positivity(
        &self,
        b: &ReferenceBody<S>,
        probes: &[Vec<Polytope<S>>],
    ) -> Result<StrictPositivityCertificate<S>> {
        if !self.is_positive() {
            return Err(Error::Precondition("valuation has negative weights".into()));
        }
        let mut eps = 0.0;
        for t in &self.terms {
            let mut prod = t.weight.to_f64();
            for a in &t.bodies {
                if !a.is_full_dimensional() {
                    prod = 0.0;
                    break;
                }
                let (r, _) = containment_scale(a, &b.body)?;
                prod /= r;
            }
            eps += prod;
        }
        if self.degree == self.dim {
            eps = self.terms.iter().map(|t| t.weight.to_f64()).sum();
        }
        if eps <= 0.0 {
            return Err(Error::Precondition("no full-dimensional term; strict positivity not certified".into()));
        }
        let mut witness = Vec::new();
        for tuple in probes {
            let refs: Vec<&Polytope<S>> = tuple.iter().collect();
            if let Some(r) = self.p_ratio_signed(b, &refs)? {
                if r < eps * (1.0 - 1e-9) {
                    return Err(Error::Precondition(format!("probe ratio {r} below certified bound {eps}")));
                }
                witness.push((tuple.clone(), r));
            }
        }
        Ok(StrictPositivityCertificate { valuation: self.clone(), epsilon: eps, witness_samples: witness })
    }

    fn p_ratio_signed(&self, b: &ReferenceBody<S>, ls: &[&Polytope<S>]) -> Result<Option<f64>> {
        let num = self.polarized_evaluate(ls)?.to_f64();
        let mut tuple: Vec<&Polytope<S>> = ls.to_vec();
        tuple.extend(std::iter::repeat(&b.body).take(self.dim - self.degree));
        let den = mixed_volume(&tuple)?.to_f64();
        Ok((den > 1e-12 * b.volume().to_f64().abs()).then(|| num / den))
    }

    pub fn to_f64(&self) -> Valuation<f64> {
        Valuation {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|t| Term { weight: t.weight.to_f64(), bodies: t.bodies.iter().map(Polytope::to_f64).collect() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PNormEstimate<S: Scalar> {
    pub lower_bound: f64,
    pub argmax: Vec<Polytope<S>>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct StrictPositivityCertificate<S: Scalar> {
    pub valuation: Valuation<S>,
    pub epsilon: f64,
    pub witness_samples: Vec<(Vec<Polytope<S>>, f64)>,
}

/// `i! (n-i)! / n!`, the constant in `phi(K) psi(K) >= c' vol(K) (phi * psi)`
/// scaled to the mixed-volume normalization.
pub fn reverse_kt_constant(n: usize, i: usize) -> f64 {
    let f = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    f(i) * f(n - i) / f(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ball_polytope;
    use crate::scalar::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    fn cube(n: usize) -> Polytope<Rational> {
        Polytope::unit_cube(n)
    }

    fn seg(v: &[i64]) -> Polytope<Rational> {
        Polytope::segment_from_origin(v.iter().map(|&x| q(x, 1)).collect()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let phi = Valuation::mixed(2, vec![cube(2)]).unwrap();
        assert_eq!(phi.evaluate(&cube(2)).unwrap(), q(1, 1));
        let vol = Valuation::<Rational>::volume(3);
        let big = cube(3).scale(&q(2, 1));
        assert_eq!(vol.evaluate(&big).unwrap(), q(8, 1));
        let psi = Valuation::mixed(2, vec![seg(&[1, 2])]).unwrap();
        let combo = phi.scale(&q(2, 1)).sub(&psi).unwrap();
        let l = Polytope::from_points(2, vec![vec![q(0, 1), q(0, 1)], vec![q(3, 1), q(1, 1)], vec![q(1, 1), q(2, 1)]]).unwrap();
        assert_eq!(
            combo.evaluate(&l).unwrap(),
            q(2, 1) * phi.evaluate(&l).unwrap() - psi.evaluate(&l).unwrap()
        );
    }

    #[test]
    fn polarized_examples() {
        let phi = Valuation::mixed(3, vec![cube(3)]).unwrap();
        let (a, b) = (seg(&[1, 0, 0]), seg(&[0, 1, 0]));
        assert_eq!(phi.polarized_evaluate(&[&a, &b]).unwrap(), q(1, 6));
        assert_eq!(phi.polarized_evaluate(&[&b, &a]).unwrap(), q(1, 6));
        let k = cube(3).scale(&q(1, 2));
        assert_eq!(phi.polarized_evaluate(&[&k, &k]).unwrap(), phi.evaluate(&k).unwrap());
        assert!(phi.polarized_evaluate(&[&a]).is_err());
    }

    #[test]
    fn convolution_examples() {
        let phi = Valuation::mixed(2, vec![cube(2)]).unwrap();
        let vol = Valuation::<Rational>::volume(2);
        assert_eq!(vol.convolve(&phi, ConvMode::Unit).unwrap(), phi);
        for mode in [ConvMode::Unit, ConvMode::Paper] {
            let c = phi.convolve(&phi, mode).unwrap();
            assert_eq!(c.degree(), 0);
            assert_eq!(c.constant().unwrap(), q(1, 2));
        }
        let phi4 = Valuation::mixed(4, vec![cube(4)]).unwrap();
        let paper = phi4.convolve(&phi4, ConvMode::Paper).unwrap();
        let unit = phi4.convolve(&phi4, ConvMode::Unit).unwrap();
        assert_eq!(paper.evaluate(&cube(4)).unwrap(), q(3, 2));
        assert_eq!(unit.evaluate(&cube(4)).unwrap(), q(3, 4));
        let low = Valuation::mixed(3, vec![cube(3), cube(3)]).unwrap();
        assert!(low.convolve(&low, ConvMode::Unit).is_err());
    }

    #[test]
    fn action_examples() {
        let phi = Valuation::mixed(2, vec![seg(&[1, 0])]).unwrap();
        assert_eq!(phi.group_action(&LinearMap::identity(2)).unwrap(), phi);
        let g = LinearMap::diag(&[q(2, 1), q(1, 2)]);
        let moved = phi.group_action(&g).unwrap();
        assert_eq!(moved, Valuation::mixed(2, vec![seg(&[2, 0])]).unwrap());
        let k = cube(2);
        assert_eq!(moved.evaluate(&k).unwrap(), q(2, 1) * phi.evaluate(&k).unwrap());
        // homogeneity: (lambda Id) . phi = lambda^{-i} phi for degree i
        let phi3 = Valuation::mixed(3, vec![Polytope::standard_simplex(3)]).unwrap();
        let lam = q(3, 1);
        let scaled = phi3.group_action(&LinearMap::scalar(3, lam.clone())).unwrap();
        let l = cube(3);
        assert_eq!(scaled.evaluate(&l).unwrap(), phi3.evaluate(&l).unwrap() / (lam.clone() * lam));
        assert!(phi.group_action(&LinearMap::diag(&[q(1, 1), q(0, 1)])).is_err());
    }

    #[test]
    fn split_examples() {
        let sym = Valuation::mixed(2, vec![Polytope::<Rational>::cross_polytope(2)]).unwrap();
        let (e, o) = sym.even_odd_split();
        assert_eq!(e, sym);
        assert!(o.is_zero());
        let phi = Valuation::mixed(3, vec![Polytope::standard_simplex(3), cube(3)]).unwrap();
        let (e, o) = phi.even_odd_split();
        let k = Polytope::from_points(
            3,
            vec![vec![q(0, 1); 3], vec![q(2, 1), q(0, 1), q(0, 1)], vec![q(0, 1), q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1), q(3, 1)]],
        )
        .unwrap();
        let neg = k.reflect();
        let avg = (phi.evaluate(&k).unwrap() + phi.evaluate(&neg).unwrap()) / q(2, 1);
        assert_eq!(e.evaluate(&k).unwrap(), avg);
        assert_eq!(e.evaluate(&neg).unwrap(), avg);
        assert_eq!(e.add(&o).unwrap(), phi);
        let (e2, o2) = e.even_odd_split();
        assert_eq!(e2, e);
        assert!(o2.is_zero());
    }

    #[test]
    fn cone_norm_examples() {
        let b = ball_polytope::<f64>(2, 4).unwrap();
        let a = Polytope::<f64>::unit_cube(2);
        let phi = Valuation::mixed(2, vec![a.clone()]).unwrap();
        let vba = phi.evaluate(&b.body).unwrap();
        assert!((phi.cone_norm(&b).unwrap() - vba).abs() < 1e-12);
        let t = Term { weight: 1.0, bodies: vec![a.clone()] };
        let u = Term { weight: -1.0, bodies: vec![a.clone()] };
        // merged at construction: the cancelling representation is the zero valuation
        assert!(Valuation::new(2, 1, vec![t, u]).unwrap().is_zero());
        let c = a.translate(&[0.5, 0.0]).unwrap();
        let phi2 = Valuation::new(
            2,
            1,
            vec![Term { weight: 2.0, bodies: vec![a.clone()] }, Term { weight: -3.0, bodies: vec![c] }],
        )
        .unwrap();
        assert!((phi2.cone_norm(&b).unwrap() - 5.0 * vba).abs() < 1e-12);
    }

    #[test]
    fn p_norm_examples() {
        let b = ball_polytope::<f64>(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = Valuation::reference(&b, 1).unwrap();
        let est = phi.p_norm_estimate(&b, 40, &mut rng).unwrap();
        assert!((est.lower_bound - 1.0).abs() < 1e-12);
        let est2 = phi.scale(&2.0).p_norm_estimate(&b, 40, &mut rng).unwrap();
        assert!((est2.lower_bound - 2.0).abs() < 1e-12);
        let s = Polytope::segment_from_origin(vec![1.0, 0.0]).unwrap();
        let psi = Valuation::mixed(2, vec![s]).unwrap();
        let est = psi.p_norm_estimate(&b, 200, &mut rng).unwrap();
        assert!(est.lower_bound <= psi.p_norm_upper(&b).unwrap() + 1e-9);
        assert!(est.lower_bound > 0.5);
    }

    #[test]
    fn strict_positivity() {
        let b = ball_polytope::<f64>(2, 8).unwrap();
        let phi = Valuation::mixed(2, vec![Polytope::unit_cube(2)]).unwrap();
        let probes = vec![vec![Polytope::segment_from_origin(vec![1.0, 0.3]).unwrap()], vec![b.body.clone()]];
        let cert = phi.certify_strict_positivity(&b, &probes).unwrap();
        assert!(cert.epsilon > 0.0 && cert.epsilon <= 0.5 + 1e-9);
        let s = Valuation::mixed(2, vec![Polytope::segment_from_origin(vec![1.0, 0.0]).unwrap()]).unwrap();
        assert!(s.certify_strict_positivity(&b, &[]).is_err());
    }
}

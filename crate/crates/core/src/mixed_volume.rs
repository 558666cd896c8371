//! Mixed volumes by polarization, with fast paths for boxes and segments.

use std::any::Any;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{orthonormal_complement, Polytope};
use crate::linalg;
use crate::scalar::{binomial, dot, factorial, Scalar};

#[derive(Default)]
struct Memo {
    map: HashMap<String, Arc<dyn Any + Send + Sync>>,
    key_bytes: usize,
}

type Cache = RwLock<Memo>;

/// Total key bytes kept before the memo is flushed.
const CACHE_BYTES: usize = 64 << 20;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(Memo::default()))
}

fn cached<S: Scalar>(key: &str) -> Option<S> {
    let c = cache().read().ok()?;
    c.map.get(key).and_then(|v| v.downcast_ref::<S>().cloned())
}

fn store<S: Scalar>(key: String, value: &S) {
    if let Ok(mut c) = cache().write() {
        if c.key_bytes + key.len() > CACHE_BYTES {
            c.map.clear();
            c.key_bytes = 0;
        }
        c.key_bytes += key.len();
        c.map.insert(key, Arc::new(value.clone()));
    }
}

/// Drops all memoized volumes.
pub fn clear_cache() {
    if let Ok(mut c) = cache().write() {
        c.map.clear();
        c.key_bytes = 0;
    }
}

fn body_key<S: Scalar>(p: &Polytope<S>) -> String {
    let mut s = String::new();
    p.write_key(&mut s);
    s
}

fn check_tuple<S: Scalar>(bodies: &[&Polytope<S>]) -> Result<usize> {
    let n = bodies.first().map(|b| b.dim()).ok_or(Error::Arity { expected: 1, found: 0 })?;
    if bodies.len() != n {
        return Err(Error::Arity { expected: n, found: bodies.len() });
    }
    for b in bodies {
        check_dim(n, b.dim())?;
    }
    Ok(n)
}

/// Permanent by Ryser's formula.
pub fn permanent<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    if n == 0 {
        return S::one();
    }
    let mut total = S::zero();
    for mask in 1u64..(1u64 << n) {
        let mut prod = S::one();
        for row in m {
            let s = (0..n)
                .filter(|&j| mask >> j & 1 == 1)
                .fold(S::zero(), |acc, j| acc + row[j].clone());
            prod = prod * s;
            if prod.is_zero() {
                break;
            }
        }
        if (n - mask.count_ones() as usize) % 2 == 1 {
            total = total - prod;
        } else {
            total = total + prod;
        }
    }
    total
}

fn box_fast_path<S: Scalar>(bodies: &[&Polytope<S>]) -> Option<S> {
    let n = bodies.len();
    let mut edges = Vec::with_capacity(n);
    for b in bodies {
        let (lo, hi) = b.as_axis_box()?;
        edges.push(hi.iter().zip(&lo).map(|(h, l)| h.clone() - l.clone()).collect::<Vec<S>>());
    }
    Some(permanent(&edges) / factorial::<S>(n))
}

fn segment_fast_path<S: Scalar>(bodies: &[&Polytope<S>]) -> Option<S> {
    let n = bodies.len();
    let mut dirs = Vec::with_capacity(n);
    for b in bodies {
        let (a, c) = b.as_segment()?;
        dirs.push(c.iter().zip(a).map(|(x, y)| x.clone() - y.clone()).collect::<Vec<S>>());
    }
    Some(linalg::determinant(&dirs).abs() / factorial::<S>(n))
}

/// Groups identical bodies: `(body, multiplicity)` in canonical order.
fn group<'a, S: Scalar>(bodies: &[&'a Polytope<S>]) -> Vec<(&'a Polytope<S>, usize)> {
    let mut sorted: Vec<&Polytope<S>> = bodies.to_vec();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    let mut groups: Vec<(&Polytope<S>, usize)> = Vec::new();
    for b in sorted {
        match groups.last_mut() {
            Some((g, m)) if *g == b => *m += 1,
            _ => groups.push((b, 1)),
        }
    }
    groups
}

/// `vol(sum_j c_j K_j)` with memoization.
fn sum_volume<S: Scalar>(groups: &[(&Polytope<S>, usize)], keys: &[String], c: &[usize]) -> Result<S> {
    let n = groups[0].0.dim();
    let nonzero: Vec<usize> = (0..c.len()).filter(|&j| c[j] > 0).collect();
    if nonzero.len() == 1 {
        let j = nonzero[0];
        return Ok(groups[j].0.volume() * S::from_i64((c[j] as i64).pow(n as u32)));
    }
    let mut key = String::from("sum:");
    key.push_str(&format!("{:?}|", S::MODE));
    for &j in &nonzero {
        key.push_str(&c[j].to_string());
        key.push('*');
        key.push_str(&keys[j]);
        key.push('+');
    }
    if let Some(v) = cached::<S>(&key) {
        return Ok(v);
    }
    let mut acc: Option<Polytope<S>> = None;
    for &j in &nonzero {
        let term = groups[j].0.scale(&S::from_i64(c[j] as i64));
        acc = Some(match acc {
            None => term,
            Some(a) => a.minkowski_sum(&term)?,
        });
    }
    let v = acc.expect("nonempty").volume();
    store(key, &v);
    Ok(v)
}

fn polarize<S: Scalar>(groups: &[(&Polytope<S>, usize)], n: usize) -> Result<S> {
    let keys: Vec<String> = groups.iter().map(|(b, _)| body_key(b)).collect();
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for &(_, m) in groups {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..=m).map(move |k| {
                    let mut c2 = c.clone();
                    c2.push(k);
                    c2
                })
            })
            .collect();
    }
    combos.retain(|c| c.iter().any(|&k| k > 0));
    let terms: Vec<Result<S>> = combos
        .par_iter()
        .map(|c| {
            let v = sum_volume(groups, &keys, c)?;
            let mut coef = S::one();
            for (j, &k) in c.iter().enumerate() {
                coef = coef * binomial::<S>(groups[j].1, k);
            }
            let size: usize = c.iter().sum();
            let signed = if (n - size) % 2 == 1 { -coef } else { coef };
            Ok(signed * v)
        })
        .collect();
    let mut total = S::zero();
    for t in terms {
        total = total + t?;
    }
    Ok(total / factorial::<S>(n))
}

/// Mixed volume by polarization only (no fast paths), grouping repeated bodies.
pub fn mixed_volume_polarization<S: Scalar>(bodies: &[&Polytope<S>]) -> Result<S> {
    let n = check_tuple(bodies)?;
    polarize(&group(bodies), n)
}

/// `V(K_1, ..., K_n)`.
pub fn mixed_volume<S: Scalar>(bodies: &[&Polytope<S>]) -> Result<S> {
    let n = check_tuple(bodies)?;
    if bodies.iter().any(|b| b.num_vertices() == 1) {
        return Ok(S::zero());
    }
    if let Some(v) = box_fast_path(bodies) {
        return Ok(v);
    }
    if let Some(v) = segment_fast_path(bodies) {
        return Ok(v);
    }
    let groups = group(bodies);
    if groups.len() == 1 {
        return Ok(groups[0].0.volume());
    }
    let mut key = format!("mv:{:?}|", S::MODE);
    for (b, m) in &groups {
        key.push_str(&m.to_string());
        key.push('*');
        b.write_key(&mut key);
        key.push('|');
    }
    if let Some(v) = cached::<S>(&key) {
        return Ok(v);
    }
    let v = polarize(&groups, n)?;
    store(key, &v);
    Ok(v)
}

/// `V(K_1[m_1], ..., K_r[m_r])`.
pub fn mixed_volume_repeated<S: Scalar>(parts: &[(&Polytope<S>, usize)]) -> Result<S> {
    let tuple: Vec<&Polytope<S>> = parts.iter().flat_map(|&(b, m)| std::iter::repeat(b).take(m)).collect();
    mixed_volume(&tuple)
}

/// Coefficients of `vol(t_1 K_1 + ... + t_m K_m) = sum_a c_a t^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumePolynomial<S: Scalar> {
    pub dim: usize,
    pub num_bodies: usize,
    /// `(exponent, coefficient)` in lexicographically decreasing exponent order.
    pub terms: Vec<(Vec<usize>, S)>,
}

impl<S: Scalar> VolumePolynomial<S> {
    pub fn coefficient(&self, alpha: &[usize]) -> S {
        self.terms.iter().find(|(a, _)| a == alpha).map(|(_, c)| c.clone()).unwrap_or_else(S::zero)
    }

    pub fn evaluate(&self, t: &[S]) -> S {
        self.terms.iter().fold(S::zero(), |acc, (a, c)| acc + c.clone() * monomial(t, a))
    }

    /// `V(K_1[a_1], ..., K_m[a_m]) = a! / n! * c_a`.
    pub fn mixed_volume(&self, alpha: &[usize]) -> S {
        let afact = alpha.iter().fold(S::one(), |acc, &k| acc * factorial::<S>(k));
        self.coefficient(alpha) * afact / factorial::<S>(self.dim)
    }
}

fn monomial<S: Scalar>(t: &[S], a: &[usize]) -> S {
    t.iter().zip(a).fold(S::one(), |acc, (x, &k)| {
        (0..k).fold(acc, |p, _| p * x.clone())
    })
}

fn exponents(m: usize, total: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in exponents(m - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Recovers the volume polynomial by interpolation at the lattice points
/// `t = a + 1`, `|a| = n`; an independent route to mixed volumes.
pub fn volume_polynomial<S: Scalar>(bodies: &[&Polytope<S>]) -> Result<VolumePolynomial<S>> {
    let n = bodies.first().map(|b| b.dim()).ok_or(Error::Empty("no bodies".into()))?;
    for b in bodies {
        check_dim(n, b.dim())?;
    }
    let m = bodies.len();
    let alphas = exponents(m, n);
    let nodes: Vec<Vec<S>> = alphas
        .iter()
        .map(|a| a.iter().map(|&k| S::from_i64(k as i64 + 1)).collect())
        .collect();
    let values: Vec<Result<S>> = nodes
        .par_iter()
        .map(|t| {
            let mut acc: Option<Polytope<S>> = None;
            for (b, tj) in bodies.iter().zip(t) {
                let term = b.scale(tj);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.minkowski_sum(&term)?,
                });
            }
            Ok(acc.expect("m >= 1").volume())
        })
        .collect();
    let values: Vec<S> = values.into_iter().collect::<Result<_>>()?;
    let matrix: Vec<Vec<S>> = nodes.iter().map(|t| alphas.iter().map(|a| monomial(t, a)).collect()).collect();
    let coeffs = linalg::solve(&matrix, &values)
        .ok_or_else(|| Error::Precondition("singular interpolation grid".into()))?;
    Ok(VolumePolynomial { dim: n, num_bodies: m, terms: alphas.into_iter().zip(coeffs).collect() })
}

/// `V(K,L,rest)^2 - V(K,K,rest) V(L,L,rest)`, nonnegative by Alexandrov-Fenchel.
pub fn af_margin<S: Scalar>(k: &Polytope<S>, l: &Polytope<S>, rest: &[&Polytope<S>]) -> Result<S> {
    let with = |a: &Polytope<S>, b: &Polytope<S>| -> Result<S> {
        let mut t: Vec<&Polytope<S>> = vec![a, b];
        t.extend_from_slice(rest);
        mixed_volume(&t)
    };
    let kl = with(k, l)?;
    Ok(kl.clone() * kl - with(k, k)? * with(l, l)?)
}

fn orthonormalize<S: Scalar>(basis: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let mut out: Vec<Vec<S>> = Vec::new();
    for b in basis {
        let mut r = b.clone();
        for q in &out {
            let c = dot(&r, q);
            for (rj, qj) in r.iter_mut().zip(q) {
                *rj = rj.clone() - c.clone() * qj.clone();
            }
        }
        let n2 = dot(&r, &r);
        if n2.is_zero_tol(1e-2) {
            return Err(Error::Precondition("subspace basis is linearly dependent".into()));
        }
        let len = n2
            .sqrt_exact()
            .ok_or_else(|| Error::NotRepresentable("subspace basis norm is irrational".into()))?;
        out.push(r.into_iter().map(|x| x / len.clone()).collect());
    }
    Ok(out)
}

/// `C(n,k) V(L_1..L_k, K_1..K_{n-k}) - V_H(L) V_{H^⊥}(p(K))` where `H = span(h)`
/// has dimension `k` and every `L_i` is parallel to `H`.
pub fn reduction_formula_residual<S: Scalar>(
    ls: &[&Polytope<S>],
    ks: &[&Polytope<S>],
    h: &[Vec<S>],
) -> Result<S> {
    let k = h.len();
    if ls.len() != k {
        return Err(Error::Arity { expected: k, found: ls.len() });
    }
    let n = ls.first().or(ks.first()).map(|b| b.dim()).ok_or(Error::Empty("no bodies".into()))?;
    if k == 0 || k > n || ls.len() + ks.len() != n {
        return Err(Error::Arity { expected: n, found: ls.len() + ks.len() });
    }
    let q = orthonormalize(h)?;
    let comp = orthonormal_complement(h, n)?;
    let mut in_h: Vec<Polytope<S>> = Vec::with_capacity(k);
    for l in ls {
        check_dim(n, l.dim())?;
        let base = &l.vertices()[0];
        let scale = l.hull().extent.max(1.0);
        for v in l.vertices() {
            let d: Vec<S> = v.iter().zip(base).map(|(a, b)| a.clone() - b.clone()).collect();
            if comp.iter().any(|c| !dot(&d, c).is_zero_tol(scale)) {
                return Err(Error::Precondition("body not contained in the subspace".into()));
            }
        }
        let coords = l.vertices().iter().map(|v| q.iter().map(|b| dot(v, b)).collect()).collect();
        in_h.push(Polytope::from_points(k, coords)?);
    }
    let mut full: Vec<&Polytope<S>> = ls.to_vec();
    full.extend_from_slice(ks);
    let lhs = binomial::<S>(n, k) * mixed_volume(&full)?;
    let refs: Vec<&Polytope<S>> = in_h.iter().collect();
    let vh = mixed_volume(&refs)?;
    let vperp = if k == n {
        S::one()
    } else {
        let projected: Vec<Polytope<S>> = ks
            .iter()
            .map(|b| {
                let pts = b.vertices().iter().map(|v| comp.iter().map(|c| dot(v, c)).collect()).collect();
                Polytope::from_points(n - k, pts)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Polytope<S>> = projected.iter().collect();
        mixed_volume(&refs)?
    };
    Ok(lhs - vh * vperp)
}

/// `r_exact = min { r : M ⊆ rK + t for some t }` and `r_bound = n V(K[n-1], M) / vol(K)`.
pub fn containment_scale<S: Scalar>(k: &Polytope<S>, m: &Polytope<S>) -> Result<(f64, S)> {
    check_dim(k.dim(), m.dim())?;
    let n = k.dim();
    if !k.is_full_dimensional() {
        return Err(Error::Precondition("containing body must be full-dimensional".into()));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let r = lp.add_var(1.0, (0.0, f64::INFINITY));
    let t: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for f in &k.hull().facets {
        let a: Vec<f64> = f.normal.iter().map(Scalar::to_f64).collect();
        let len = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a: Vec<f64> = a.iter().map(|x| x / len).collect();
        let b = f.offset.to_f64() / len;
        let hm = m
            .vertices()
            .iter()
            .map(|v| v.iter().zip(&a).map(|(x, y)| x.to_f64() * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        // h_M(a) <= r b + <t, a>
        let mut row = vec![(r, -b)];
        row.extend(t.iter().zip(&a).map(|(&v, &c)| (v, -c)));
        lp.add_constraint(&row[..], ComparisonOp::Le, -hm);
    }
    let sol = lp.solve().map_err(|e| Error::NoConvergence(format!("containment program: {e}")))?;
    let mut tuple: Vec<&Polytope<S>> = vec![k; n - 1];
    tuple.push(m);
    let bound = S::from_i64(n as i64) * mixed_volume(&tuple)? / k.volume();
    Ok((sol[r], bound))
}

/// True when every body is an axis-aligned box or every body is a segment.
pub fn has_fast_path<S: Scalar>(bodies: &[&Polytope<S>]) -> bool {
    bodies.iter().all(|b| b.as_axis_box().is_some()) || bodies.iter().all(|b| b.as_segment().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random::random_full_polytope;
    use crate::scalar::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    fn seg(v: &[i64]) -> Polytope<Rational> {
        Polytope::segment_from_origin(v.iter().map(|&x| q(x, 1)).collect()).unwrap()
    }

    #[test]
    fn documented_values() {
        let cube = Polytope::<Rational>::unit_cube(3);
        assert_eq!(mixed_volume(&[&cube, &cube, &cube]).unwrap(), q(1, 1));
        let (a, b) = (seg(&[1, 0]), seg(&[0, 1]));
        assert_eq!(mixed_volume(&[&a, &b]).unwrap(), q(1, 2));
        assert_eq!(mixed_volume_polarization(&[&a, &b]).unwrap(), q(1, 2));
        let b1 = Polytope::axis_box(&[q(0, 1), q(0, 1)], &[q(1, 1), q(2, 1)]).unwrap();
        let b2 = Polytope::axis_box(&[q(0, 1), q(0, 1)], &[q(3, 1), q(4, 1)]).unwrap();
        assert_eq!(mixed_volume(&[&b1, &b2]).unwrap(), q(5, 1));
        assert_eq!(mixed_volume_polarization(&[&b1, &b2]).unwrap(), q(5, 1));
    }

    #[test]
    fn polynomial_examples() {
        let sq = Polytope::<Rational>::unit_cube(2);
        let p = volume_polynomial(&[&sq]).unwrap();
        assert_eq!(p.terms, vec![(vec![2], q(1, 1))]);
        let p = volume_polynomial(&[&sq, &sq]).unwrap();
        assert_eq!(p.coefficient(&[2, 0]), q(1, 1));
        assert_eq!(p.coefficient(&[1, 1]), q(2, 1));
        assert_eq!(p.coefficient(&[0, 2]), q(1, 1));
        let s = seg(&[1, 0]);
        let p = volume_polynomial(&[&sq, &s]).unwrap();
        assert_eq!(p.coefficient(&[1, 1]), q(1, 1));
        assert_eq!(p.mixed_volume(&[1, 1]), q(1, 2));
    }

    #[test]
    fn af_examples() {
        let sq = Polytope::<Rational>::unit_cube(2);
        let s = seg(&[1, 0]);
        assert_eq!(af_margin(&sq, &sq, &[]).unwrap(), q(0, 1));
        assert_eq!(af_margin(&sq, &s, &[]).unwrap(), q(1, 4));
    }

    #[test]
    fn reduction_examples() {
        let e1 = vec![q(1, 1), q(0, 1)];
        let sq = Polytope::<Rational>::unit_cube(2);
        let s = seg(&[1, 0]);
        assert_eq!(reduction_formula_residual(&[&s], &[&sq], &[e1]).unwrap(), q(0, 1));
        let h = vec![vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(0, 1), q(1, 1), q(0, 1)]];
        let flat = Polytope::axis_box(&vec![q(0, 1); 3], &[q(1, 1), q(1, 1), q(0, 1)]).unwrap();
        let cube = Polytope::<Rational>::unit_cube(3);
        assert_eq!(mixed_volume(&[&flat, &flat, &cube]).unwrap(), q(1, 3));
        assert_eq!(reduction_formula_residual(&[&flat, &flat], &[&cube], &h).unwrap(), q(0, 1));
        let inside = seg(&[1, 1, 0]);
        assert_eq!(reduction_formula_residual(&[&flat, &flat], &[&inside], &h).unwrap(), q(0, 1));
        let off = seg(&[0, 0, 1]);
        assert!(reduction_formula_residual(&[&off, &flat], &[&cube], &h).is_err());
    }

    #[test]
    fn containment_examples() {
        let k = Polytope::<Rational>::unit_cube(2);
        let (r, b) = containment_scale(&k, &k).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert_eq!(b, q(2, 1));
        let m = k.scale(&q(2, 1));
        let (r, b) = containment_scale(&k, &m).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
        assert_eq!(b, q(4, 1));
    }

    #[test]
    fn float_and_exact_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=3 {
            let bodies: Vec<Polytope<Rational>> = (0..n).map(|_| random_full_polytope(&mut rng, n, n + 2)).collect();
            let refs: Vec<&Polytope<Rational>> = bodies.iter().collect();
            let exact = mixed_volume(&refs).unwrap();
            let fl: Vec<Polytope<f64>> = bodies.iter().map(|b| b.to_f64()).collect();
            let frefs: Vec<&Polytope<f64>> = fl.iter().collect();
            let approx = mixed_volume(&frefs).unwrap();
            assert!((exact.to_f64() - approx).abs() <= 1e-9 * exact.to_f64().abs().max(1.0));
        }
    }
}

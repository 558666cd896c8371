//! Convex hull of a finite point set in any dimension.
//!
//! Incremental beneath-beyond construction over a simplicial boundary. The
//! affine hull is found first; lower-dimensional inputs are hulled inside
//! their affine span and the result is lifted back. Exact in rational mode.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::linalg;
use crate::scalar::{self, dot, factorial, sub, Scalar};

/// Inequality `<normal, x> <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<S: Scalar> {
    pub normal: Vec<S>,
    pub offset: S,
}

impl<S: Scalar> Halfspace<S> {
    /// `<normal, x> - offset`; positive means outside.
    pub fn excess(&self, x: &[S]) -> S {
        dot(&self.normal, x) - self.offset.clone()
    }
}

#[derive(Debug, Clone)]
pub struct HullData<S: Scalar> {
    pub affine_dim: usize,
    /// Indices (into the hulled point list) of the extreme points.
    pub extreme: Vec<usize>,
    /// Equations `<a, x> = b` cutting out the affine hull (empty when full-dimensional).
    pub equalities: Vec<Halfspace<S>>,
    /// Facet inequalities, one per geometric facet (relative facets when lower-dimensional).
    pub facets: Vec<Halfspace<S>>,
    /// Ambient volume; zero unless full-dimensional.
    pub volume: S,
    /// Extent of the point set, the scale for float tolerances.
    pub extent: f64,
}

impl<S: Scalar> HullData<S> {
    pub fn contains(&self, x: &[S]) -> bool {
        let s = self.extent.max(1.0);
        self.equalities.iter().all(|h| h.excess(x).is_zero_tol(s))
            && self
                .facets
                .iter()
                .all(|h| h.excess(x).sign_tol(s) != Ordering::Greater)
    }
}

pub(crate) fn extent<S: Scalar>(points: &[Vec<S>]) -> f64 {
    let n = points.first().map_or(0, Vec::len);
    let mut e = 0.0f64;
    for k in 0..n {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let v = p[k].to_f64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        e = e.max(hi - lo);
    }
    e
}

/// Hull of `points` (all of dimension `n`, at least one point, no duplicates required).
pub fn convex_hull<S: Scalar>(points: &[Vec<S>], n: usize) -> HullData<S> {
    assert!(!points.is_empty(), "hull of an empty point set");
    let ext = extent(points);
    let tol_scale = ext.max(f64::MIN_POSITIVE);

    // Greedy affine basis: orthogonal (unnormalized) directions q_k.
    let p0 = points[0].clone();
    let mut basis_idx = vec![0usize];
    let mut q: Vec<Vec<S>> = Vec::new();
    let mut qq: Vec<S> = Vec::new();
    loop {
        if q.len() == n {
            break;
        }
        let mut best: Option<(usize, f64, Vec<S>)> = None;
        for (i, p) in points.iter().enumerate() {
            let mut r = sub(p, &p0);
            for (qk, nk) in q.iter().zip(&qq) {
                let c = dot(&r, qk) / nk.clone();
                for (rj, qj) in r.iter_mut().zip(qk) {
                    *rj = rj.clone() - c.clone() * qj.clone();
                }
            }
            let norm2 = dot(&r, &r);
            if norm2.is_zero_tol(tol_scale * tol_scale) {
                continue;
            }
            let m = norm2.to_f64();
            if best.as_ref().map_or(true, |(_, b, _)| m > *b) {
                best = Some((i, m, r));
            }
        }
        let Some((i, _, r)) = best else { break };
        // a residual below the float tolerance in length is not a new direction
        if S::MODE == scalar::ArithmeticMode::Float && r.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt() <= 1e-9 * tol_scale {
            break;
        }
        basis_idx.push(i);
        qq.push(dot(&r, &r));
        q.push(r);
    }
    let d = q.len();

    if d == n {
        let (extreme, facets, volume) = full_hull(points, &basis_idx, n, ext);
        return HullData {
            affine_dim: n,
            extreme,
            equalities: Vec::new(),
            facets,
            volume,
            extent: ext,
        };
    }

    // Orthogonal complement of span(q) for the equalities.
    let mut comp: Vec<Vec<S>> = Vec::new();
    let mut comp_n: Vec<S> = Vec::new();
    for j in 0..n {
        let mut r: Vec<S> = (0..n).map(|k| if k == j { S::one() } else { S::zero() }).collect();
        for (qk, nk) in q.iter().zip(&qq).chain(comp.iter().zip(&comp_n)) {
            let c = dot(&r, qk) / nk.clone();
            for (rj, qj) in r.iter_mut().zip(qk) {
                *rj = rj.clone() - c.clone() * qj.clone();
            }
        }
        let norm2 = dot(&r, &r);
        if norm2.is_zero_tol(1e-2 / scalar::FLOAT_TOL) {
            continue;
        }
        comp_n.push(norm2);
        comp.push(r);
        if comp.len() == n - d {
            break;
        }
    }
    let equalities: Vec<Halfspace<S>> = comp
        .into_iter()
        .map(|r| {
            let b = dot(&r, &p0);
            Halfspace { normal: r, offset: b }
        })
        .collect();

    // Affine coordinates c_k(x) = <x - p0, q_k> / |q_k|^2.
    let coords: Vec<Vec<S>> = points
        .iter()
        .map(|p| {
            let r = sub(p, &p0);
            q.iter().zip(&qq).map(|(qk, nk)| dot(&r, qk) / nk.clone()).collect()
        })
        .collect();
    let lift = |h: Halfspace<S>| -> Halfspace<S> {
        let mut a = vec![S::zero(); n];
        for ((alpha, qk), nk) in h.normal.iter().zip(&q).zip(&qq) {
            let f = alpha.clone() / nk.clone();
            for (aj, qj) in a.iter_mut().zip(qk) {
                *aj = aj.clone() + f.clone() * qj.clone();
            }
        }
        let b = h.offset + dot(&a, &p0);
        Halfspace { normal: a, offset: b }
    };

    let (extreme, facets) = match d {
        0 => (vec![0], Vec::new()),
        1 => {
            let (mut lo, mut hi) = (0usize, 0usize);
            for (i, c) in coords.iter().enumerate() {
                if c[0] < coords[lo][0] {
                    lo = i;
                }
                if c[0] > coords[hi][0] {
                    hi = i;
                }
            }
            let facets = vec![
                lift(Halfspace { normal: vec![S::one()], offset: coords[hi][0].clone() }),
                lift(Halfspace { normal: vec![-S::one()], offset: -coords[lo][0].clone() }),
            ];
            (vec![lo, hi], facets)
        }
        _ => {
            let cext = extent(&coords);
            let (extreme, facets, _) = full_hull(&coords, &basis_idx, d, cext);
            (extreme, facets.into_iter().map(lift).collect())
        }
    };
    HullData {
        affine_dim: d,
        extreme,
        equalities,
        facets,
        volume: S::zero(),
        extent: ext,
    }
}

struct SimplexFacet<S: Scalar> {
    verts: Vec<usize>,
    plane: Halfspace<S>,
    alive: bool,
}

fn make_facet<S: Scalar>(
    points: &[Vec<S>],
    verts: Vec<usize>,
    interior: &[S],
    d: usize,
) -> Option<SimplexFacet<S>> {
    let v0 = &points[verts[0]];
    let rows: Vec<Vec<S>> = verts[1..].iter().map(|&v| sub(&points[v], v0)).collect();
    let mut normal = linalg::normal_vector(&rows, d)?;
    if S::MODE == scalar::ArithmeticMode::Float {
        let len = normal.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
        normal = normal.into_iter().map(|x| x / S::from_f64(len)).collect();
    }
    let mut offset = dot(&normal, v0);
    if dot(&normal, interior) > offset {
        normal = normal.into_iter().map(|x| -x).collect();
        offset = -offset;
    }
    Some(SimplexFacet { verts, plane: Halfspace { normal, offset }, alive: true })
}

/// Hull of a full-dimensional point set in `R^d`; `simplex` holds `d+1`
/// affinely independent indices.
fn full_hull<S: Scalar>(
    points: &[Vec<S>],
    simplex: &[usize],
    d: usize,
    ext: f64,
) -> (Vec<usize>, Vec<Halfspace<S>>, S) {
    let tol_scale = ext.max(f64::MIN_POSITIVE);
    let inv = S::one() / S::from_i64((d + 1) as i64);
    let mut interior = vec![S::zero(); d];
    for &i in simplex {
        for (c, x) in interior.iter_mut().zip(&points[i]) {
            *c = c.clone() + x.clone() * inv.clone();
        }
    }

    let mut facets: Vec<SimplexFacet<S>> = Vec::new();
    for skip in 0..simplex.len() {
        let mut verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, &v)| v)
            .collect();
        verts.sort_unstable();
        if let Some(f) = make_facet(points, verts, &interior, d) {
            facets.push(f);
        }
    }

    let mut in_simplex = vec![false; points.len()];
    for &i in simplex {
        in_simplex[i] = true;
    }
    // farthest points first keeps intermediate hulls small
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| !in_simplex[i]).collect();
    let dist: Vec<f64> = points
        .iter()
        .map(|p| p.iter().zip(&interior).map(|(a, b)| (a.to_f64() - b.to_f64()).powi(2)).sum())
        .collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));

    for &p in &order {
        let x = &points[p];
        let visible: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.plane.excess(x).sign_tol(tol_scale) == Ordering::Greater)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for &fi in &visible {
            facets[fi].alive = false;
            let verts = facets[fi].verts.clone();
            for skip in 0..verts.len() {
                let ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut horizon: Vec<Vec<usize>> =
            ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
        horizon.sort();
        for mut ridge in horizon {
            ridge.push(p);
            ridge.sort_unstable();
            if let Some(f) = make_facet(points, ridge, &interior, d) {
                facets.push(f);
            }
        }
        if facets.len() > 64 && facets.iter().filter(|f| !f.alive).count() * 2 > facets.len() {
            facets.retain(|f| f.alive);
        }
    }
    facets.retain(|f| f.alive);

    // Volume: cones from the interior point over boundary simplices.
    let mut volume = S::zero();
    for f in &facets {
        let rows: Vec<Vec<S>> = f.verts.iter().map(|&v| sub(&points[v], &interior)).collect();
        volume = volume + linalg::determinant(&rows).abs();
    }
    volume = volume / factorial::<S>(d);

    // Merge coplanar simplices into geometric facets.
    let mut planes: Vec<Halfspace<S>> = Vec::new();
    for f in &facets {
        let h = canonical_plane(&f.plane);
        let dup = planes.iter().any(|g| same_plane(g, &h, tol_scale));
        if !dup {
            planes.push(h);
        }
    }

    // A boundary point is a vertex iff its incident facet normals span R^d.
    let mut candidates: Vec<usize> = facets.iter().flat_map(|f| f.verts.iter().copied()).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let extreme: Vec<usize> = candidates
        .into_iter()
        .filter(|&v| {
            let normals: Vec<Vec<S>> = planes
                .iter()
                .filter(|h| h.excess(&points[v]).is_zero_tol(tol_scale))
                .map(|h| h.normal.clone())
                .collect();
            normals.len() >= d && linalg::rank(&normals, 1e-3 / scalar::FLOAT_TOL * 1e-6) == d
        })
        .collect();
    (extreme, planes, volume)
}

fn canonical_plane<S: Scalar>(h: &Halfspace<S>) -> Halfspace<S> {
    match S::MODE {
        scalar::ArithmeticMode::Float => h.clone(),
        scalar::ArithmeticMode::Exact => {
            let lead = h
                .normal
                .iter()
                .find(|x| !x.is_zero())
                .map(|x| x.abs())
                .unwrap_or_else(S::one);
            Halfspace {
                normal: h.normal.iter().map(|x| x.clone() / lead.clone()).collect(),
                offset: h.offset.clone() / lead,
            }
        }
    }
}

fn same_plane<S: Scalar>(a: &Halfspace<S>, b: &Halfspace<S>, scale: f64) -> bool {
    match S::MODE {
        scalar::ArithmeticMode::Exact => a == b,
        scalar::ArithmeticMode::Float => {
            let dn: f64 = a
                .normal
                .iter()
                .zip(&b.normal)
                .map(|(x, y)| (x.to_f64() - y.to_f64()).powi(2))
                .sum::<f64>()
                .sqrt();
            dn <= 1e-9 && (a.offset.to_f64() - b.offset.to_f64()).abs() <= 1e-9 * scale.max(1e-300)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn pts(v: &[&[i64]]) -> Vec<Vec<Rational>> {
        v.iter().map(|p| p.iter().map(|&x| Rational::from_i64(x)).collect()).collect()
    }

    #[test]
    fn square_with_interior_and_edge_points() {
        let p = pts(&[&[0, 0], &[2, 0], &[2, 2], &[0, 2], &[1, 1], &[1, 0], &[2, 1]]);
        let h = convex_hull(&p, 2);
        assert_eq!(h.affine_dim, 2);
        let mut e = h.extreme.clone();
        e.sort();
        assert_eq!(e, vec![0, 1, 2, 3]);
        assert_eq!(h.facets.len(), 4);
        assert_eq!(h.volume, Rational::from_i64(4));
    }

    #[test]
    fn collinear_points_in_space() {
        let p = pts(&[&[0, 0, 0], &[1, 1, 1], &[3, 3, 3], &[2, 2, 2]]);
        let h = convex_hull(&p, 3);
        assert_eq!(h.affine_dim, 1);
        let mut e = h.extreme.clone();
        e.sort();
        assert_eq!(e, vec![0, 2]);
        assert_eq!(h.equalities.len(), 2);
        assert!(h.contains(&vec![Rational::from_ratio(1, 2); 3]));
        assert!(!h.contains(&vec![Rational::from_i64(4); 3]));
    }

    #[test]
    fn cube_in_float() {
        let mut p = Vec::new();
        for m in 0..8 {
            p.push(vec![(m & 1) as f64, ((m >> 1) & 1) as f64, ((m >> 2) & 1) as f64]);
        }
        p.push(vec![0.5, 0.5, 0.5]);
        p.push(vec![0.5, 0.5, 1.0]);
        let h = convex_hull(&p, 3);
        assert_eq!(h.extreme.len(), 8);
        assert_eq!(h.facets.len(), 6);
        assert!((h.volume - 1.0).abs() < 1e-14);
    }

    #[test]
    fn planar_polygon_in_space() {
        let p = pts(&[&[0, 0, 5], &[1, 0, 5], &[0, 1, 5], &[1, 1, 5]]);
        let h = convex_hull(&p, 3);
        assert_eq!(h.affine_dim, 2);
        assert_eq!(h.extreme.len(), 4);
        assert_eq!(h.facets.len(), 4);
        assert_eq!(h.volume, Rational::from_i64(0));
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, Error, Result};
use crate::scalar::{self, add, dot, lex_cmp, Rational, Scalar};

use super::hull::{self, HullData};

/// A convex polytope stored by its extreme points.
///
/// Vertices are kept in lexicographic order with no redundant points, so two
/// polytopes are equal exactly when their vertex lists are equal. Facet data
/// is computed on first use and shared between clones.
#[derive(Clone)]
pub struct Polytope<S: Scalar = f64> {
    dim: usize,
    vertices: Vec<Vec<S>>,
    hull: Arc<OnceLock<HullData<S>>>,
}

impl<S: Scalar> fmt::Debug for Polytope<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Polytope")
            .field("dim", &self.dim)
            .field("vertices", &self.vertices)
            .finish()
    }
}

/// Serializes as `{"dim": n, "vertices": [...]}` with exact values as `"p/q"` strings.
impl<S: Scalar> serde::Serialize for Polytope<S> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        use serde::ser::SerializeStruct;
        let verts: Vec<Vec<serde_json::Value>> =
            self.vertices.iter().map(|v| v.iter().map(Scalar::to_json).collect()).collect();
        let mut st = s.serialize_struct("Polytope", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("vertices", &verts)?;
        st.end()
    }
}

impl<S: Scalar> PartialEq for Polytope<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }
}

impl<S: Scalar> Polytope<S> {
    /// Convex hull of a point cloud.
    pub fn from_points(dim: usize, points: Vec<Vec<S>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::Empty("polytope needs at least one point".into()));
        }
        for p in &points {
            check_dim(dim, p.len())?;
            if S::MODE == scalar::ArithmeticMode::Float && p.iter().any(|x| !x.to_f64().is_finite()) {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
        }
        let mut pts = points;
        pts.sort_by(|a, b| lex_cmp(a, b));
        pts.dedup();
        let h = hull::convex_hull(&pts, dim);
        let mut keep: Vec<usize> = h.extreme.clone();
        keep.sort_unstable();
        let mut verts: Vec<Vec<S>> = keep.into_iter().map(|i| pts[i].clone()).collect();
        if S::MODE == scalar::ArithmeticMode::Float && verts.len() > 1 {
            let tol = 1e-12 * h.extent.max(f64::MIN_POSITIVE);
            let mut merged: Vec<Vec<S>> = Vec::with_capacity(verts.len());
            for v in verts {
                let close = merged.iter().any(|w| {
                    v.iter().zip(w).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).fold(0.0, f64::max) <= tol
                });
                if !close {
                    merged.push(v);
                }
            }
            verts = merged;
        }
        let k = verts.len();
        let cell = OnceLock::new();
        let _ = cell.set(HullData { extreme: (0..k).collect(), ..h });
        Ok(Polytope { dim, vertices: verts, hull: Arc::new(cell) })
    }

    /// Builds from points already known to be the extreme points (any order).
    pub(crate) fn from_extreme_unchecked(dim: usize, mut vertices: Vec<Vec<S>>) -> Self {
        vertices.sort_by(|a, b| lex_cmp(a, b));
        vertices.dedup();
        Polytope { dim, vertices, hull: Arc::new(OnceLock::new()) }
    }

    pub fn point(x: Vec<S>) -> Self {
        let dim = x.len();
        Self::from_extreme_unchecked(dim, vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Self::point(vec![S::zero(); dim])
    }

    pub fn segment(a: Vec<S>, b: Vec<S>) -> Result<Self> {
        let dim = a.len();
        Self::from_points(dim, vec![a, b])
    }

    /// Segment `[0, v]`.
    pub fn segment_from_origin(v: Vec<S>) -> Result<Self> {
        let z = vec![S::zero(); v.len()];
        Self::segment(z, v)
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn axis_box(lo: &[S], hi: &[S]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let n = lo.len();
        if n == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            return Err(Error::Precondition("box bounds out of order".into()));
        }
        let mut pts = Vec::with_capacity(1 << n);
        for mask in 0u64..(1u64 << n) {
            pts.push(
                (0..n)
                    .map(|k| if mask >> k & 1 == 1 { hi[k].clone() } else { lo[k].clone() })
                    .collect(),
            );
        }
        if lo.iter().zip(hi).all(|(a, b)| a < b) {
            Ok(Self::from_extreme_unchecked(n, pts))
        } else {
            Self::from_points(n, pts)
        }
    }

    /// `[0,1]^n`.
    pub fn unit_cube(n: usize) -> Self {
        Self::axis_box(&vec![S::zero(); n], &vec![S::one(); n]).expect("valid box")
    }

    /// `conv{0, e_1, ..., e_n}`.
    pub fn standard_simplex(n: usize) -> Self {
        let mut pts = vec![vec![S::zero(); n]];
        for k in 0..n {
            let mut e = vec![S::zero(); n];
            e[k] = S::one();
            pts.push(e);
        }
        Self::from_extreme_unchecked(n, pts)
    }

    /// `conv{±e_1, ..., ±e_n}`.
    pub fn cross_polytope(n: usize) -> Self {
        let mut pts = Vec::new();
        for k in 0..n {
            for s in [S::one(), -S::one()] {
                let mut e = vec![S::zero(); n];
                e[k] = s;
                pts.push(e);
            }
        }
        Self::from_extreme_unchecked(n, pts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn hull(&self) -> &HullData<S> {
        self.hull.get_or_init(|| hull::convex_hull(&self.vertices, self.dim))
    }

    pub fn affine_dim(&self) -> usize {
        self.hull().affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim() == self.dim
    }

    /// Lebesgue volume; zero for lower-dimensional bodies.
    pub fn volume(&self) -> S {
        if self.vertices.len() <= self.dim {
            return S::zero();
        }
        self.hull().volume.clone()
    }

    /// `h_P(u) = max <v, u>`.
    pub fn support(&self, u: &[S]) -> S {
        let mut it = self.vertices.iter().map(|v| dot(v, u));
        let first = it.next().expect("nonempty");
        it.fold(first, |m, x| if x > m { x } else { m })
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dim && self.hull().contains(x)
    }

    pub fn translate(&self, t: &[S]) -> Result<Self> {
        check_dim(self.dim, t.len())?;
        Ok(Self::from_extreme_unchecked(self.dim, self.vertices.iter().map(|v| add(v, t)).collect()))
    }

    /// `s P`; any real `s`, the zero factor collapses to the origin.
    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::origin(self.dim);
        }
        Self::from_extreme_unchecked(self.dim, self.vertices.iter().map(|v| scalar::scale(v, s)).collect())
    }

    /// `-P`.
    pub fn reflect(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        if other.vertices.len() == 1 {
            return self.translate(&other.vertices[0]);
        }
        if self.vertices.len() == 1 {
            return other.translate(&self.vertices[0]);
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(add(a, b));
            }
        }
        Self::from_points(self.dim, pts)
    }

    /// Average of the vertices (not the center of mass).
    pub fn vertex_centroid(&self) -> Vec<S> {
        let k = S::from_i64(self.vertices.len() as i64);
        let mut c = vec![S::zero(); self.dim];
        for v in &self.vertices {
            for (ci, x) in c.iter_mut().zip(v) {
                *ci = ci.clone() + x.clone();
            }
        }
        c.into_iter().map(|x| x / k.clone()).collect()
    }

    /// True when the body equals `-P`.
    pub fn is_origin_symmetric(&self) -> bool {
        let r = self.reflect();
        match S::MODE {
            scalar::ArithmeticMode::Exact => r == *self,
            scalar::ArithmeticMode::Float => {
                let tol = 1e-9 * self.hull().extent.max(1.0);
                self.vertices.len() == r.vertices.len()
                    && self.vertices.iter().all(|v| {
                        r.vertices.iter().any(|w| {
                            v.iter().zip(w).all(|(a, b)| (a.to_f64() - b.to_f64()).abs() <= tol)
                        })
                    })
            }
        }
    }

    /// Axis-aligned bounds when the body is an axis-aligned box (possibly degenerate).
    pub fn as_axis_box(&self) -> Option<(Vec<S>, Vec<S>)> {
        let n = self.dim;
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            for k in 0..n {
                if v[k] < lo[k] {
                    lo[k] = v[k].clone();
                }
                if v[k] > hi[k] {
                    hi[k] = v[k].clone();
                }
            }
        }
        let free = (0..n).filter(|&k| lo[k] != hi[k]).count();
        if self.vertices.len() != 1usize << free {
            return None;
        }
        let ok = self.vertices.iter().all(|v| (0..n).all(|k| v[k] == lo[k] || v[k] == hi[k]));
        ok.then_some((lo, hi))
    }

    /// Endpoints when the body is a segment.
    pub fn as_segment(&self) -> Option<(&[S], &[S])> {
        (self.vertices.len() == 2).then(|| (self.vertices[0].as_slice(), self.vertices[1].as_slice()))
    }

    /// Canonical total order: vertex count, then lexicographic vertex list.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.vertices.len().cmp(&other.vertices.len()))
            .then_with(|| {
                for (a, b) in self.vertices.iter().zip(&other.vertices) {
                    match lex_cmp(a, b) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            })
    }

    /// Stable textual key, identical for equal bodies.
    pub fn write_key(&self, out: &mut String) {
        out.push_str(&self.dim.to_string());
        out.push('[');
        for v in &self.vertices {
            for x in v {
                x.write_key(out);
                out.push(',');
            }
            out.push(';');
        }
        out.push(']');
    }

    pub fn to_f64(&self) -> Polytope<f64> {
        let verts = self.vertices.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
        Polytope::<f64>::from_extreme_unchecked(self.dim, verts)
    }
}

impl Polytope<f64> {
    /// Exact copy in rational arithmetic (floats convert without rounding).
    pub fn to_rational(&self) -> Polytope<Rational> {
        let verts = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|&x| Rational::from_f64(x)).collect())
            .collect();
        Polytope::<Rational>::from_extreme_unchecked(self.dim, verts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64) -> Rational {
        Rational::from_i64(p)
    }

    #[test]
    fn minkowski_examples() {
        let sq: Polytope<Rational> = Polytope::unit_cube(2);
        let sum = sq.minkowski_sum(&sq).unwrap();
        assert_eq!(sum, Polytope::axis_box(&[r(0), r(0)], &[r(2), r(2)]).unwrap());
        let s1 = Polytope::segment_from_origin(vec![r(1), r(0)]).unwrap();
        let s2 = Polytope::segment_from_origin(vec![r(0), r(1)]).unwrap();
        assert_eq!(s1.minkowski_sum(&s2).unwrap(), sq);
        assert_eq!(sq.minkowski_sum(&Polytope::origin(2)).unwrap(), sq);
    }

    #[test]
    fn volumes() {
        assert_eq!(Polytope::<Rational>::unit_cube(3).volume(), r(1));
        assert_eq!(Polytope::<Rational>::standard_simplex(2).volume(), Rational::from_ratio(1, 2));
        assert_eq!(Polytope::<Rational>::cross_polytope(3).volume(), Rational::from_ratio(4, 3));
        let seg = Polytope::segment(vec![r(0), r(0)], vec![r(1), r(1)]).unwrap();
        assert_eq!(seg.volume(), r(0));
    }

    #[test]
    fn canonical_form_drops_redundant_points() {
        let p = Polytope::from_points(
            2,
            vec![vec![2.0, 2.0], vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(p.vertices(), &[vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn box_detection() {
        let b: Polytope<Rational> = Polytope::axis_box(&[r(0), r(1)], &[r(2), r(1)]).unwrap();
        assert_eq!(b.num_vertices(), 2);
        assert!(b.as_axis_box().is_some());
        assert!(Polytope::<Rational>::standard_simplex(2).as_axis_box().is_none());
    }

    #[test]
    fn errors() {
        assert!(matches!(Polytope::<f64>::from_points(2, vec![]), Err(Error::Empty(_))));
        assert!(matches!(
            Polytope::<f64>::from_points(2, vec![vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = Polytope::<f64>::unit_cube(2);
        let b = Polytope::<f64>::unit_cube(3);
        assert!(a.minkowski_sum(&b).is_err());
    }
}

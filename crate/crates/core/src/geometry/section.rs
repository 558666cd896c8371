use std::cmp::Ordering;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::scalar::{dot, Scalar};

use super::hull::Halfspace;
use super::polytope::Polytope;

#[derive(Debug, Clone, PartialEq)]
pub enum Section<S: Scalar> {
    Empty,
    Body(Polytope<S>),
}

impl<S: Scalar> Section<S> {
    pub fn body(&self) -> Option<&Polytope<S>> {
        match self {
            Section::Empty => None,
            Section::Body(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SectionProjection<S: Scalar> {
    /// `P ∩ span(S)` in coordinates with respect to the columns of `S`.
    pub section: Section<S>,
    /// Orthogonal projection onto `span(S)^⊥`, in the coordinates of
    /// `complement`; `None` when `S` spans everything.
    pub projection: Option<Polytope<S>>,
    /// Orthonormal basis of `span(S)^⊥`.
    pub complement: Vec<Vec<S>>,
}

/// Orthonormal basis of the orthogonal complement of `span(basis)`.
///
/// Rational mode fails unless every normalization is an exact square root.
pub fn orthonormal_complement<S: Scalar>(basis: &[Vec<S>], n: usize) -> Result<Vec<Vec<S>>> {
    let mut q: Vec<Vec<S>> = Vec::new();
    let mut qq: Vec<S> = Vec::new();
    let residual = |r: &[S], q: &[Vec<S>], qq: &[S]| -> Vec<S> {
        let mut r = r.to_vec();
        for (qk, nk) in q.iter().zip(qq) {
            let c = dot(&r, qk) / nk.clone();
            for (rj, qj) in r.iter_mut().zip(qk) {
                *rj = rj.clone() - c.clone() * qj.clone();
            }
        }
        r
    };
    for b in basis {
        check_dim(n, b.len())?;
        let b = if S::MODE == crate::scalar::ArithmeticMode::Exact {
            b.clone()
        } else {
            let len = dot(b, b).to_f64().sqrt().max(f64::MIN_POSITIVE);
            b.iter().map(|x| x.clone() / S::from_f64(len)).collect()
        };
        let r = residual(&b, &q, &qq);
        let norm2 = dot(&r, &r);
        if norm2.is_zero_tol(1e-2) {
            return Err(Error::Precondition("subspace basis is linearly dependent".into()));
        }
        qq.push(norm2);
        q.push(r);
    }
    let k = q.len();
    while q.len() < n {
        // largest residual among the coordinate vectors
        let (r, norm2) = (0..n)
            .map(|j| {
                let e: Vec<S> = (0..n).map(|i| if i == j { S::one() } else { S::zero() }).collect();
                let r = residual(&e, &q, &qq);
                let n2 = dot(&r, &r);
                (r, n2)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n > 0");
        qq.push(norm2);
        q.push(r);
    }
    q.drain(..k);
    qq.drain(..k);
    q.into_iter()
        .zip(qq)
        .map(|(v, n2)| {
            let len = n2
                .sqrt_exact()
                .ok_or_else(|| Error::NotRepresentable("complement basis norm is irrational".into()))?;
            Ok(v.into_iter().map(|x| x / len.clone()).collect())
        })
        .collect()
}

fn combinations(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Section with `span(S)` and projection onto its orthogonal complement.
pub fn restrict_and_project<S: Scalar>(p: &Polytope<S>, basis: &[Vec<S>]) -> Result<SectionProjection<S>> {
    let n = p.dim();
    let k = basis.len();
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("subspace basis of size {k} in dimension {n}")));
    }
    for b in basis {
        check_dim(n, b.len())?;
    }
    if linalg::rank(basis, 1e-3) != k {
        return Err(Error::Precondition("subspace basis is linearly dependent".into()));
    }
    let complement = orthonormal_complement(basis, n)?;

    // Constraints of P pulled back to the coordinates c with x = S c.
    let h = p.hull();
    let mut cons: Vec<Halfspace<S>> = Vec::new();
    let pull = |hs: &Halfspace<S>| Halfspace {
        normal: basis.iter().map(|b| dot(&hs.normal, b)).collect(),
        offset: hs.offset.clone(),
    };
    for e in &h.equalities {
        let a = pull(e);
        cons.push(Halfspace { normal: a.normal.iter().map(|x| -x.clone()).collect(), offset: -a.offset.clone() });
        cons.push(a);
    }
    cons.extend(h.facets.iter().map(pull));
    let scale = h.extent.max(1.0);
    let mut pts: Vec<Vec<S>> = Vec::new();
    combinations(cons.len(), k, |idx| {
        let m: Vec<Vec<S>> = idx.iter().map(|&i| cons[i].normal.clone()).collect();
        let rhs: Vec<S> = idx.iter().map(|&i| cons[i].offset.clone()).collect();
        if let Some(c) = linalg::solve(&m, &rhs) {
            if cons.iter().all(|hs| hs.excess(&c).sign_tol(scale) != Ordering::Greater) {
                pts.push(c);
            }
        }
    });
    let section = if pts.is_empty() { Section::Empty } else { Section::Body(Polytope::from_points(k, pts)?) };

    let projection = if complement.is_empty() {
        None
    } else {
        let img: Vec<Vec<S>> = p
            .vertices()
            .iter()
            .map(|v| complement.iter().map(|q| dot(v, q)).collect())
            .collect();
        Some(Polytope::from_points(complement.len(), img)?)
    };
    Ok(SectionProjection { section, projection, complement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn e(n: usize, i: usize) -> Vec<Rational> {
        (0..n).map(|j| Rational::from_i64((i == j) as i64)).collect()
    }

    #[test]
    fn cube_section_and_projection() {
        let one = vec![Rational::from_i64(1); 3];
        let neg: Vec<Rational> = one.iter().map(|x| -x).collect();
        let cube = Polytope::axis_box(&neg, &one).unwrap();
        let sp = restrict_and_project(&cube, &[e(3, 0), e(3, 1)]).unwrap();
        let sq = Polytope::axis_box(&neg[..2], &one[..2]).unwrap();
        assert_eq!(sp.section, Section::Body(sq));

        let unit = Polytope::<Rational>::unit_cube(3);
        let sp = restrict_and_project(&unit, &[e(3, 2)]).unwrap();
        assert_eq!(sp.projection.unwrap(), Polytope::unit_cube(2));
    }

    #[test]
    fn cross_polytope_section() {
        let c = Polytope::<Rational>::cross_polytope(3);
        let sp = restrict_and_project(&c, &[e(3, 0), e(3, 1)]).unwrap();
        let s = sp.section.body().unwrap().clone();
        assert_eq!(s, Polytope::cross_polytope(2));
        assert_eq!(s.volume(), Rational::from_i64(2));
    }

    #[test]
    fn empty_section() {
        let c = Polytope::<f64>::unit_cube(2).translate(&[1.0, 1.0]).unwrap();
        let sp = restrict_and_project(&c, &[vec![1.0, -1.0]]).unwrap();
        assert_eq!(sp.section, Section::Empty);
    }

    #[test]
    fn irrational_complement_is_reported() {
        let c = Polytope::<Rational>::unit_cube(2);
        let b = vec![Rational::from_i64(1), Rational::from_i64(1)];
        assert!(matches!(restrict_and_project(&c, &[b]), Err(Error::NotRepresentable(_))));
    }
}

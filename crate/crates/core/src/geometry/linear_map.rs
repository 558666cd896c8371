use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::scalar::{dot, Rational, Scalar};

use super::polytope::Polytope;

/// A square matrix acting on `R^n`.
#[derive(Debug, Clone)]
pub struct LinearMap<S: Scalar = f64> {
    dim: usize,
    rows: Vec<Vec<S>>,
    det: OnceLock<S>,
    eigen: OnceLock<Vec<Complex<f64>>>,
}

impl<S: Scalar> PartialEq for LinearMap<S> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl<S: Scalar> LinearMap<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Precondition("empty matrix".into()));
        }
        for r in &rows {
            check_dim(dim, r.len())?;
        }
        Ok(LinearMap { dim, rows, det: OnceLock::new(), eigen: OnceLock::new() })
    }

    /// Same as [`LinearMap::new`] but rejects singular matrices.
    pub fn invertible(rows: Vec<Vec<S>>) -> Result<Self> {
        let g = Self::new(rows)?;
        g.require_invertible()?;
        Ok(g)
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![S::one(); n])
    }

    pub fn diag(d: &[S]) -> Self {
        let n = d.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { d[i].clone() } else { S::zero() }).collect())
            .collect();
        Self::new(rows).expect("square")
    }

    pub fn scalar(n: usize, s: S) -> Self {
        Self::diag(&vec![s; n])
    }

    /// Planar rotation by `theta` radians (rounded to the scalar type).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(vec![
            vec![S::from_f64(c), S::from_f64(-s)],
            vec![S::from_f64(s), S::from_f64(c)],
        ])
        .expect("square")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.rows[i][j]
    }

    pub fn det(&self) -> &S {
        self.det.get_or_init(|| linalg::determinant(&self.rows))
    }

    /// Exact test in rational mode; in float mode `|det|` is compared with the
    /// Hadamard bound.
    pub fn is_singular(&self) -> bool {
        let hadamard: f64 = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt())
            .product();
        self.det().is_zero_tol(1e-3 * hadamard.max(f64::MIN_POSITIVE))
    }

    pub fn require_invertible(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::Singular)
        } else {
            Ok(())
        }
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.rows[i][j].is_zero()))
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.dim).map(|i| self.rows[i][i].clone()).collect()
    }

    /// Complex eigenvalues sorted by descending modulus (stable on ties).
    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        self.eigen.get_or_init(|| {
            let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.rows[i][j].to_f64());
            let mut ev: Vec<Complex<f64>> = if self.is_diagonal() {
                self.diagonal().iter().map(|x| Complex::new(x.to_f64(), 0.0)).collect()
            } else {
                m.complex_eigenvalues().iter().copied().collect()
            };
            ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
            ev
        })
    }

    /// Eigenvalue moduli `|rho_1| >= ... >= |rho_n|`.
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues().iter().map(|z| z.norm()).collect()
    }

    pub fn apply(&self, x: &[S]) -> Vec<S> {
        self.rows.iter().map(|r| dot(r, x)).collect()
    }

    /// `g(P)`.
    pub fn apply_polytope(&self, p: &Polytope<S>) -> Result<Polytope<S>> {
        check_dim(self.dim, p.dim())?;
        let pts: Vec<Vec<S>> = p.vertices().iter().map(|v| self.apply(v)).collect();
        if self.det().is_zero() {
            Polytope::from_points(self.dim, pts)
        } else {
            Ok(Polytope::from_extreme_unchecked(self.dim, pts))
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(S::zero(), |acc, k| {
                            acc + self.rows[i][k].clone() * other.rows[k][j].clone()
                        })
                    })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base).expect("same dim");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same dim");
            }
        }
        result
    }

    pub fn inverse(&self) -> Result<Self> {
        self.require_invertible()?;
        let n = self.dim;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let e: Vec<S> = (0..n).map(|i| if i == j { S::one() } else { S::zero() }).collect();
            cols.push(linalg::solve(&self.rows, &e).ok_or(Error::Singular)?);
        }
        let rows = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
        Self::new(rows)
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        Self::new((0..n).map(|i| (0..n).map(|j| self.rows[j][i].clone()).collect()).collect())
            .expect("square")
    }

    pub fn scaled(&self, s: &S) -> Self {
        Self::new(self.rows.iter().map(|r| r.iter().map(|x| x.clone() * s.clone()).collect()).collect())
            .expect("square")
    }

    pub fn to_f64(&self) -> LinearMap<f64> {
        LinearMap::new(self.rows.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect())
            .expect("square")
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.rows[i][j].to_f64())
    }
}

impl LinearMap<f64> {
    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::new((0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()).expect("square")
    }

    pub fn to_rational(&self) -> LinearMap<Rational> {
        LinearMap::new(
            self.rows.iter().map(|r| r.iter().map(|&x| Rational::from_f64(x)).collect()).collect(),
        )
        .expect("square")
    }
}

//! Degrees and dynamical degrees of linear maps acting on valuations.
//!
//! For a reference body `B` and codegree `p`, the normalized raw degree of
//! `g^k` is `V(g^k B[p], B[n-p]) / (|det g|^k vol B)`. Its k-th roots converge
//! to `d_p(g) = |det g|^{-1} prod_{j<=p} |rho_j|`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{LinearMap, Polytope, ReferenceBody};
use crate::linalg::{determinant, rank};
use crate::mixed_volume::mixed_volume_repeated;
use crate::scalar::{binomial, ArithmeticMode, Scalar};
use crate::valuation::{ConvMode, Valuation};

/// Degree sequence of the iterates of a map together with its limits.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub map: Vec<Vec<f64>>,
    pub codegree: usize,
    pub ks: Vec<u32>,
    /// `ln raw_k`; the raw values themselves may leave the f64 range.
    pub log_raw: Vec<f64>,
    pub raw: Vec<f64>,
    pub roots: Vec<f64>,
    /// Running infimum of `(C deg_k)^{1/k}`.
    pub fekete_running: Vec<f64>,
    pub fekete_estimate: f64,
    pub spectral_value: f64,
    pub reference: String,
    pub mode: ArithmeticMode,
}

impl DegreeReport {
    fn build(
        map: Vec<Vec<f64>>,
        n: usize,
        codegree: usize,
        log_raw: Vec<f64>,
        spectral_value: f64,
        reference: String,
        mode: ArithmeticMode,
    ) -> Self {
        let ks: Vec<u32> = (1..=log_raw.len() as u32).collect();
        let ln_binom = binomial::<f64>(n, codegree).ln();
        let roots: Vec<f64> = ks.iter().zip(&log_raw).map(|(&k, &l)| (l / k as f64).exp()).collect();
        let mut best = f64::INFINITY;
        let fekete_running: Vec<f64> = ks
            .iter()
            .zip(&log_raw)
            .map(|(&k, &l)| {
                best = best.min((ln_binom + l) / k as f64);
                best.exp()
            })
            .collect();
        DegreeReport {
            map,
            codegree,
            raw: log_raw.iter().map(|l| l.exp()).collect(),
            fekete_estimate: *fekete_running.last().unwrap_or(&f64::NAN),
            ks,
            log_raw,
            roots,
            fekete_running,
            spectral_value,
            reference,
            mode,
        }
    }

    pub fn rel_errors(&self) -> Vec<f64> {
        self.roots.iter().map(|r| (r - self.spectral_value).abs() / self.spectral_value).collect()
    }

    pub fn final_root(&self) -> f64 {
        *self.roots.last().unwrap_or(&f64::NAN)
    }

    pub fn final_rel_error(&self) -> f64 {
        *self.rel_errors().last().unwrap_or(&f64::NAN)
    }

    /// Pairs `(k, l)` with `k + l <= kmax` where
    /// `deg(g^{k+l}) > C deg(g^k) deg(g^l)` beyond `tol` (in log scale).
    /// `literal` uses `C = 1/(c vol B)`, otherwise `C = 1/(c^2 vol B)`.
    pub fn submultiplicativity_violations(&self, literal: bool, tol: f64) -> Vec<(u32, u32)> {
        let n_binom = if literal { 0.0 } else { self.ln_binomial() };
        let kmax = self.ks.len();
        let mut out = Vec::new();
        for k in 1..kmax {
            for l in k..=kmax - k {
                let lhs = self.log_raw[k + l - 1];
                let rhs = n_binom + self.log_raw[k - 1] + self.log_raw[l - 1];
                if lhs > rhs + tol {
                    out.push((k as u32, l as u32));
                }
            }
        }
        out
    }

    fn ln_binomial(&self) -> f64 {
        // binomial(n, p) recovered from the stored map dimension
        binomial::<f64>(self.map.len(), self.codegree).ln()
    }

    /// CSV with a gnuplot-style `#` header.
    pub fn to_csv(&self, meta: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in meta {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&format!("# codegree: {}\n# spectral: {:.15e}\n", self.codegree, self.spectral_value));
        s.push_str("# columns: 1=k 2=raw_degree 3=kth_root 4=fekete 5=spectral 6=rel_error\n");
        s.push_str("k,raw_degree,kth_root,fekete,spectral,rel_error\n");
        for (idx, k) in self.ks.iter().enumerate() {
            s.push_str(&format!(
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                k,
                self.raw[idx],
                self.roots[idx],
                self.fekete_running[idx],
                self.spectral_value,
                (self.roots[idx] - self.spectral_value).abs() / self.spectral_value
            ));
        }
        s
    }
}

/// `|det g|^{-1} prod_{j<=p} |rho_j|`.
pub fn spectral_degree<S: Scalar>(g: &LinearMap<S>, codeg: usize) -> Result<f64> {
    g.require_invertible()?;
    if codeg > g.dim() {
        return Err(Error::Precondition(format!("codegree {codeg} above dimension {}", g.dim())));
    }
    let m = g.moduli();
    let top: f64 = m[..codeg].iter().map(|x| x.ln()).sum();
    Ok((top - g.det().ln_abs()).exp())
}

/// `deg(g) = (g . psi) * phi` for complementary degrees.
pub fn degree_of_map<S: Scalar>(g: &LinearMap<S>, psi: &Valuation<S>, phi: &Valuation<S>) -> Result<S> {
    check_dim(psi.dim(), phi.dim())?;
    check_dim(psi.dim(), g.dim())?;
    if psi.degree() + phi.degree() != psi.dim() {
        return Err(Error::Precondition(format!(
            "degrees {} and {} are not complementary in dimension {}",
            psi.degree(),
            phi.degree(),
            psi.dim()
        )));
    }
    psi.group_action(g)?.convolve(phi, ConvMode::Paper)?.constant()
}

/// `deg_p(g) = c V(gB[p], B[n-p]) / |det g|` with `c = p!(n-p)!/n!`, i.e.
/// the degree for `psi = V(., B[p])` and `phi = V(., B[n-p])`.
pub fn degree_wrt_body<S: Scalar>(g: &LinearMap<S>, codeg: usize, b: &Polytope<S>) -> Result<S> {
    check_dim(g.dim(), b.dim())?;
    g.require_invertible()?;
    let n = g.dim();
    let gb = g.apply_polytope(b)?;
    let v = mixed_volume_repeated(&[(&gb, codeg), (b, n - codeg)])?;
    Ok(v / (binomial::<S>(n, codeg) * g.det().abs()))
}

/// `f64` comparison of `deg(fg)` against both submultiplicativity constants.
#[derive(Debug, Clone, Serialize)]
pub struct SubmultiplicativityCheck {
    pub deg_fg: f64,
    pub deg_f: f64,
    pub deg_g: f64,
    /// `1/(c^2 vol B)`.
    pub constant: f64,
    /// `1/(c vol B)`.
    pub literal_constant: f64,
    pub holds: bool,
    pub holds_literal: bool,
}

pub fn submultiplicativity<S: Scalar>(
    f: &LinearMap<S>,
    g: &LinearMap<S>,
    codeg: usize,
    b: &Polytope<S>,
) -> Result<SubmultiplicativityCheck> {
    let n = g.dim();
    let fg = f.compose(g)?;
    let (dfg, df, dg) = (degree_wrt_body(&fg, codeg, b)?, degree_wrt_body(f, codeg, b)?, degree_wrt_body(g, codeg, b)?);
    let c = S::one() / binomial::<S>(n, codeg);
    let vol = b.volume();
    let big = S::one() / (c.clone() * c.clone() * vol.clone());
    let lit = S::one() / (c * vol);
    let prod = df.clone() * dg.clone();
    let slack = |rhs: &S| match S::MODE {
        ArithmeticMode::Exact => dfg <= *rhs,
        ArithmeticMode::Float => dfg.to_f64() <= rhs.to_f64() * (1.0 + 1e-12),
    };
    Ok(SubmultiplicativityCheck {
        holds: slack(&(big.clone() * prod.clone())),
        holds_literal: slack(&(lit.clone() * prod)),
        deg_fg: dfg.to_f64(),
        deg_f: df.to_f64(),
        deg_g: dg.to_f64(),
        constant: big.to_f64(),
        literal_constant: lit.to_f64(),
    })
}

pub(crate) fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            if n - j < p - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

/// `p`-th compound matrix: minors indexed by `p`-subsets in lexicographic order.
pub fn compound<S: Scalar>(m: &[Vec<S>], p: usize) -> Vec<Vec<S>> {
    let sets = subsets(m.len(), p);
    sets.iter()
        .map(|r| {
            sets.iter()
                .map(|c| {
                    if p == 0 {
                        return S::one();
                    }
                    let minor: Vec<Vec<S>> = r.iter().map(|&i| c.iter().map(|&j| m[i][j].clone()).collect()).collect();
                    determinant(&minor)
                })
                .collect()
        })
        .collect()
}

fn matmul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let k = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| (0..k).fold(S::zero(), |acc, t| acc + row[t].clone() * b[t][j].clone()))
                .collect()
        })
        .collect()
}

/// Divides a float matrix by its largest entry when it drifts far from 1;
/// returns the log of the factor removed. Exact matrices are left alone.
fn renormalize<S: Scalar>(m: &mut [Vec<S>]) -> f64 {
    if S::MODE == ArithmeticMode::Exact {
        return 0.0;
    }
    let big = m.iter().flatten().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    if big == 0.0 || (1e-60..1e60).contains(&big) {
        return 0.0;
    }
    let s = S::from_f64(big);
    for x in m.iter_mut().flatten() {
        *x = x.clone() / s.clone();
    }
    big.ln()
}

/// `V(g^k B[p], B[n-p])` as `value * exp(offset)` for `k = 1..=kmax`.
fn mixed_sequence<S: Scalar>(g: &LinearMap<S>, p: usize, b: &Polytope<S>, kmax: u32) -> Result<Vec<(S, f64)>> {
    let n = g.dim();
    if let Some((lo, hi)) = b.as_axis_box() {
        // Cauchy-Binet on zonotopes: sum over row/column p-subsets of
        // |minor of g^k| weighted by the box side lengths.
        let a: Vec<S> = hi.iter().zip(&lo).map(|(h, l)| h.clone() - l.clone()).collect();
        let sets = subsets(n, p);
        let prod = |idx: &mut dyn Iterator<Item = usize>| idx.fold(S::one(), |acc, j| acc * a[j].clone());
        let col_w: Vec<S> = sets.iter().map(|q| prod(&mut q.iter().copied())).collect();
        let row_w: Vec<S> = sets.iter().map(|r| prod(&mut (0..n).filter(|j| !r.contains(j)))).collect();
        let cg = compound(g.rows(), p);
        let norm = binomial::<S>(n, p);
        let mut m = cg.clone();
        let mut offset = renormalize(&mut m);
        let mut out = Vec::with_capacity(kmax as usize);
        for k in 1..=kmax {
            if k > 1 {
                m = matmul(&m, &cg);
                offset += renormalize(&mut m);
            }
            let mut total = S::zero();
            for (ri, row) in m.iter().enumerate() {
                for (qi, x) in row.iter().enumerate() {
                    total = total + row_w[ri].clone() * col_w[qi].clone() * x.abs();
                }
            }
            out.push((total / norm.clone(), offset));
        }
        return Ok(out);
    }
    let mut powers = Vec::with_capacity(kmax as usize);
    let mut m: Vec<Vec<S>> = g.rows().to_vec();
    let mut offset = renormalize(&mut m);
    for k in 1..=kmax {
        if k > 1 {
            m = matmul(&m, g.rows());
            offset += renormalize(&mut m);
        }
        powers.push((m.clone(), offset));
    }
    powers
        .into_par_iter()
        .map(|(rows, off)| {
            let gk = LinearMap::new(rows)?;
            let body = gk.apply_polytope(b)?;
            let v = mixed_volume_repeated(&[(&body, p), (b, n - p)])?;
            Ok((v, off * p as f64))
        })
        .collect()
}

/// Exact (in rational mode) normalized raw degrees `raw_1..raw_kmax`.
pub fn raw_degree_sequence<S: Scalar>(g: &LinearMap<S>, codeg: usize, b: &Polytope<S>, kmax: u32) -> Result<Vec<S>> {
    if S::MODE == ArithmeticMode::Float {
        return Err(Error::Precondition("exact sequences need rational arithmetic".into()));
    }
    check_inputs(g, codeg, b)?;
    let det = g.det().abs();
    let vol = b.volume();
    let seq = mixed_sequence(g, codeg, b, kmax)?;
    let mut dk = S::one();
    Ok(seq
        .into_iter()
        .map(|(v, _)| {
            dk = dk.clone() * det.clone();
            v / (dk.clone() * vol.clone())
        })
        .collect())
}

/// Same sequence, always through the general mixed-volume engine.
pub fn raw_degree_sequence_enumerated<S: Scalar>(
    g: &LinearMap<S>,
    codeg: usize,
    b: &Polytope<S>,
    kmax: u32,
) -> Result<Vec<S>> {
    check_inputs(g, codeg, b)?;
    let n = g.dim();
    let det = g.det().abs();
    let vol = b.volume();
    let mut gk = LinearMap::identity(n);
    let mut dk = S::one();
    let mut out = Vec::new();
    for _ in 0..kmax {
        gk = g.compose(&gk)?;
        dk = dk * det.clone();
        let body = gk.apply_polytope(b)?;
        let v = mixed_volume_repeated(&[(&body, codeg), (b, n - codeg)])?;
        out.push(v / (dk.clone() * vol.clone()));
    }
    Ok(out)
}

/// `e_p(|lambda|^k) / (C(n,p) |det|^k)`, the raw degree of a diagonal map on any box.
pub fn diagonal_box_closed_form<S: Scalar>(diag: &[S], codeg: usize, k: u32) -> S {
    let n = diag.len();
    let pw: Vec<S> = diag.iter().map(|x| num_traits::pow(x.abs(), k as usize)).collect();
    let e = subsets(n, codeg)
        .iter()
        .fold(S::zero(), |acc, s| acc + s.iter().fold(S::one(), |p, &j| p * pw[j].clone()));
    let det = pw.iter().fold(S::one(), |acc, x| acc * x.clone());
    e / (binomial::<S>(n, codeg) * det)
}

fn check_inputs<S: Scalar>(g: &LinearMap<S>, codeg: usize, b: &Polytope<S>) -> Result<()> {
    check_dim(g.dim(), b.dim())?;
    g.require_invertible()?;
    if codeg > g.dim() {
        return Err(Error::Precondition(format!("codegree {codeg} above dimension {}", g.dim())));
    }
    if !b.is_full_dimensional() {
        return Err(Error::Precondition("reference body must be full-dimensional".into()));
    }
    Ok(())
}

/// Degree sequence, k-th roots, Fekete infimum and spectral value.
pub fn dynamical_degree_empirical<S: Scalar>(
    g: &LinearMap<S>,
    codeg: usize,
    b: &ReferenceBody<S>,
    kmax: u32,
) -> Result<DegreeReport> {
    check_inputs(g, codeg, &b.body)?;
    if kmax < 4 {
        return Err(Error::Precondition(format!("kmax {kmax} below 4")));
    }
    let ln_det = g.det().ln_abs();
    let ln_vol = b.volume().ln_abs();
    let seq = mixed_sequence(g, codeg, &b.body, kmax)?;
    let log_raw: Vec<f64> = seq
        .iter()
        .enumerate()
        .map(|(i, (v, off))| v.ln_abs() + off - (i + 1) as f64 * ln_det - ln_vol)
        .collect();
    Ok(DegreeReport::build(
        g.to_f64().rows().to_vec(),
        g.dim(),
        codeg,
        log_raw,
        spectral_degree(g, codeg)?,
        b.id.clone(),
        S::MODE,
    ))
}

/// Spectral degrees `d_0..d_n` and log-concavity margins.
#[derive(Debug, Clone, Serialize)]
pub struct LogConcavityReport {
    pub degrees: Vec<f64>,
    /// `d_i^2 - d_{i-1} d_{i+1}` for `i = 1..n-1`.
    pub margins: Vec<f64>,
}

impl LogConcavityReport {
    /// `d_i^2 - d_{i-s} d_{i+s}`.
    pub fn strict_margin(&self, i: usize, s: usize) -> Option<f64> {
        if s > i || i + s >= self.degrees.len() {
            return None;
        }
        Some(self.degrees[i] * self.degrees[i] - self.degrees[i - s] * self.degrees[i + s])
    }

    /// Margins relative to `d_i^2`.
    pub fn relative_margins(&self) -> Vec<f64> {
        self.margins
            .iter()
            .enumerate()
            .map(|(j, m)| m / (self.degrees[j + 1] * self.degrees[j + 1]))
            .collect()
    }
}

pub fn log_concavity_report<S: Scalar>(g: &LinearMap<S>) -> Result<LogConcavityReport> {
    let n = g.dim();
    let degrees = (0..=n).map(|p| spectral_degree(g, p)).collect::<Result<Vec<_>>>()?;
    let margins = (1..n).map(|i| degrees[i] * degrees[i] - degrees[i - 1] * degrees[i + 1]).collect();
    Ok(LogConcavityReport { degrees, margins })
}

fn span_contains<S: Scalar>(basis: &[Vec<S>], v: &[S]) -> bool {
    let mut rows = basis.to_vec();
    rows.push(v.to_vec());
    let scale = rows.iter().flatten().map(|x| x.to_f64().abs()).fold(1.0, f64::max);
    rank(&rows, scale) == basis.len()
}

/// Degrees of `(g^k . psi) * phi * tau` with `tau = V(-; B_S[m])` for a
/// `g`-invariant subspace `S` of dimension `m`, `psi = V(., B[p])` and
/// `phi = V(., B[n-m-p])`. Normalized by `|det g|^k V(B[n-m], B_S[m])`.
pub fn relative_dynamical_degree<S: Scalar>(
    g: &LinearMap<S>,
    s_basis: &[Vec<S>],
    codeg: usize,
    b_s: &Polytope<S>,
    b: &ReferenceBody<S>,
    kmax: u32,
) -> Result<DegreeReport> {
    let n = g.dim();
    check_inputs(g, codeg, &b.body)?;
    check_dim(n, b_s.dim())?;
    let m = s_basis.len();
    if m == 0 || s_basis.iter().any(|v| v.len() != n) {
        return Err(Error::Precondition("subspace basis must be nonempty vectors of the ambient dimension".into()));
    }
    let scale = s_basis.iter().flatten().map(|x| x.to_f64().abs()).fold(1.0, f64::max);
    if rank(s_basis, scale) != m {
        return Err(Error::Precondition("subspace basis is not linearly independent".into()));
    }
    if s_basis.iter().any(|v| !span_contains(s_basis, &g.apply(v))) {
        return Err(Error::Precondition("subspace is not invariant under the map".into()));
    }
    let v0 = &b_s.vertices()[0];
    let inside = b_s.vertices().iter().all(|v| {
        let d: Vec<S> = v.iter().zip(v0).map(|(a, c)| a.clone() - c.clone()).collect();
        span_contains(s_basis, &d)
    });
    if !inside || b_s.affine_dim() != m {
        return Err(Error::Precondition("B_S must be full-dimensional inside the subspace".into()));
    }
    if codeg + m > n {
        return Err(Error::Precondition(format!("codegree {codeg} + subspace dimension {m} exceeds {n}")));
    }
    if kmax < 4 {
        return Err(Error::Precondition(format!("kmax {kmax} below 4")));
    }
    let base = mixed_volume_repeated(&[(&b.body, n - m), (b_s, m)])?;
    let ln_det = g.det().ln_abs();
    let mut powers = Vec::new();
    let mut rows: Vec<Vec<S>> = g.rows().to_vec();
    let mut offset = renormalize(&mut rows);
    for k in 1..=kmax {
        if k > 1 {
            rows = matmul(&rows, g.rows());
            offset += renormalize(&mut rows);
        }
        powers.push((rows.clone(), offset));
    }
    let log_raw = powers
        .into_par_iter()
        .enumerate()
        .map(|(i, (rows, off))| {
            let gk = LinearMap::new(rows)?;
            let body = gk.apply_polytope(&b.body)?;
            let v = mixed_volume_repeated(&[(&body, codeg), (&b.body, n - m - codeg), (b_s, m)])?;
            Ok(v.ln_abs() + off * codeg as f64 - (i + 1) as f64 * ln_det - base.ln_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let quotient = quotient_moduli(&g.to_f64(), &s_basis.iter().map(|v| v.iter().map(|x| x.to_f64()).collect()).collect::<Vec<Vec<f64>>>());
    let top: f64 = quotient[..codeg].iter().map(|x| x.ln()).sum();
    let spectral = (top - ln_det).exp();
    Ok(DegreeReport::build(
        g.to_f64().rows().to_vec(),
        n,
        codeg,
        log_raw,
        spectral,
        format!("{}|S{m}", b.id),
        S::MODE,
    ))
}

/// Eigenvalue moduli of the map induced on `R^n / S`, sorted descending.
fn quotient_moduli(g: &LinearMap<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    let n = g.dim();
    let m = basis.len();
    // complete the basis of S to a basis of R^n and conjugate
    let mut cols: Vec<Vec<f64>> = basis.to_vec();
    for j in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let mut trial = cols.clone();
        trial.push(e.clone());
        if rank(&trial, 1.0) == trial.len() {
            cols.push(e);
        }
    }
    let q = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let conj = q.clone().try_inverse().expect("basis completion is invertible") * g.to_nalgebra() * q;
    let block = conj.view((m, m), (n - m, n - m)).into_owned();
    let mut moduli: Vec<f64> = block.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli
}

/// Max deviation of `d_p(g + delta E)` from `d_p(g)` per codegree `p = 0..=n`.
pub fn continuity_probe<R: Rng + ?Sized>(
    g: &LinearMap<f64>,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = g.dim();
    let base = log_concavity_report(g)?.degrees;
    let mut dev = vec![0.0; n + 1];
    let mut done = 0;
    while done < trials {
        let rows: Vec<Vec<f64>> = g
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x + delta * rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let h = LinearMap::new(rows)?;
        if h.is_singular() {
            continue;
        }
        let d = log_concavity_report(&h)?.degrees;
        for p in 0..=n {
            dev[p] = f64::max(dev[p], (d[p] - base[p]).abs());
        }
        done += 1;
    }
    Ok(dev)
}

/// Body used inside an invariant subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceBody {
    /// `conv(0, v_1, ..., v_r)`.
    Simplex,
    /// `sum [0, v_j]`.
    Box,
}

#[derive(Debug, Clone)]
pub struct InvariantValuation {
    pub phi: Valuation<f64>,
    /// Predicted eigenvalue of the action.
    pub d: f64,
    /// Basis of the invariant subspace filled exactly.
    pub subspace: Vec<Vec<f64>>,
    /// Polygon resolution when a rotation block is only partly used.
    pub polygon: Option<usize>,
    /// Frame `(x, y)` of the rotation plane, in which the block acts as a
    /// scaled rotation.
    pub polygon_frame: Option<(Vec<f64>, Vec<f64>)>,
}

impl InvariantValuation {
    /// `max |(g . phi)(L) - d phi(L)| / (d phi(L))` over the samples.
    pub fn residual(&self, g: &LinearMap<f64>, samples: &[Polytope<f64>]) -> Result<f64> {
        let moved = self.phi.group_action(g)?;
        let mut worst: f64 = 0.0;
        for l in samples {
            let base = self.d * self.phi.evaluate(l)?;
            if base.abs() < 1e-12 {
                continue;
            }
            worst = worst.max((moved.evaluate(l)? - base).abs() / base.abs());
        }
        Ok(worst)
    }

    /// Worst invariance defect over the closure of the rotation orbit: the
    /// one-step residual, and the change of `phi` when the polygon is turned
    /// by any angle in `[0, 2 pi / m)` (sampled on `grid` points). Equals
    /// [`residual`](Self::residual) without a rotation block.
    pub fn orbit_residual(&self, g: &LinearMap<f64>, samples: &[Polytope<f64>], grid: usize) -> Result<f64> {
        let mut worst = self.residual(g, samples)?;
        let (Some(m), Some((x, y))) = (self.polygon, &self.polygon_frame) else {
            return Ok(worst);
        };
        let n = g.dim();
        let original = Polytope::from_points(n, polygon_points(x, y, m, 0.0))?;
        let fixed: Vec<Polytope<f64>> =
            self.phi.terms()[0].bodies.iter().filter(|b| **b != original).cloned().collect();
        for step in 1..grid.max(1) {
            let t = 2.0 * std::f64::consts::PI * step as f64 / (grid as f64 * m as f64);
            let turned = Polytope::from_points(n, polygon_points(x, y, m, t))?;
            let mut bodies = fixed.clone();
            bodies.push(turned);
            let phi_t = Valuation::mixed(n, bodies)?;
            for l in samples {
                let base = self.phi.evaluate(l)?;
                if base.abs() < 1e-12 {
                    continue;
                }
                worst = worst.max((phi_t.evaluate(l)? - base).abs() / base.abs());
            }
        }
        Ok(worst)
    }
}

fn polygon_points(x: &[f64], y: &[f64], m: usize, phase: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|k| {
            let t = phase + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            x.iter().zip(y).map(|(a, b)| a * t.cos() + b * t.sin()).collect()
        })
        .collect()
}

enum Block {
    Real { lambda: f64, mult: usize },
    Complex { a: f64, b: f64, mult: usize },
}

impl Block {
    fn dim(&self) -> usize {
        match self {
            Block::Real { mult, .. } => *mult,
            Block::Complex { mult, .. } => 2 * mult,
        }
    }
}

const CLUSTER_TOL: f64 = 1e-6;

fn blocks(ev: &[Complex<f64>]) -> Vec<(f64, Block)> {
    let mut out: Vec<(f64, Block, Complex<f64>)> = Vec::new();
    for z in ev {
        let scale = z.norm().max(1.0);
        if z.im < -CLUSTER_TOL * scale {
            continue; // counted with its conjugate
        }
        let real = z.im.abs() <= CLUSTER_TOL * scale;
        if let Some((_, blk, rep)) = out.iter_mut().find(|(_, _, r)| (*r - z).norm() <= CLUSTER_TOL * scale) {
            match blk {
                Block::Real { mult, .. } | Block::Complex { mult, .. } => *mult += 1,
            }
            let _ = rep;
            continue;
        }
        let blk = if real { Block::Real { lambda: z.re, mult: 1 } } else { Block::Complex { a: z.re, b: z.im, mult: 1 } };
        out.push((z.norm(), blk, *z));
    }
    out.into_iter().map(|(m, b, _)| (m, b)).collect()
}

fn null_space(a: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = a.nrows();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let tol = 1e-7 * smax.max(1.0);
    (0..n)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| v_t.row(i).transpose())
        .collect()
}

/// Adds up to `count` vectors of `candidates` that enlarge `span`.
fn extend_span(span: &mut Vec<DVector<f64>>, candidates: &[DVector<f64>], count: usize) -> Vec<DVector<f64>> {
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for v in span.iter() {
        let mut w = v.clone();
        for u in &ortho {
            w -= u * u.dot(&w);
        }
        if w.norm() > 1e-9 {
            ortho.push(w.normalize());
        }
    }
    let mut added = Vec::new();
    for _ in 0..count {
        let best = candidates
            .iter()
            .map(|c| {
                let mut w = c.clone();
                for u in &ortho {
                    w -= u * u.dot(&w);
                }
                (w.norm(), c, w)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((r, c, w)) if r > 1e-6 => {
                ortho.push(w / r);
                span.push(c.clone());
                added.push(c.clone());
            }
            _ => break,
        }
    }
    added
}

fn matrix_power(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Invariant valuation of degree `codeg` built from the top `n - codeg`
/// generalized eigenspaces: `phi(L) = V(D[r], K, L[codeg])` with `D` a body
/// filling the invariant subspace and `K` an optional polygonal disk in
/// a rotation plane used partially.
pub fn invariant_valuation(
    g: &LinearMap<f64>,
    codeg: usize,
    resolution: usize,
    shape: SubspaceBody,
) -> Result<InvariantValuation> {
    g.require_invertible()?;
    let n = g.dim();
    if codeg > n {
        return Err(Error::Precondition(format!("codegree {codeg} above dimension {n}")));
    }
    let i = n - codeg;
    let gm = g.to_nalgebra();
    let id = DMatrix::<f64>::identity(n, n);
    let mut bl = blocks(g.eigenvalues());
    // stable: on equal modulus prefer real blocks, which split exactly
    bl.sort_by(|x, y| {
        let scale = x.0.max(1.0);
        if (x.0 - y.0).abs() <= CLUSTER_TOL * scale {
            let rx = matches!(x.1, Block::Real { .. });
            let ry = matches!(y.1, Block::Real { .. });
            ry.cmp(&rx)
        } else {
            y.0.total_cmp(&x.0)
        }
    });
    let mut span: Vec<DVector<f64>> = Vec::new();
    let mut polygon_plane: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut remaining = i;
    for (_, blk) in &bl {
        if remaining == 0 {
            break;
        }
        let take = remaining.min(blk.dim());
        match *blk {
            Block::Real { lambda, mult } => {
                let a = &gm - &id * lambda;
                let mut local: Vec<DVector<f64>> = Vec::new();
                for j in 1..=mult {
                    let ker = null_space(&matrix_power(&a, j));
                    let want = take.min(ker.len()) - local.len().min(take.min(ker.len()));
                    let mut all = span.clone();
                    all.extend(local.iter().cloned());
                    let added = extend_span(&mut all, &ker, want);
                    local.extend(added);
                    if local.len() == take {
                        break;
                    }
                }
                if local.len() != take {
                    return Err(Error::Precondition(format!(
                        "could not resolve the generalized eigenspace of {lambda}"
                    )));
                }
                span.extend(local);
            }
            Block::Complex { a, b, mult } => {
                let shifted = &gm - &id * a;
                let mm = &shifted * &shifted + &id * (b * b);
                if take == 2 * mult {
                    let ker = null_space(&matrix_power(&mm, mult));
                    let added = extend_span(&mut span, &ker, take);
                    if added.len() != take {
                        return Err(Error::Precondition("could not resolve a complex eigenspace".into()));
                    }
                } else {
                    let ker = null_space(&mm);
                    if ker.len() != 2 * mult {
                        return Err(Error::Precondition(
                            "partial use of a defective rotation block is not supported".into(),
                        ));
                    }
                    let mut local: Vec<DVector<f64>> = span.clone();
                    let mut planes = Vec::new();
                    for _ in 0..take.div_ceil(2) {
                        let x = extend_span(&mut local, &ker, 1);
                        let Some(x) = x.into_iter().next() else {
                            return Err(Error::Precondition("rotation plane selection failed".into()));
                        };
                        let y = (&x * a - &gm * &x) / b;
                        local.push(y.clone());
                        planes.push((x, y));
                    }
                    if take % 2 == 1 {
                        polygon_plane = planes.pop();
                    }
                    for (x, y) in planes {
                        span.push(x);
                        span.push(y);
                    }
                }
            }
        }
        remaining -= take;
    }
    let to_vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<f64>>();
    let subspace: Vec<Vec<f64>> = span.iter().map(to_vec).collect();
    let mut bodies = Vec::new();
    if !subspace.is_empty() {
        let d_body = match shape {
            SubspaceBody::Simplex => {
                let mut pts = vec![vec![0.0; n]];
                pts.extend(subspace.iter().cloned());
                Polytope::from_points(n, pts)?
            }
            SubspaceBody::Box => subspace.iter().try_fold(Polytope::origin(n), |acc, v| {
                acc.minkowski_sum(&Polytope::segment_from_origin(v.clone())?)
            })?,
        };
        bodies.extend(std::iter::repeat(d_body).take(subspace.len()));
    }
    let mut polygon = None;
    let mut polygon_frame = None;
    if let Some((x, y)) = polygon_plane {
        if resolution < 3 {
            return Err(Error::Precondition(format!("polygon resolution {resolution} below 3")));
        }
        let (x, y) = (to_vec(&x), to_vec(&y));
        bodies.push(Polytope::from_points(n, polygon_points(&x, &y, resolution, 0.0))?);
        polygon = Some(resolution);
        polygon_frame = Some((x, y));
    }
    let phi = Valuation::mixed(n, bodies)?;
    Ok(InvariantValuation { phi, d: spectral_degree(g, i)?, subspace, polygon, polygon_frame })
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingReport {
    pub i: usize,
    pub s: usize,
    pub margin: f64,
    pub scalar: f64,
    /// `psi_1(B) psi_2(B)`, for scale.
    pub scale: f64,
}

/// `psi_1 * psi_2 * V(-; B[n-2i])` for two `d_i`-invariant valuations of degree `n - i`.
pub fn vanishing_check(
    g: &LinearMap<f64>,
    i: usize,
    s: usize,
    b: &ReferenceBody<f64>,
    resolution: usize,
) -> Result<VanishingReport> {
    let n = g.dim();
    check_dim(n, b.dim())?;
    if i == 0 || 2 * i > n {
        return Err(Error::Precondition(format!("need 1 <= i and 2i <= n, got i = {i}, n = {n}")));
    }
    if s == 0 || s > i || i + s > n {
        return Err(Error::Precondition(format!("shift s = {s} outside 1..=min(i, n-i)")));
    }
    let lc = log_concavity_report(g)?;
    let margin = lc.strict_margin(i, s).expect("indices checked");
    let di2 = lc.degrees[i] * lc.degrees[i];
    if margin <= 1e-12 * di2 {
        return Err(Error::Hypothesis(format!(
            "strict log-concavity fails: d_{i}^2 - d_{}*d_{} = {margin:e} is not positive",
            i - s,
            i + s
        )));
    }
    let psi1 = invariant_valuation(g, n - i, resolution, SubspaceBody::Simplex)?;
    let psi2 = invariant_valuation(g, n - i, resolution, SubspaceBody::Box)?;
    let phi_b = Valuation::reference(b, 2 * i)?;
    let scalar = psi1
        .phi
        .convolve(&psi2.phi, ConvMode::Unit)?
        .convolve(&phi_b, ConvMode::Unit)?
        .constant()?;
    let scale = psi1.phi.evaluate(&b.body)? * psi2.phi.evaluate(&b.body)?;
    Ok(VanishingReport { i, s, margin, scalar, scale })
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

    #[test]
    fn degree_examples() {
        let b = Polytope::<Rational>::unit_cube(2);
        let psi = Valuation::mixed(2, vec![b.clone()]).unwrap();
        assert_eq!(degree_of_map(&LinearMap::identity(2), &psi, &psi).unwrap(), q(1, 2));
        let g = LinearMap::diag(&[q(3, 1), q(2, 1)]);
        assert_eq!(degree_of_map(&g, &psi, &psi).unwrap(), q(5, 24));
        assert_eq!(degree_wrt_body(&g, 1, &b).unwrap(), q(5, 24));
        assert_eq!(degree_wrt_body(&g.pow(2), 1, &b).unwrap(), q(13, 144));
        let lam = q(5, 2);
        let s = degree_of_map(&g.scaled(&lam), &psi, &psi).unwrap();
        assert_eq!(s, q(5, 24) / lam);
        let three = Valuation::<Rational>::volume(2);
        assert!(degree_of_map(&g, &psi, &three).is_err());
    }

    #[test]
    fn spectral_examples() {
        let g = LinearMap::diag(&[3.0, 2.0]);
        assert!((spectral_degree(&g, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((spectral_degree(&g, 2).unwrap() - 1.0).abs() < 1e-15);
        let j = LinearMap::new(vec![vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!((spectral_degree(&j, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!(spectral_degree(&LinearMap::diag(&[1.0, 0.0]), 1).is_err());
    }

    #[test]
    fn box_sequence_matches_closed_form() {
        let g = LinearMap::diag(&[q(3, 1), q(2, 1)]);
        let b = Polytope::<Rational>::unit_cube(2);
        let fast = raw_degree_sequence(&g, 1, &b, 12).unwrap();
        let slow = raw_degree_sequence_enumerated(&g, 1, &b, 12).unwrap();
        for k in 1..=12u32 {
            let closed = diagonal_box_closed_form(&g.diagonal(), 1, k);
            let expect = (num_traits::pow(q(3, 1), k as usize) + num_traits::pow(q(2, 1), k as usize))
                / (q(2, 1) * num_traits::pow(q(6, 1), k as usize));
            assert_eq!(closed, expect);
            assert_eq!(fast[k as usize - 1], expect);
            assert_eq!(slow[k as usize - 1], expect);
        }
    }

    #[test]
    fn compound_path_agrees_with_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=3 {
            let g: LinearMap<Rational> = crate::geometry::random::random_invertible(&mut rng, n);
            let lo: Vec<Rational> = (0..n).map(|j| q(j as i64, 3)).collect();
            let hi: Vec<Rational> = (0..n).map(|j| q(j as i64 + 2, 2)).collect();
            let b = Polytope::axis_box(&lo, &hi).unwrap();
            for p in 0..=n {
                let a = raw_degree_sequence(&g, p, &b, 3).unwrap();
                let e = raw_degree_sequence_enumerated(&g, p, &b, 3).unwrap();
                assert_eq!(a, e, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn empirical_examples() {
        let b = ReferenceBody::<Rational>::cube(2);
        let g = LinearMap::diag(&[q(3, 1), q(2, 1)]);
        let r = dynamical_degree_empirical(&g, 1, &b, 30).unwrap();
        assert!((r.spectral_value - 0.5).abs() < 1e-15);
        for (k, root) in r.roots.iter().enumerate() {
            let k = k as f64 + 1.0;
            let expect = ((3f64.powf(k) + 2f64.powf(k)) / (2.0 * 6f64.powf(k))).powf(1.0 / k);
            assert!((root - expect).abs() < 1e-12);
        }
        assert!(r.submultiplicativity_violations(false, 1e-12).is_empty());
        let id = dynamical_degree_empirical(&LinearMap::<Rational>::identity(2), 1, &b, 8).unwrap();
        assert!(id.roots.iter().all(|r| (r - 1.0).abs() < 1e-15));
        // float and exact agree
        let rf = dynamical_degree_empirical(&g.to_f64(), 1, &ReferenceBody::<f64>::cube(2), 30).unwrap();
        for (x, y) in r.log_raw.iter().zip(&rf.log_raw) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(dynamical_degree_empirical(&g, 1, &b, 3).is_err());
    }

    #[test]
    fn rotation_degree() {
        let b = ball_polytope::<f64>(2, 32).unwrap();
        let g = LinearMap::rotation(0.7);
        let r = dynamical_degree_empirical(&g, 1, &b, 30).unwrap();
        assert!((r.spectral_value - 1.0).abs() < 1e-12);
        assert!(r.final_rel_error() < 0.02);
    }

    #[test]
    fn literal_constant_fails_on_box_example() {
        let b = Polytope::<Rational>::unit_cube(2);
        let g = LinearMap::diag(&[q(3, 1), q(2, 1)]);
        let chk = submultiplicativity(&g, &g, 1, &b).unwrap();
        assert!(chk.holds);
        assert!(!chk.holds_literal);
    }

    #[test]
    fn log_concavity_examples() {
        let r = log_concavity_report(&LinearMap::diag(&[4.0, 2.0, 1.0])).unwrap();
        let expect = [1.0, 4.0, 8.0, 8.0].map(|x| x / 8.0);
        for (a, b) in r.degrees.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(r.margins.iter().all(|&m| m >= 0.0));
        let eq = log_concavity_report(&LinearMap::scalar(3, 2.0)).unwrap();
        assert!(eq.margins.iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn relative_examples() {
        let g = LinearMap::diag(&[q(2, 1), q(3, 1)]);
        let b = ReferenceBody::<Rational>::cube(2);
        let basis = vec![vec![q(1, 1), q(0, 1)]];
        let seg = Polytope::segment_from_origin(vec![q(1, 1), q(0, 1)]).unwrap();
        let r = relative_dynamical_degree(&g, &basis, 1, &seg, &b, 6).unwrap();
        // the quotient map is 3, normalized by det 6
        assert!((r.spectral_value - 0.5).abs() < 1e-12);
        assert!(r.roots.iter().all(|x| (x - 0.5).abs() < 1e-12));
        let long = seg.scale(&q(7, 2));
        let r2 = relative_dynamical_degree(&g, &basis, 1, &long, &b, 6).unwrap();
        assert!(r.log_raw.iter().zip(&r2.log_raw).all(|(x, y)| (x - y).abs() < 1e-13));
        let bad = vec![vec![q(1, 1), q(1, 1)]];
        let diag_seg = Polytope::segment_from_origin(vec![q(1, 1), q(1, 1)]).unwrap();
        assert!(relative_dynamical_degree(&g, &bad, 1, &diag_seg, &b, 6).is_err());
    }

    #[test]
    fn continuity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = LinearMap::diag(&[3.0, 2.0]);
        assert!(continuity_probe(&g, 0.0, 3, &mut rng).unwrap().iter().all(|&d| d == 0.0));
        let dev = continuity_probe(&g, 1e-3, 20, &mut rng).unwrap();
        assert!(dev[1] < 1e-2);
        let j = LinearMap::new(vec![vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let dev = continuity_probe(&j, 1e-3, 20, &mut rng).unwrap();
        assert!(dev[1] < 0.1 * 1e-3f64.sqrt() * 10.0);
    }

    #[test]
    fn invariant_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<Polytope<f64>> =
            (0..5).map(|_| crate::geometry::random::random_full_polytope(&mut rng, 2, 5)).collect();
        let g = LinearMap::diag(&[2.0, 0.5]);
        let inv = invariant_valuation(&g, 1, 64, SubspaceBody::Simplex).unwrap();
        assert!((inv.d - 2.0).abs() < 1e-12);
        assert!(inv.residual(&g, &samples).unwrap() < 1e-10);
        let j = LinearMap::new(vec![vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let inv = invariant_valuation(&j, 1, 64, SubspaceBody::Simplex).unwrap();
        assert!(inv.residual(&j, &samples).unwrap() < 1e-10);
        let lam = LinearMap::scalar(2, 3.0);
        let inv = invariant_valuation(&lam, 1, 64, SubspaceBody::Box).unwrap();
        assert!((inv.d - 1.0 / 3.0).abs() < 1e-12);
        let rot = LinearMap::rotation(1.0).scaled(&2.0);
        let mut last = f64::INFINITY;
        for m in [16, 32, 64] {
            let inv = invariant_valuation(&rot, 1, m, SubspaceBody::Simplex).unwrap();
            assert_eq!(inv.polygon, Some(m));
            let r = inv.orbit_residual(&rot, &samples, 8).unwrap();
            assert!(r < last);
            assert!(inv.residual(&rot, &samples).unwrap() <= r);
            last = r;
        }
    }

    #[test]
    fn vanishing_examples() {
        let b2 = ball_polytope::<f64>(2, 8).unwrap();
        let r = vanishing_check(&LinearMap::diag(&[2.0, 0.5]), 1, 1, &b2, 64).unwrap();
        assert!(r.scalar.abs() <= 1e-10);
        let b3 = ball_polytope::<f64>(3, 12).unwrap();
        let r = vanishing_check(&LinearMap::diag(&[4.0, 2.0, 1.0]), 1, 1, &b3, 64).unwrap();
        assert!(r.scalar.abs() <= 1e-10);
        let b4 = ReferenceBody::<f64>::cube(4);
        let r = vanishing_check(&LinearMap::diag(&[4.0, 3.0, 2.0, 1.0]), 2, 1, &b4, 64).unwrap();
        assert!(r.margin > 0.0 && r.scalar.abs() <= 1e-10);
        let e = vanishing_check(&LinearMap::identity(2), 1, 1, &b2, 64).unwrap_err();
        assert_eq!(e.exit_code(), 5);
        assert!(vanishing_check(&LinearMap::diag(&[4.0, 2.0, 1.0]), 2, 1, &b3, 64).is_err());
    }
}

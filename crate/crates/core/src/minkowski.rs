//! Minkowski-type problem for valuations: find `B` with `vol B = 1` and
//! `psi(N, B[i-1]) = c V(B[n-1], N)` by minimizing `psi(M) / vol(M)^{i/n}`
//! over polytopes with a fixed normal fan. Also the classical planar
//! reconstruction of a polygon from its edge normals and lengths.

use std::cmp::Ordering;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geometry::hull::convex_hull;
use crate::geometry::random::random_full_polytope;
use crate::geometry::{ball_polytope, hausdorff_distance, Polytope, ReferenceBody};
use crate::mixed_volume::{containment_scale, mixed_volume_repeated};
use crate::scalar::Scalar;
use crate::valuation::Valuation;

/// Polytope `{x : <x, u_j> <= h_j}` over a fixed list of unit normals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportVector {
    pub normals: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len == 0.0 || !len.is_finite() {
        return Err(Error::Precondition("zero normal".into()));
    }
    Ok(v.iter().map(|x| x / len).collect())
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `count` unit normals: regular directions in the plane; in higher
/// dimensions `±e_k` followed by a Fibonacci-type sphere sampling.
pub fn normal_fan(n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count < n + 1 {
        return Err(Error::Precondition(format!("fan of {count} normals cannot bound a body in dimension {n}")));
    }
    match n {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..count)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        _ => {
            let mut out: Vec<Vec<f64>> = Vec::new();
            for k in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[k] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(count as u64);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let mut j = 0usize;
            while out.len() < count {
                let v: Vec<f64> = if n == 3 {
                    let m = count.saturating_sub(2 * n).max(1);
                    let z = 1.0 - (2 * (j % m) + 1) as f64 / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * j as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                } else {
                    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
                };
                j += 1;
                let Ok(u) = unit(&v) else { continue };
                if out.iter().all(|w| dotf(w, &u) < 1.0 - 1e-9) {
                    out.push(u);
                }
            }
            Ok(out)
        }
    }
}

/// Edge of the planar polytope on line `j`.
#[derive(Debug, Clone)]
struct Edge {
    len: f64,
    end: [f64; 2],
}

impl SupportVector {
    pub fn new(normals: Vec<Vec<f64>>, h: Vec<f64>) -> Result<Self> {
        if normals.len() != h.len() || normals.is_empty() {
            return Err(Error::Arity { expected: normals.len(), found: h.len() });
        }
        let n = normals[0].len();
        let normals = normals
            .iter()
            .map(|u| {
                check_dim(n, u.len())?;
                unit(u)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SupportVector { normals, h })
    }

    /// Support values of `body` on the given normals.
    pub fn of_body(normals: Vec<Vec<f64>>, body: &Polytope<f64>) -> Result<Self> {
        let h = normals.iter().map(|u| body.support(u)).collect();
        Self::new(normals, h)
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    fn scale_hint(&self) -> f64 {
        self.h.iter().fold(1e-300, |m, x| m.max(x.abs()))
    }

    fn planar_edges(&self) -> Result<Vec<Option<Edge>>> {
        let scale = self.scale_hint();
        let mut edges = Vec::with_capacity(self.h.len());
        for (j, u) in self.normals.iter().enumerate() {
            let d = [-u[1], u[0]];
            let x0 = [self.h[j] * u[0], self.h[j] * u[1]];
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut empty = false;
            for (k, w) in self.normals.iter().enumerate() {
                if k == j {
                    continue;
                }
                let a = d[0] * w[0] + d[1] * w[1];
                let b = self.h[k] - (x0[0] * w[0] + x0[1] * w[1]);
                if a.abs() < 1e-14 {
                    if b < -1e-13 * scale {
                        empty = true;
                    }
                    continue;
                }
                let t = b / a;
                if a > 0.0 {
                    hi = hi.min(t);
                } else if t > lo {
                    lo = t;
                }
            }
            if !hi.is_finite() || !lo.is_finite() {
                return Err(Error::Precondition("normals do not bound a polytope".into()));
            }
            let len = hi - lo;
            edges.push((!empty && len > 1e-13 * scale).then(|| Edge {
                len,
                end: [x0[0] + hi * d[0], x0[1] + hi * d[1]],
            }));
        }
        if edges.iter().filter(|e| e.is_some()).count() < 3 {
            return Err(Error::Precondition("support vector describes an empty or flat polytope".into()));
        }
        Ok(edges)
    }

    /// Interior point by the largest inscribed ball, with its radius.
    fn interior_point(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let t = lp.add_var(1.0, (f64::NEG_INFINITY, self.scale_hint()));
        let x: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        for (u, &hj) in self.normals.iter().zip(&self.h) {
            let mut row = vec![(t, 1.0)];
            row.extend(x.iter().zip(u).map(|(&v, &c)| (v, c)));
            lp.add_constraint(&row[..], ComparisonOp::Le, hj);
        }
        let sol = lp.solve().map_err(|e| Error::Precondition(format!("support vector is infeasible: {e}")))?;
        let r = sol[t];
        if r <= 1e-12 * self.scale_hint() {
            return Err(Error::Precondition("support vector describes an empty or flat polytope".into()));
        }
        Ok((x.iter().map(|&v| sol[v]).collect(), r))
    }

    pub fn polytope(&self) -> Result<Polytope<f64>> {
        let n = self.dim();
        if n == 2 {
            let pts: Vec<Vec<f64>> = self.planar_edges()?.into_iter().flatten().map(|e| e.end.to_vec()).collect();
            return Polytope::from_points(2, pts);
        }
        // vertices are the facets of the polar body around an interior point
        let (c, _) = self.interior_point()?;
        let polar: Vec<Vec<f64>> = self
            .normals
            .iter()
            .zip(&self.h)
            .map(|(u, &hj)| {
                let s = hj - dotf(u, &c);
                u.iter().map(|x| x / s).collect()
            })
            .collect();
        let hull = convex_hull(&polar, n);
        if hull.affine_dim != n {
            return Err(Error::Precondition("normals do not bound a polytope".into()));
        }
        let pts = hull
            .facets
            .iter()
            .map(|f| f.normal.iter().zip(&c).map(|(a, ci)| a / f.offset + ci).collect())
            .collect();
        Polytope::from_points(n, pts)
    }

    /// Lowers every `h_j` to the actual support value; marks facets that
    /// were redundant by more than `tol`.
    pub fn tightened(&self, tol: f64) -> Result<(Self, Vec<bool>)> {
        let p = self.polytope()?;
        let mut redundant = Vec::with_capacity(self.h.len());
        let h = self
            .normals
            .iter()
            .zip(&self.h)
            .map(|(u, &hj)| {
                let s = p.support(u);
                redundant.push(hj > s + tol * self.scale_hint());
                s
            })
            .collect();
        Ok((SupportVector { normals: self.normals.clone(), h }, redundant))
    }

    fn shifted(&self, t: &[f64]) -> Self {
        let h = self.normals.iter().zip(&self.h).map(|(u, &hj)| hj - dotf(u, t)).collect();
        SupportVector { normals: self.normals.clone(), h }
    }

    fn scaled(&self, s: f64) -> Self {
        SupportVector { normals: self.normals.clone(), h: self.h.iter().map(|x| x * s).collect() }
    }
}

/// `(weight, unit normal)` atoms of `psi` for planar degree-1 valuations:
/// `psi(P) = sum_a s_a h_P(u_a)`.
fn planar_atoms(psi: &Valuation<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut atoms = Vec::new();
    for t in psi.terms() {
        let a = &t.bodies[0];
        for (u, len) in surface_data_2d(a)?.0.into_iter().zip(surface_data_2d(a)?.1) {
            atoms.push((t.weight * len / 2.0, u));
        }
    }
    Ok(atoms)
}

enum Objective<'a> {
    /// `n = 2`, `i = 1`: `psi(P) = sum_j s_j h_j` on tight support vectors
    /// once the fan contains the normals of `psi`.
    Planar(Vec<f64>),
    /// `i = n`: constant.
    Flat(f64),
    /// Anything else: mixed-volume engine and finite differences.
    General(&'a Valuation<f64>),
}

impl Objective<'_> {
    /// Objective for `psi`, together with `start` extended (in the plane)
    /// by the edge normals of `psi`.
    fn new(psi: &Valuation<f64>, start: SupportVector) -> Result<(Objective<'_>, SupportVector)> {
        let n = psi.dim();
        if psi.degree() == n {
            return Ok((Objective::Flat(psi.terms().iter().map(|t| t.weight).sum()), start));
        }
        if n != 2 || psi.degree() != 1 {
            return Ok((Objective::General(psi), start));
        }
        let body = start.polytope()?;
        let mut s = start;
        let mut weights = vec![0.0; s.h.len()];
        for (w, u) in planar_atoms(psi)? {
            match s.normals.iter().position(|v| dotf(v, &u) > 1.0 - 1e-14) {
                Some(j) => weights[j] += w,
                None => {
                    s.h.push(body.support(&u));
                    s.normals.push(u);
                    weights.push(w);
                }
            }
        }
        Ok((Objective::Planar(weights), s))
    }

    /// `(psi(P), vol P)`.
    fn parts(&self, s: &SupportVector, degree: usize) -> Result<(f64, f64)> {
        match self {
            Objective::Planar(weights) => {
                let edges = s.planar_edges()?;
                let vol = edges.iter().zip(&s.h).filter_map(|(e, h)| e.as_ref().map(|e| 0.5 * h * e.len)).sum();
                Ok((dotf(weights, &s.h), vol))
            }
            Objective::Flat(c) => {
                let p = s.polytope()?;
                let v = p.volume();
                Ok((c * v, v))
            }
            Objective::General(psi) => {
                let p = s.polytope()?;
                let _ = degree;
                Ok((psi.evaluate(&p)?, p.volume()))
            }
        }
    }

    fn value(&self, s: &SupportVector, degree: usize) -> Result<f64> {
        let n = s.dim() as f64;
        let (psi, vol) = self.parts(s, degree)?;
        Ok(psi / vol.powf(degree as f64 / n))
    }

    /// Value and gradient of `psi(P(h)) / vol(P(h))^{i/n}`.
    fn value_grad(&self, s: &SupportVector, degree: usize) -> Result<(f64, Vec<f64>)> {
        let n = s.dim() as f64;
        let e = degree as f64 / n;
        match self {
            Objective::Planar(weights) => {
                // d vol / d h_j is the length of edge j
                let edges = s.planar_edges()?;
                let mut gvol = vec![0.0; s.h.len()];
                let mut vol = 0.0;
                for (j, ed) in edges.iter().enumerate() {
                    if let Some(ed) = ed {
                        gvol[j] = ed.len;
                        vol += 0.5 * s.h[j] * ed.len;
                    }
                }
                let ve = vol.powf(e);
                let f = dotf(weights, &s.h) / ve;
                let grad = weights.iter().zip(&gvol).map(|(w, gv)| w / ve - e * f * gv / vol).collect();
                Ok((f, grad))
            }
            Objective::Flat(_) => Ok((self.value(s, degree)?, vec![0.0; s.h.len()])),
            Objective::General(_) => {
                let f = self.value(s, degree)?;
                let step = 1e-6 * s.scale_hint();
                let grad = (0..s.h.len())
                    .into_par_iter()
                    .map(|j| {
                        let mut up = s.clone();
                        up.h[j] += step;
                        let mut dn = s.clone();
                        dn.h[j] -= step;
                        match (self.value(&up, degree), self.value(&dn, degree)) {
                            (Ok(a), Ok(b)) => Ok((a - b) / (2.0 * step)),
                            // facet structure breaks on one side: one-sided difference
                            (Ok(a), Err(_)) => Ok((a - f) / step),
                            (Err(_), Ok(b)) => Ok((f - b) / step),
                            (Err(e), Err(_)) => Err(e),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((f, grad))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub fan: usize,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor on rejection.
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub volume_tol: f64,
    pub stationarity_tol: f64,
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    pub starts: usize,
    pub seed: u64,
    /// Resolution of the reference ball used by the positivity certificate.
    pub reference_resolution: usize,
}

impl SolverConfig {
    pub fn for_dim(n: usize) -> Self {
        SolverConfig {
            fan: if n == 2 { 64 } else { 80 },
            max_iters: 4000,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            volume_tol: 1e-9,
            stationarity_tol: 1e-8,
            grad_tol: 1e-11,
            starts: 8,
            seed: 0,
            reference_resolution: 16,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.armijo, self.volume_tol, self.stationarity_tol, self.grad_tol];
        if positive.iter().any(|&x| !(x > 0.0)) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Precondition("solver tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.starts == 0 {
            return Err(Error::Precondition("iteration and start counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiSolution {
    pub body: Polytope<f64>,
    pub support: SupportVector,
    /// `psi(B)` with `vol B = 1`.
    pub c: f64,
    pub volume: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub certificate_epsilon: f64,
    /// A priori containment radius relative to the clip body, if any.
    pub clip_radius: Option<f64>,
}

fn normalize(s: &SupportVector, obj: &Objective<'_>, degree: usize) -> Result<SupportVector> {
    let (tight, _) = s.tightened(1e-12)?;
    let p = tight.polytope()?;
    let c = centroid(&p);
    let shifted = tight.shifted(&c);
    let (_, vol) = obj.parts(&shifted, degree)?;
    Ok(shifted.scaled(vol.powf(-1.0 / s.dim() as f64)))
}

/// Area centroid in the plane, vertex centroid otherwise.
pub fn centroid(p: &Polytope<f64>) -> Vec<f64> {
    if p.dim() == 2 && p.is_full_dimensional() {
        if let Ok(cyc) = polygon_cycle(p) {
            let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for k in 0..cyc.len() {
                let (x0, y0) = (cyc[k][0], cyc[k][1]);
                let (x1, y1) = (cyc[(k + 1) % cyc.len()][0], cyc[(k + 1) % cyc.len()][1]);
                let cr = x0 * y1 - x1 * y0;
                a += cr;
                cx += (x0 + x1) * cr;
                cy += (y0 + y1) * cr;
            }
            return vec![cx / (3.0 * a), cy / (3.0 * a)];
        }
    }
    p.vertex_centroid()
}

/// Minimizes `psi(M)` over fan polytopes with `vol M = 1` from `start`.
pub fn variational_minimize_from(
    psi: &Valuation<f64>,
    cfg: &SolverConfig,
    start: SupportVector,
) -> Result<MinkowskiSolution> {
    cfg.validate()?;
    let n = psi.dim();
    let i = psi.degree();
    check_dim(n, start.dim())?;
    if i == 0 {
        return Err(Error::Precondition("valuation degree must be at least 1".into()));
    }
    let reference = ball_polytope::<f64>(n, cfg.reference_resolution.max(2 * n))?;
    let cert = psi.certify_strict_positivity(&reference, &[])?;
    let (obj, start) = Objective::new(psi, start)?;
    let mut s = normalize(&start, &obj, i)?;
    let (mut f, mut g) = obj.value_grad(&s, i)?;
    // a priori bound: eps V(M, B[n-1]) <= psi(M) <= f0 puts M inside R K with K = eps^{1/(n-1)} B
    let clip = (i == 1 && n > 1).then(|| {
        let k = reference.body.scale(&cert.epsilon.powf(1.0 / (n - 1) as f64));
        (n as f64 * f / k.volume(), k)
    });
    let mut trace = vec![TraceEntry { iter: 0, objective: f, grad_norm: norm(&g), step: 0.0 }];
    let mut alpha = 0.1 / norm(&g).max(1e-300);
    let mut converged = false;
    let mut stalled = 0usize;
    let mut iterations = 0usize;
    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let gn = norm(&g);
        if gn <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let cand = SupportVector {
                normals: s.normals.clone(),
                h: s.h.iter().zip(&g).map(|(h, d)| h - alpha * d).collect(),
            };
            if let Ok(fc) = obj.value(&cand, i) {
                if fc <= f - cfg.armijo * alpha * gn * gn {
                    accepted = Some(cand);
                    break;
                }
            }
            alpha *= cfg.backtrack;
        }
        let Some(cand) = accepted else {
            // no descent at the smallest step: stationary up to round-off
            converged = gn <= cfg.stationarity_tol.sqrt();
            break;
        };
        let next = normalize(&cand, &obj, i)?;
        if let Some((r, k)) = &clip {
            if iter % 50 == 0 {
                let m = next.polytope()?;
                let (_, bound) = containment_scale(k, &m)?;
                if bound > r * (1.0 + 1e-9) {
                    alpha *= cfg.backtrack;
                    continue;
                }
            }
        }
        let (fn_, gn_) = obj.value_grad(&next, i)?;
        if f - fn_ <= 1e-15 * f.abs() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        s = next;
        f = fn_;
        g = gn_;
        trace.push(TraceEntry { iter, objective: f, grad_norm: norm(&g), step: alpha });
        alpha = (alpha * 2.0).min(1e3);
        if stalled >= 30 {
            converged = norm(&g) <= cfg.stationarity_tol.sqrt();
            break;
        }
    }
    let body = s.polytope()?;
    let volume = body.volume();
    let c = psi.evaluate(&body)?;
    if (volume - 1.0).abs() > cfg.volume_tol {
        converged = false;
    }
    Ok(MinkowskiSolution {
        body,
        support: s,
        c,
        volume,
        converged,
        iterations,
        trace,
        certificate_epsilon: cert.epsilon,
        clip_radius: clip.map(|(r, _)| r),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn start_vector(n: usize, cfg: &SolverConfig, start: usize) -> Result<SupportVector> {
    let normals = normal_fan(n, cfg.fan)?;
    if start == 0 {
        let h = vec![1.0; normals.len()];
        return SupportVector::new(normals, h);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(start as u64));
    let body: Polytope<f64> = random_full_polytope(&mut rng, n, 3 * n + 2);
    SupportVector::of_body(normals, &body)
}

/// Single run from the regular fan start.
pub fn variational_minimize(psi: &Valuation<f64>, cfg: &SolverConfig) -> Result<MinkowskiSolution> {
    variational_minimize_from(psi, cfg, start_vector(psi.dim(), cfg, 0)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Stationarity {
    /// `min_N [psi(N, B[i-1]) - psi(B) V(B[n-1], N)]`.
    pub min_gap: f64,
    /// `|gap(B)|`.
    pub eq_gap: f64,
    /// `max_N |gap(N)|`; zero when the identity holds on the whole test set.
    pub max_abs_gap: f64,
    /// Index of the test body attaining `min_gap`.
    pub argmin: usize,
}

/// First-variation gaps of a candidate `B` (with `vol B = 1`) on test bodies.
pub fn stationarity_residual(psi: &Valuation<f64>, b: &Polytope<f64>, tests: &[Polytope<f64>]) -> Result<Stationarity> {
    let n = psi.dim();
    let i = psi.degree();
    check_dim(n, b.dim())?;
    if i == 0 {
        return Err(Error::Precondition("valuation degree must be at least 1".into()));
    }
    let psi_b = psi.evaluate(b)?;
    let gap = |nb: &Polytope<f64>| -> Result<f64> {
        let mut ls: Vec<&Polytope<f64>> = vec![nb];
        ls.extend(std::iter::repeat(b).take(i - 1));
        let lhs = psi.polarized_evaluate(&ls)?;
        let v = mixed_volume_repeated(&[(b, n - 1), (nb, 1)])?;
        Ok(lhs - psi_b * v)
    };
    let gaps = tests.iter().map(&gap).collect::<Result<Vec<f64>>>()?;
    let (argmin, min_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    let max_abs_gap = gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(Stationarity { min_gap, eq_gap: gap(b)?.abs(), max_abs_gap, argmin })
}

/// Random test bodies for [`stationarity_residual`].
pub fn test_bodies(n: usize, count: usize, seed: u64) -> Vec<Polytope<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_full_polytope(&mut rng, n, n + 3)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSet {
    pub solutions: Vec<MinkowskiSolution>,
    /// Pairwise Hausdorff distances after centering.
    pub distances: Vec<Vec<f64>>,
    pub diameter: f64,
    /// Every solution satisfies the a priori containment bound.
    pub within_clip: bool,
}

/// Independent runs from `cfg.starts` seeded starts (run in parallel).
pub fn multistart_solution_set(psi: &Valuation<f64>, cfg: &SolverConfig) -> Result<SolutionSet> {
    cfg.validate()?;
    let n = psi.dim();
    let mut solutions = (0..cfg.starts)
        .into_par_iter()
        .map(|k| variational_minimize_from(psi, cfg, start_vector(n, cfg, k)?))
        .collect::<Result<Vec<_>>>()?;
    for s in &mut solutions {
        let c = centroid(&s.body);
        let neg: Vec<f64> = c.iter().map(|x| -x).collect();
        s.body = s.body.translate(&neg)?;
        s.support = s.support.shifted(&c);
    }
    let m = solutions.len();
    let mut distances = vec![vec![0.0; m]; m];
    let mut diameter: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let d = hausdorff_distance(&solutions[a].body, &solutions[b].body)?;
            distances[a][b] = d;
            distances[b][a] = d;
            diameter = diameter.max(d);
        }
    }
    let reference = ball_polytope::<f64>(n, cfg.reference_resolution.max(2 * n))?;
    let mut within_clip = true;
    for s in &solutions {
        if let Some(r) = s.clip_radius {
            let k = reference.body.scale(&s.certificate_epsilon.powf(1.0 / (n - 1) as f64));
            let (_, bound) = containment_scale(&k, &s.body)?;
            within_clip &= bound <= r * (1.0 + 1e-9);
        }
    }
    Ok(SolutionSet { solutions, distances, diameter, within_clip })
}

/// Pseudo-angle ordering of planar directions, exact in rational mode.
fn angle_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    let half = |v: &[S]| -> u8 {
        if v[1].is_positive() || (v[1].is_zero() && v[0].is_positive()) {
            0
        } else {
            1
        }
    };
    half(a).cmp(&half(b)).then_with(|| {
        let cross = a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone();
        if cross.is_positive() {
            Ordering::Less
        } else if cross.is_negative() {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    })
}

/// Vertices of a full-dimensional polygon in counterclockwise order.
pub fn polygon_cycle<S: Scalar>(p: &Polytope<S>) -> Result<Vec<Vec<S>>> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: p.dim() });
    }
    let verts = p.vertices();
    if verts.len() < 2 {
        return Err(Error::Precondition("polygon has fewer than two vertices".into()));
    }
    let k = S::from_i64(verts.len() as i64);
    let c: Vec<S> = (0..2)
        .map(|j| verts.iter().fold(S::zero(), |acc, v| acc + v[j].clone()) / k.clone())
        .collect();
    let mut cyc = verts.to_vec();
    cyc.sort_by(|a, b| {
        let da = [a[0].clone() - c[0].clone(), a[1].clone() - c[1].clone()];
        let db = [b[0].clone() - c[0].clone(), b[1].clone() - c[1].clone()];
        angle_cmp(&da, &db)
    });
    Ok(cyc)
}

/// Outer edge normals and edge lengths of a polygon (or a segment, which
/// has two opposite edges). Float mode returns unit normals; exact mode
/// returns the edge vector rotated by -90 degrees with length 1.
pub fn surface_data_2d<S: Scalar>(p: &Polytope<S>) -> Result<(Vec<Vec<S>>, Vec<S>)> {
    let cyc = polygon_cycle(p)?;
    let mut normals = Vec::new();
    let mut lengths = Vec::new();
    for k in 0..cyc.len() {
        let (a, b) = (&cyc[k], &cyc[(k + 1) % cyc.len()]);
        let e = [b[0].clone() - a[0].clone(), b[1].clone() - a[1].clone()];
        let u = vec![e[1].clone(), -e[0].clone()];
        match S::MODE {
            crate::scalar::ArithmeticMode::Float => {
                let len = (e[0].to_f64().powi(2) + e[1].to_f64().powi(2)).sqrt();
                normals.push(u.iter().map(|x| S::from_f64(x.to_f64() / len)).collect());
                lengths.push(S::from_f64(len));
            }
            crate::scalar::ArithmeticMode::Exact => {
                normals.push(u);
                lengths.push(S::one());
            }
        }
    }
    Ok((normals, lengths))
}

/// Polygon whose edge with outer normal `u_j` has length `l_j` (edge vector
/// `l_j` times `u_j` turned by +90 degrees), translated so that its area
/// centroid is the origin.
pub fn classical_minkowski_2d<S: Scalar>(normals: &[Vec<S>], lengths: &[S]) -> Result<Polytope<S>> {
    if normals.len() != lengths.len() {
        return Err(Error::Arity { expected: normals.len(), found: lengths.len() });
    }
    for u in normals {
        check_dim(2, u.len())?;
        if u.iter().all(|x| x.is_zero()) {
            return Err(Error::Precondition("zero normal".into()));
        }
    }
    if lengths.iter().any(|l| !l.is_positive()) {
        return Err(Error::Precondition("edge lengths must be positive".into()));
    }
    let scale = lengths.iter().zip(normals).map(|(l, u)| l.to_f64().abs() * (u[0].to_f64().abs() + u[1].to_f64().abs())).sum::<f64>();
    let sx = lengths.iter().zip(normals).fold(S::zero(), |acc, (l, u)| acc + l.clone() * u[0].clone());
    let sy = lengths.iter().zip(normals).fold(S::zero(), |acc, (l, u)| acc + l.clone() * u[1].clone());
    if !sx.is_zero_tol(scale) || !sy.is_zero_tol(scale) {
        return Err(Error::Precondition("edge data is unbalanced: sum of l_j u_j is not zero".into()));
    }
    let mut order: Vec<usize> = (0..normals.len()).collect();
    order.sort_by(|&a, &b| angle_cmp(&normals[a], &normals[b]));
    let first = &normals[order[0]];
    let collinear = normals.iter().all(|u| {
        (first[0].clone() * u[1].clone() - first[1].clone() * u[0].clone()).is_zero_tol(scale)
    });
    if collinear {
        return Err(Error::Precondition("normals are collinear; the polygon is degenerate".into()));
    }
    let mut pts = Vec::with_capacity(normals.len());
    let mut x = vec![S::zero(), S::zero()];
    for &j in &order {
        pts.push(x.clone());
        let u = &normals[j];
        x[0] = x[0].clone() - lengths[j].clone() * u[1].clone();
        x[1] = x[1].clone() + lengths[j].clone() * u[0].clone();
    }
    let poly = Polytope::from_points(2, pts)?;
    let c = area_centroid(&poly)?;
    let neg: Vec<S> = c.iter().map(|v| -v.clone()).collect();
    poly.translate(&neg)
}

fn area_centroid<S: Scalar>(p: &Polytope<S>) -> Result<Vec<S>> {
    let cyc = polygon_cycle(p)?;
    let (mut a, mut cx, mut cy) = (S::zero(), S::zero(), S::zero());
    for k in 0..cyc.len() {
        let (p0, p1) = (&cyc[k], &cyc[(k + 1) % cyc.len()]);
        let cr = p0[0].clone() * p1[1].clone() - p1[0].clone() * p0[1].clone();
        a = a + cr.clone();
        cx = cx + (p0[0].clone() + p1[0].clone()) * cr.clone();
        cy = cy + (p0[1].clone() + p1[1].clone()) * cr;
    }
    let three_a = S::from_i64(3) * a;
    Ok(vec![cx / three_a.clone(), cy / three_a])
}

/// Reference body used by the solver's certificate.
pub fn solver_reference(n: usize, cfg: &SolverConfig) -> Result<ReferenceBody<f64>> {
    ball_polytope(n, cfg.reference_resolution.max(2 * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn square() -> Polytope<f64> {
        Polytope::unit_cube(2)
    }

    #[test]
    fn support_vector_round_trip() {
        let fan = normal_fan(2, 16).unwrap();
        let s = SupportVector::of_body(fan.clone(), &square()).unwrap();
        let p = s.polytope().unwrap();
        assert!((p.volume() - 1.0).abs() < 1e-12);
        assert!(hausdorff_distance(&p, &square()).unwrap() < 1e-12);
        let mut loose = s.clone();
        loose.h[2] += 0.5; // the 45 degree direction
        let (t, red) = loose.tightened(1e-12).unwrap();
        assert!(red[2] && !red[0]);
        assert!((t.h[2] - s.h[2]).abs() < 1e-12);
        let fan3 = normal_fan(3, 30).unwrap();
        let cube = Polytope::<f64>::unit_cube(3);
        let s3 = SupportVector::of_body(fan3, &cube).unwrap();
        assert!((s3.polytope().unwrap().volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn planar_gradient_matches_differences() {
        let psi = Valuation::mixed(2, vec![Polytope::from_points(2, vec![vec![0.0, 0.0], vec![2.0, 0.3], vec![0.5, 1.0]]).unwrap()]).unwrap();
        let fan = normal_fan(2, 12).unwrap();
        let h = (0..12).map(|j| 1.0 + 0.05 * (j as f64).sin()).collect();
        let s = SupportVector::new(fan, h).unwrap();
        let (obj, s) = Objective::new(&psi, s).unwrap();
        let (s, _) = s.tightened(1e-12).unwrap();
        let (f, g) = obj.value_grad(&s, 1).unwrap();
        let p = s.polytope().unwrap();
        assert!((f - psi.evaluate(&p).unwrap() / p.volume().sqrt()).abs() < 1e-12);
        for j in 0..s.h.len() {
            let mut up = s.clone();
            up.h[j] += 1e-6;
            let mut dn = s.clone();
            dn.h[j] -= 1e-6;
            let d = (obj.value(&up, 1).unwrap() - obj.value(&dn, 1).unwrap()) / 2e-6;
            assert!((g[j] - d).abs() < 1e-6, "{j}: {} vs {d}", g[j]);
        }
    }

    #[test]
    fn square_minimizer() {
        let a = square();
        let psi = Valuation::mixed(2, vec![a.clone()]).unwrap();
        let cfg = SolverConfig::for_dim(2);
        let sol = variational_minimize(&psi, &cfg).unwrap();
        assert!(sol.converged);
        assert!((sol.c - 1.0).abs() < 1e-6);
        let c = centroid(&sol.body);
        let centered = sol.body.translate(&c.iter().map(|x| -x).collect::<Vec<_>>()).unwrap();
        let target = a.translate(&[-0.5, -0.5]).unwrap();
        assert!(hausdorff_distance(&centered, &target).unwrap() < 1e-3);
        let st = stationarity_residual(&psi, &sol.body, &test_bodies(2, 10, 1)).unwrap();
        assert!(st.min_gap >= -1e-6 && st.eq_gap <= 1e-8, "{st:?} {}", sol.iterations);
        for w in sol.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-15);
        }
    }

    #[test]
    fn bad_candidate_has_negative_gap() {
        let psi = Valuation::mixed(2, vec![square()]).unwrap();
        let thin = Polytope::axis_box(&[0.0, 0.0], &[4.0, 0.25]).unwrap();
        let st = stationarity_residual(&psi, &thin, &[square(), thin.clone()]).unwrap();
        assert!(st.min_gap < 0.0);
        assert!(st.eq_gap < 1e-12);
    }

    #[test]
    fn volume_degree_is_flat() {
        let psi = Valuation::<f64>::volume(2);
        let mut cfg = SolverConfig::for_dim(2);
        cfg.starts = 3;
        let set = multistart_solution_set(&psi, &cfg).unwrap();
        assert!(set.solutions.iter().all(|s| (s.c - 1.0).abs() < 1e-9));
        assert!(set.diameter > 1e-3);
    }

    #[test]
    fn sum_of_squares_matches_classical() {
        let a1 = square();
        let a2 = Polytope::from_points(2, vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0], vec![-1.0, 1.0]]).unwrap();
        let psi = Valuation::new(
            2,
            1,
            vec![
                crate::valuation::Term { weight: 1.0, bodies: vec![a1.clone()] },
                crate::valuation::Term { weight: 1.0, bodies: vec![a2.clone()] },
            ],
        )
        .unwrap();
        let sol = variational_minimize(&psi, &SolverConfig::for_dim(2)).unwrap();
        let sum = a1.minkowski_sum(&a2).unwrap();
        let (u, l) = surface_data_2d(&sum).unwrap();
        let classical = classical_minkowski_2d(&u, &l).unwrap();
        let target = classical.scale(&(1.0 / classical.volume().sqrt()));
        let c = centroid(&sol.body);
        let centered = sol.body.translate(&c.iter().map(|x| -x).collect::<Vec<_>>()).unwrap();
        assert!(hausdorff_distance(&centered, &target).unwrap() < 1e-3);
        assert!((sol.c - psi.evaluate(&target).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn multistart_collapses() {
        let psi = Valuation::mixed(2, vec![square()]).unwrap();
        let mut cfg = SolverConfig::for_dim(2);
        cfg.starts = 4;
        cfg.seed = 3;
        let set = multistart_solution_set(&psi, &cfg).unwrap();
        assert!(set.diameter <= 1e-4, "diameter {}", set.diameter);
        assert!(set.within_clip);
    }

    #[test]
    fn classical_examples() {
        let u = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let sq = classical_minkowski_2d(&u, &[1.0; 4]).unwrap();
        assert!(hausdorff_distance(&sq, &square().translate(&[-0.5, -0.5]).unwrap()).unwrap() < 1e-12);
        let tri: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let t = classical_minkowski_2d(&tri, &[1.0; 3]).unwrap();
        let (_, lens) = surface_data_2d(&t).unwrap();
        assert_eq!(lens.len(), 3);
        assert!(lens.iter().all(|l| (l - 1.0).abs() < 1e-12));
        assert!(classical_minkowski_2d(&u, &[1.0, 1.0, 2.0, 1.0]).is_err());
        assert!(classical_minkowski_2d(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[1.0, 1.0]).is_err());
        // exact round trip
        let q = |a: i64, b: i64| Rational::from_ratio(a, b);
        let p = Polytope::from_points(
            2,
            vec![vec![q(0, 1), q(0, 1)], vec![q(3, 1), q(1, 2)], vec![q(2, 1), q(5, 2)], vec![q(-1, 3), q(1, 1)]],
        )
        .unwrap();
        let (un, ln) = surface_data_2d(&p).unwrap();
        let r = classical_minkowski_2d(&un, &ln).unwrap();
        let shift = area_centroid(&p).unwrap();
        assert_eq!(r, p.translate(&shift.iter().map(|x| -x.clone()).collect::<Vec<_>>()).unwrap());
        let (un2, ln2) = surface_data_2d(&r).unwrap();
        let mut e1: Vec<_> = un.iter().zip(&ln).collect();
        let mut e2: Vec<_> = un2.iter().zip(&ln2).collect();
        e1.sort_by(|a, b| angle_cmp(a.0, b.0));
        e2.sort_by(|a, b| angle_cmp(a.0, b.0));
        assert_eq!(e1, e2);
    }

    #[test]
    fn three_dimensional_descent() {
        let cube = Polytope::<f64>::unit_cube(3);
        let psi = Valuation::mixed(3, vec![cube.clone(), cube]).unwrap();
        let mut cfg = SolverConfig::for_dim(3);
        cfg.fan = 14;
        cfg.max_iters = 40;
        let sol = variational_minimize(&psi, &cfg).unwrap();
        let first = sol.trace[0].objective;
        assert!(sol.c < first);
        assert!(sol.c >= 1.0 - 1e-9);
        assert!((sol.volume - 1.0).abs() < 1e-9);
    }
}

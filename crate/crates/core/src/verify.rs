//! Seeded battery of invariant checks with a margin per check.
//!
//! Each check draws from its own generator seeded by `(seed, dim, check)`,
//! and every reduction is sequential, so a report is a pure function of
//! the seed and the dimension list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    dynamical_degree_empirical, invariant_valuation, log_concavity_report, SubspaceBody,
};
use crate::error::{Error, Result};
use crate::geometry::random::{random_full_polytope, random_invertible, random_polytope};
use crate::geometry::{hausdorff_distance, LinearMap, Polytope, ReferenceBody};
use crate::mixed_volume::{
    af_margin, containment_scale, mixed_volume, mixed_volume_polarization, mixed_volume_repeated,
    volume_polynomial,
};
use crate::scalar::{Rational, Scalar};
use crate::valuation::{ConvMode, Term, Valuation};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub dim: usize,
    pub samples: usize,
    /// Worst observed value of the checked quantity.
    pub margin: f64,
    /// Pass when `margin` is on the right side of this.
    pub threshold: f64,
    /// `true` when the check needs `margin >= threshold`, else `margin <= threshold`.
    pub lower: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Plain-text report, one line per check.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# verify-suite seed: {} dims: {}\n",
            self.seed,
            self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
        );
        s.push_str("# columns: status check dim samples margin relation threshold\n");
        for c in &self.checks {
            s.push_str(&format!(
                "{} {} {} {} {:.6e} {} {:.1e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.dim,
                c.samples,
                c.margin,
                if c.lower { ">=" } else { "<=" },
                c.threshold
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("# summary: {} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

fn rng_for(seed: u64, dim: usize, check: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((dim as u64) << 32) | check);
    r
}

fn result(name: &str, dim: usize, samples: usize, margin: f64, threshold: f64, lower: bool) -> CheckResult {
    let passed = if lower { margin >= threshold } else { margin <= threshold };
    CheckResult { name: name.into(), dim, samples, margin, threshold, lower, passed: passed && margin.is_finite() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Random map `P D P^{-1}` with distinct positive eigenvalues in `[0.5, 2]`.
pub fn random_diagonalizable<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LinearMap<f64> {
    let p: LinearMap<f64> = random_invertible(rng, n);
    let mut d: Vec<f64> = (0..n).map(|k| 0.5 + 1.5 * (k as f64 + rng.gen_range(0.1..0.9)) / n as f64).collect();
    d.reverse();
    let inv = p.inverse().expect("invertible");
    p.compose(&LinearMap::diag(&d)).and_then(|m| m.compose(&inv)).expect("square")
}

fn oracle_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        if n <= 3 {
            let bodies: Vec<Polytope<Rational>> = (0..n).map(|_| random_polytope(&mut rng, n, n + 2)).collect();
            let refs: Vec<&Polytope<Rational>> = bodies.iter().collect();
            let a = mixed_volume_polarization(&refs)?;
            let b = volume_polynomial(&refs)?.mixed_volume(&vec![1; n]);
            if a != b {
                worst = worst.max(rel(a.to_f64(), b.to_f64()).max(f64::MIN_POSITIVE));
            }
        } else {
            let bodies: Vec<Polytope<f64>> = (0..n).map(|_| random_polytope(&mut rng, n, n + 2)).collect();
            let refs: Vec<&Polytope<f64>> = bodies.iter().collect();
            let a = mixed_volume_polarization(&refs)?;
            let b = volume_polynomial(&refs)?.mixed_volume(&vec![1; n]);
            worst = worst.max(rel(a, b));
        }
    }
    Ok(result("mixed_volume_oracle", n, count, worst, if n <= 3 { 0.0 } else { 1e-9 }, false))
}

fn diagonal_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let k: Polytope<Rational> = random_full_polytope(&mut rng, n, n + 3);
        let v = mixed_volume_repeated(&[(&k, n)])?;
        if v != k.volume() {
            worst = worst.max(rel(v.to_f64(), k.volume().to_f64()).max(f64::MIN_POSITIVE));
        }
    }
    Ok(result("diagonal_identity", n, count, worst, 0.0, false))
}

fn af_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 3);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let k: Polytope<f64> = random_polytope(&mut rng, n, n + 2);
        let l: Polytope<f64> = random_polytope(&mut rng, n, n + 2);
        let rest: Vec<Polytope<f64>> = (0..n - 2).map(|_| random_full_polytope(&mut rng, n, n + 2)).collect();
        let refs: Vec<&Polytope<f64>> = rest.iter().collect();
        worst = worst.min(af_margin(&k, &l, &refs)?);
    }
    Ok(result("alexandrov_fenchel", n, count, worst, -1e-12, true))
}

fn random_valuation<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: usize, terms: usize) -> Result<Valuation<f64>> {
    let terms = (0..terms)
        .map(|_| Term {
            weight: rng.gen_range(0.1..2.0),
            bodies: (0..n - degree).map(|_| random_full_polytope(rng, n, n + 2)).collect(),
        })
        .collect();
    Valuation::new(n, degree, terms)
}

fn unit_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 4);
    let vol = Valuation::<f64>::volume(n);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let deg = rng.gen_range(1..n);
        let phi = random_valuation(&mut rng, n, deg, 2)?;
        let conv = vol.convolve(&phi, ConvMode::Unit)?;
        for _ in 0..3 {
            let l: Polytope<f64> = random_full_polytope(&mut rng, n, n + 2);
            worst = worst.max(rel(conv.evaluate(&l)?, phi.evaluate(&l)?));
        }
    }
    Ok(result("convolution_unit", n, count, worst, 1e-10, false))
}

fn reverse_kt_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 5);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let k = rng.gen_range(1..n);
        let phi = random_valuation(&mut rng, n, k, 2)?;
        let psi = random_valuation(&mut rng, n, n - k, 2)?;
        let body: Polytope<f64> = random_full_polytope(&mut rng, n, n + 3);
        let lhs = phi.evaluate(&body)? * psi.evaluate(&body)?;
        let rhs = body.volume() * phi.convolve(&psi, ConvMode::Paper)?.constant()?;
        worst = worst.min((lhs - rhs) / lhs.abs().max(1e-300));
    }
    Ok(result("reverse_khovanskii_teissier", n, count, worst, -1e-12, true))
}

fn log_concavity_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 6);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let g: LinearMap<f64> = random_invertible(&mut rng, n);
        let rep = log_concavity_report(&g)?;
        worst = rep.relative_margins().into_iter().fold(worst, f64::min);
    }
    Ok(result("log_concavity", n, count, worst, -1e-12, true))
}

fn submultiplicativity_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 7);
    let b = ReferenceBody::<f64>::cube(n);
    let mut violations = 0usize;
    for _ in 0..count {
        let g: LinearMap<f64> = random_invertible(&mut rng, n);
        let codeg = rng.gen_range(1..n);
        let rep = dynamical_degree_empirical(&g, codeg, &b, 10)?;
        violations += rep.submultiplicativity_violations(false, 1e-9).len();
    }
    Ok(result("degree_submultiplicativity", n, count, violations as f64, 0.0, false))
}

fn containment_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 8);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let k: Polytope<f64> = random_full_polytope(&mut rng, n, n + 2);
        let m: Polytope<f64> = random_polytope(&mut rng, n, n + 2);
        let (exact, bound) = containment_scale(&k, &m)?;
        worst = worst.min((bound - exact) / bound.abs().max(1e-300));
    }
    Ok(result("containment_bound", n, count, worst, -1e-9, true))
}

fn hausdorff_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 9);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let p: Vec<Polytope<f64>> = (0..3).map(|_| random_polytope(&mut rng, n, n + 2)).collect();
        let d = |a: usize, b: usize| hausdorff_distance(&p[a], &p[b]);
        let (ab, bc, ac, ba) = (d(0, 1)?, d(1, 2)?, d(0, 2)?, d(1, 0)?);
        worst = worst.min(ab + bc - ac).min(-(ab - ba).abs()).min(-d(0, 0)?);
    }
    Ok(result("hausdorff_metric", n, count, worst, -1e-9, true))
}

fn functoriality_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let deg = rng.gen_range(1..n);
        let phi = random_valuation(&mut rng, n, deg, 2)?;
        let g: LinearMap<f64> = random_invertible(&mut rng, n);
        let h: LinearMap<f64> = random_invertible(&mut rng, n);
        let a = phi.group_action(&g.compose(&h)?)?;
        let b = phi.group_action(&h)?.group_action(&g)?;
        let l: Polytope<f64> = random_full_polytope(&mut rng, n, n + 2);
        worst = worst.max(rel(a.evaluate(&l)?, b.evaluate(&l)?));
    }
    Ok(result("action_functoriality", n, count, worst, 1e-9, false))
}

fn invariant_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 11);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let g = random_diagonalizable(&mut rng, n);
        let codeg = rng.gen_range(1..n);
        let inv = invariant_valuation(&g, codeg, 64, SubspaceBody::Simplex)?;
        let samples: Vec<Polytope<f64>> = (0..10).map(|_| random_full_polytope(&mut rng, n, n + 2)).collect();
        worst = worst.max(inv.residual(&g, &samples)?);
    }
    Ok(result("invariant_residual", n, count, worst, 1e-8, false))
}

fn multilinearity_check(n: usize, seed: u64, count: usize) -> Result<CheckResult> {
    let mut rng = rng_for(seed, n, 12);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let k: Polytope<f64> = random_polytope(&mut rng, n, n + 1);
        let k2: Polytope<f64> = random_polytope(&mut rng, n, n + 1);
        let rest: Vec<Polytope<f64>> = (0..n - 1).map(|_| random_polytope(&mut rng, n, n + 1)).collect();
        let (a, b) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let comb = k.scale(&a).minkowski_sum(&k2.scale(&b))?;
        let with = |first: &Polytope<f64>| -> Result<f64> {
            let mut t = vec![first];
            t.extend(rest.iter());
            mixed_volume(&t)
        };
        let lhs = with(&comb)?;
        let rhs = a * with(&k)? + b * with(&k2)?;
        let scale = comb.volume().max(k.volume()).max(1e-300);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(scale));
    }
    Ok(result("multilinearity", n, count, worst, 1e-9, false))
}

/// Runs the battery over `dims` (each in 2..=4).
pub fn run_suite(seed: u64, dims: &[usize]) -> Result<SuiteReport> {
    if dims.is_empty() {
        return Err(Error::Precondition("no dimensions given".into()));
    }
    let mut checks = Vec::new();
    for &n in dims {
        if !(2..=4).contains(&n) {
            return Err(Error::Precondition(format!("dimension {n} outside 2..=4")));
        }
        let small = n == 4;
        checks.push(oracle_check(n, seed, if small { 4 } else { 20 })?);
        checks.push(diagonal_check(n, seed, if small { 5 } else { 20 })?);
        checks.push(multilinearity_check(n, seed, if small { 5 } else { 20 })?);
        checks.push(af_check(n, seed, if small { 5 } else { 40 })?);
        checks.push(containment_check(n, seed, 20)?);
        checks.push(hausdorff_check(n, seed, 20)?);
        checks.push(unit_check(n, seed, if small { 3 } else { 10 })?);
        checks.push(reverse_kt_check(n, seed, if small { 5 } else { 30 })?);
        checks.push(functoriality_check(n, seed, if small { 3 } else { 10 })?);
        checks.push(log_concavity_check(n, seed, 50)?);
        checks.push(submultiplicativity_check(n, seed, if small { 2 } else { 5 })?);
        checks.push(invariant_check(n, seed, if small { 2 } else { 5 })?);
    }
    Ok(SuiteReport { seed, dims: dims.to_vec(), checks })
}

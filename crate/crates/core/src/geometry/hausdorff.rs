use crate::error::{check_dim, Result};
use crate::linalg;
use crate::scalar::Scalar;

use super::polytope::Polytope;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Point of minimum Euclidean norm in `conv(points)` (Wolfe's algorithm).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = 1e-14;
    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .expect("nonempty");
    let mut set = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();
    for _ in 0..50 * (points.len() + n) {
        let j = (0..points.len())
            .min_by(|&a, &b| dot(&x, &points[a]).total_cmp(&dot(&x, &points[b])))
            .expect("nonempty");
        if dot(&x, &x) - dot(&x, &points[j]) <= eps * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        loop {
            // affine minimizer over the current set
            let k = set.len();
            let mut m = vec![vec![0.0; k + 1]; k + 1];
            for a in 0..k {
                for b in 0..k {
                    m[a][b] = dot(&points[set[a]], &points[set[b]]);
                }
                m[a][k] = 1.0;
                m[k][a] = 1.0;
            }
            let mut rhs = vec![0.0; k + 1];
            rhs[k] = 1.0;
            let Some(sol) = linalg::solve(&m, &rhs) else {
                set.pop();
                w.pop();
                break;
            };
            let v = &sol[..k];
            if v.iter().all(|&t| t > eps) {
                w = v.to_vec();
                break;
            }
            let mut theta = 1.0f64;
            for a in 0..k {
                if v[a] <= eps && w[a] - v[a] > 0.0 {
                    theta = theta.min(w[a] / (w[a] - v[a]));
                }
            }
            for a in 0..k {
                w[a] = (1.0 - theta) * w[a] + theta * v[a];
            }
            let mut a = 0;
            while a < set.len() {
                if w[a] <= eps {
                    set.remove(a);
                    w.remove(a);
                } else {
                    a += 1;
                }
            }
            if set.len() == 1 {
                w = vec![1.0];
                break;
            }
        }
        x = vec![0.0; n];
        for (&i, &wi) in set.iter().zip(&w) {
            for (xk, pk) in x.iter_mut().zip(&points[i]) {
                *xk += wi * pk;
            }
        }
    }
    x
}

/// Euclidean distance from `x` to the polytope.
pub fn distance_to<S: Scalar>(p: &Polytope<S>, x: &[f64]) -> f64 {
    let shifted: Vec<Vec<f64>> = p
        .vertices()
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a.to_f64() - b).collect())
        .collect();
    let y = min_norm_point(&shifted);
    dot(&y, &y).sqrt()
}

fn directed<S: Scalar>(p: &Polytope<S>, q: &Polytope<S>) -> f64 {
    p.vertices()
        .iter()
        .map(|v| {
            let x: Vec<f64> = v.iter().map(Scalar::to_f64).collect();
            distance_to(q, &x)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance in the Euclidean norm.
pub fn hausdorff_distance<S: Scalar>(p: &Polytope<S>, q: &Polytope<S>) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    if p == q {
        return Ok(0.0);
    }
    Ok(directed(p, q).max(directed(q, p)))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::polytope::Polytope;

/// Polytopal stand-in for the Euclidean unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBody<S: Scalar = f64> {
    pub id: String,
    pub body: Polytope<S>,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub id: String,
    pub resolution: usize,
}

impl<S: Scalar> ReferenceBody<S> {
    /// Wraps an arbitrary body after checking it is full-dimensional,
    /// origin-symmetric and has the origin in its interior.
    pub fn custom(id: impl Into<String>, body: Polytope<S>) -> Result<Self> {
        if !body.is_full_dimensional() {
            return Err(Error::Precondition("reference body must be full-dimensional".into()));
        }
        if !body.is_origin_symmetric() {
            return Err(Error::Precondition("reference body must be origin-symmetric".into()));
        }
        Ok(ReferenceBody { id: id.into(), body, resolution: 0 })
    }

    /// The cube `[-1,1]^n`; exact in every arithmetic mode.
    pub fn cube(n: usize) -> Self {
        let one = vec![S::one(); n];
        let neg: Vec<S> = one.iter().map(|x| -x.clone()).collect();
        ReferenceBody {
            id: format!("cube-d{n}"),
            body: Polytope::axis_box(&neg, &one).expect("valid box"),
            resolution: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn volume(&self) -> S {
        self.body.volume()
    }

    pub fn info(&self) -> ReferenceInfo {
        ReferenceInfo { id: self.id.clone(), resolution: self.resolution }
    }
}

/// Polytopal approximation of the unit ball.
///
/// Dimension 2 gives the regular `2m`-gon inscribed in the unit circle,
/// dimension 3 the hull of a symmetric `m`-point sphere sampling, higher
/// dimensions the cube scaled to unit circumradius.
pub fn ball_polytope<S: Scalar>(n: usize, m: usize) -> Result<ReferenceBody<S>> {
    if n == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    if m < 2 * n {
        return Err(Error::Precondition(format!("resolution {m} below 2n = {}", 2 * n)));
    }
    let half: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0]],
        2 => (0..m)
            .map(|k| {
                let t = PI * k as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let k = m.div_ceil(2);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..k)
                .map(|j| {
                    let z = 1.0 - (2 * j + 1) as f64 / k as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * j as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let c = 1.0 / (n as f64).sqrt();
            (0..1u64 << (n - 1))
                .map(|mask| {
                    let mut v = vec![c; n];
                    for (k, x) in v.iter_mut().enumerate().skip(1) {
                        if mask >> (k - 1) & 1 == 1 {
                            *x = -c;
                        }
                    }
                    v
                })
                .collect()
        }
    };
    // negate after rounding so the body is exactly symmetric
    let mut pts: Vec<Vec<S>> = half.iter().map(|v| v.iter().map(|&x| S::from_f64(x)).collect()).collect();
    let neg: Vec<Vec<S>> = pts.iter().map(|v| v.iter().map(|x| -x.clone()).collect()).collect();
    pts.extend(neg);
    let body = Polytope::from_points(n, pts)?;
    if !body.is_full_dimensional() {
        return Err(Error::Precondition("resolution too small for a full-dimensional sampling".into()));
    }
    Ok(ReferenceBody { id: format!("ball-d{n}-m{m}"), body, resolution: m })
}

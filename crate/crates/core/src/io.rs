//! JSON encodings of bodies, matrices and valuations.
//!
//! Numbers may be JSON numbers or strings holding decimals or `p/q`
//! fractions. In exact mode a JSON number is read from its decimal text,
//! so `0.1` becomes `1/10`.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{LinearMap, Polytope, ReferenceBody};
use crate::scalar::Scalar;
use crate::valuation::{Term, Valuation};

fn parse_err(what: impl Into<String>) -> Error {
    Error::Parse(what.into())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Value> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_scalar<S: Scalar>(v: &Value) -> Result<S> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(parse_err(format!("expected a number, found {other}"))),
    };
    let x = S::parse_literal(&text).ok_or_else(|| parse_err(format!("bad number {text:?}")))?;
    if !x.to_f64().is_finite() {
        return Err(parse_err(format!("non-finite number {text:?}")));
    }
    Ok(x)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| parse_err(format!("missing field {key:?}")))
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    field(v, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(format!("field {key:?} must be a nonnegative integer")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what} must be an array")))
}

fn parse_rows<S: Scalar>(v: &Value, width: usize, what: &str) -> Result<Vec<Vec<S>>> {
    array(v, what)?
        .iter()
        .map(|row| {
            let row = array(row, what)?;
            if row.len() != width {
                return Err(parse_err(format!("{what}: row of length {} in dimension {width}", row.len())));
            }
            row.iter().map(parse_scalar).collect()
        })
        .collect()
}

/// `{"dim": n, "vertices": [[...], ...]}`.
pub fn parse_body<S: Scalar>(v: &Value) -> Result<Polytope<S>> {
    let n = usize_field(v, "dim")?;
    if n == 0 {
        return Err(parse_err("dimension must be positive"));
    }
    let pts = parse_rows(field(v, "vertices")?, n, "vertices")?;
    if pts.is_empty() {
        return Err(parse_err("body has no vertices"));
    }
    Polytope::from_points(n, pts).map_err(|e| parse_err(e.to_string()))
}

/// `{"dim": n, "rows": [[...], ...]}`.
pub fn parse_matrix<S: Scalar>(v: &Value) -> Result<LinearMap<S>> {
    let n = usize_field(v, "dim")?;
    let rows = parse_rows(field(v, "rows")?, n, "rows")?;
    if rows.len() != n {
        return Err(parse_err(format!("matrix has {} rows in dimension {n}", rows.len())));
    }
    LinearMap::new(rows).map_err(|e| parse_err(e.to_string()))
}

/// `{"dim": n, "degree": i, "terms": [{"weight": w, "bodies": [body, ...]}]}`.
pub fn parse_valuation<S: Scalar>(v: &Value) -> Result<Valuation<S>> {
    let n = usize_field(v, "dim")?;
    let degree = usize_field(v, "degree")?;
    let terms = array(field(v, "terms")?, "terms")?
        .iter()
        .map(|t| {
            let weight = parse_scalar(field(t, "weight")?)?;
            let bodies = array(field(t, "bodies")?, "bodies")?
                .iter()
                .map(parse_body)
                .collect::<Result<Vec<_>>>()?;
            Ok(Term { weight, bodies })
        })
        .collect::<Result<Vec<_>>>()?;
    Valuation::new(n, degree, terms).map_err(|e| parse_err(e.to_string()))
}

pub fn body_to_json<S: Scalar>(p: &Polytope<S>) -> Value {
    json!({
        "dim": p.dim(),
        "vertices": p.vertices().iter().map(|v| v.iter().map(Scalar::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn matrix_to_json<S: Scalar>(g: &LinearMap<S>) -> Value {
    json!({
        "dim": g.dim(),
        "rows": g.rows().iter().map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn valuation_to_json<S: Scalar>(v: &Valuation<S>) -> Value {
    json!({
        "dim": v.dim(),
        "degree": v.degree(),
        "terms": v.terms().iter().map(|t| json!({
            "weight": t.weight.to_json(),
            "bodies": t.bodies.iter().map(body_to_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Reference body from a named choice: `cube`, `ball` or `ball:<m>`.
pub fn named_reference<S: Scalar>(name: &str, n: usize) -> Result<ReferenceBody<S>> {
    match name {
        "cube" => Ok(ReferenceBody::cube(n)),
        "ball" => crate::geometry::ball_polytope(n, if n == 2 { 32 } else { 8 * n }),
        _ => match name.strip_prefix("ball:").map(str::parse::<usize>) {
            Some(Ok(m)) => crate::geometry::ball_polytope(n, m),
            _ => Err(Error::Precondition(format!("unknown reference body {name:?}"))),
        },
    }
}

/// Reference body read from a body file. The body is moved so that its
/// vertex centroid is the origin; symmetry is required only when `symmetric`.
pub fn reference_from_body<S: Scalar>(id: &str, body: Polytope<S>, symmetric: bool) -> Result<ReferenceBody<S>> {
    if !body.is_full_dimensional() {
        return Err(Error::Precondition("reference body must be full-dimensional".into()));
    }
    let c: Vec<S> = body.vertex_centroid().into_iter().map(|x| -x).collect();
    let centered = body.translate(&c)?;
    if symmetric {
        ReferenceBody::custom(id, centered)
    } else {
        Ok(ReferenceBody { id: id.to_string(), body: centered, resolution: 0 })
    }
}

/// Turns a JSON config object into command-line flags. Keys are flag names
/// without the leading dashes; booleans become bare flags, arrays are joined
/// with commas.
pub fn config_to_args(v: &Value) -> Result<Vec<String>> {
    let obj: &Map<String, Value> = v.as_object().ok_or_else(|| parse_err("config must be a JSON object"))?;
    let mut out = Vec::new();
    for (k, val) in obj {
        let flag = format!("--{}", k.replace('_', "-"));
        let scalar = |x: &Value| -> Result<String> {
            match x {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                other => Err(parse_err(format!("config value for {k:?} must be a string or number, found {other}"))),
            }
        };
        match val {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                out.push(flag);
                out.push(items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(other)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn body_round_trip() {
        let v: Value = serde_json::from_str(r#"{"dim":2,"vertices":[[0,0],["1/2",0],[0,0.1],["1/2","1/10"]]}"#).unwrap();
        let p: Polytope<Rational> = parse_body(&v).unwrap();
        assert_eq!(p.volume(), Rational::from_ratio(1, 20));
        let back: Polytope<Rational> = parse_body(&body_to_json(&p)).unwrap();
        assert_eq!(back, p);
        let f: Polytope<f64> = parse_body(&v).unwrap();
        assert!((f.volume() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn malformed_inputs() {
        let bad = [
            r#"{"dim":2}"#,
            r#"{"dim":2,"vertices":[[0,0,0]]}"#,
            r#"{"dim":2,"vertices":[["x",0]]}"#,
            r#"{"dim":2,"vertices":[]}"#,
            r#"{"dim":2,"vertices":[["1/0",0]]}"#,
        ];
        for b in bad {
            let v: Value = serde_json::from_str(b).unwrap();
            let e = parse_body::<f64>(&v).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{b}");
        }
        let m: Value = serde_json::from_str(r#"{"dim":2,"rows":[[1,0]]}"#).unwrap();
        assert_eq!(parse_matrix::<f64>(&m).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn valuation_round_trip() {
        let text = r#"{"dim":2,"degree":1,"terms":[{"weight":"3/2","bodies":[{"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1]]}]}]}"#;
        let v: Valuation<Rational> = parse_valuation(&serde_json::from_str(text).unwrap()).unwrap();
        let sq = Polytope::<Rational>::unit_cube(2);
        assert_eq!(v.evaluate(&sq).unwrap(), Rational::from_ratio(3, 2));
        let back: Valuation<Rational> = parse_valuation(&valuation_to_json(&v)).unwrap();
        assert_eq!(back, v);
        let bad = r#"{"dim":2,"degree":1,"terms":[{"weight":1,"bodies":[]}]}"#;
        assert!(parse_valuation::<f64>(&serde_json::from_str(bad).unwrap()).is_err());
    }

    #[test]
    fn config_flags() {
        let v: Value = serde_json::from_str(r#"{"kmax":30,"conv_mode":"paper","dims":[2,3],"exact":true,"quiet":false}"#).unwrap();
        let args = config_to_args(&v).unwrap();
        assert_eq!(args, ["--conv-mode", "paper", "--dims", "2,3", "--exact", "--kmax", "30"]);
    }
}

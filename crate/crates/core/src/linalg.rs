//! Small dense linear algebra over a [`Scalar`] field.
//!
//! Float mode uses partial pivoting by magnitude; exact mode takes the first
//! nonzero pivot.

use crate::scalar::Scalar;

fn pick_pivot<S: Scalar>(m: &[Vec<S>], col: usize, from: usize, scale: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (r, row) in m.iter().enumerate().skip(from) {
        if row[col].is_zero_tol(scale) {
            continue;
        }
        let mag = row[col].to_f64().abs();
        match best {
            None => best = Some((r, mag)),
            Some((_, b)) if mag > b => best = Some((r, mag)),
            _ => {}
        }
    }
    best.map(|(r, _)| r)
}

fn max_abs<S: Scalar>(m: &[Vec<S>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
}

/// Determinant of a square matrix.
pub fn determinant<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    if n == 0 {
        return S::one();
    }
    let mut a: Vec<Vec<S>> = m.to_vec();
    let scale = max_abs(&a).max(f64::MIN_POSITIVE) * 1e-6;
    let mut det = S::one();
    for col in 0..n {
        let Some(p) = pick_pivot(&a, col, col, scale) else {
            return S::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det = det * pivot.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / pivot.clone();
            for c in col..n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    det
}

/// Solves `m x = rhs`; `None` when singular.
pub fn solve<S: Scalar>(m: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let scale = max_abs(m).max(f64::MIN_POSITIVE) * 1e-3;
    for col in 0..n {
        let p = pick_pivot(&a, col, col, scale)?;
        a.swap(p, col);
        let pivot = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / pivot.clone();
            for c in col..=n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
    }
    Some((0..n).map(|i| a[i][n].clone() / a[i][i].clone()).collect())
}

/// A nonzero vector orthogonal to every row of a `(d-1) x d` matrix of full
/// row rank. `None` if the rows are dependent.
pub fn normal_vector<S: Scalar>(rows: &[Vec<S>], d: usize) -> Option<Vec<S>> {
    let mut a: Vec<Vec<S>> = rows.to_vec();
    let scale = max_abs(&a).max(f64::MIN_POSITIVE);
    let mut pivot_cols = Vec::with_capacity(a.len());
    let mut row = 0;
    for col in 0..d {
        if row == a.len() {
            break;
        }
        let Some(p) = pick_pivot(&a, col, row, scale) else {
            continue;
        };
        a.swap(p, row);
        let pivot = a[row][col].clone();
        for c in col..d {
            a[row][c] = a[row][c].clone() / pivot.clone();
        }
        for r in 0..a.len() {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in col..d {
                let v = a[row][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    if pivot_cols.len() != rows.len() {
        return None;
    }
    let free = (0..d).find(|c| !pivot_cols.contains(c))?;
    let mut x = vec![S::zero(); d];
    x[free] = S::one();
    for (r, &pc) in pivot_cols.iter().enumerate() {
        x[pc] = -a[r][free].clone();
    }
    Some(x)
}

/// Rank of a set of vectors (rows).
pub fn rank<S: Scalar>(rows: &[Vec<S>], scale: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let d = rows[0].len();
    let mut a: Vec<Vec<S>> = rows.to_vec();
    let mut row = 0;
    for col in 0..d {
        if row == a.len() {
            break;
        }
        let Some(p) = pick_pivot(&a, col, row, scale) else {
            continue;
        };
        a.swap(p, row);
        let pivot = a[row][col].clone();
        for r in row + 1..a.len() {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / pivot.clone();
            for c in col..d {
                let v = a[row][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
        }
        row += 1;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d)
    }

    #[test]
    fn exact_determinant() {
        let m = vec![
            vec![q(2, 1), q(1, 1), q(0, 1)],
            vec![q(1, 1), q(3, 1), q(1, 1)],
            vec![q(0, 1), q(1, 1), q(4, 1)],
        ];
        // 2(12-1) - 1(4-0) = 18
        assert_eq!(determinant(&m), q(18, 1));
    }

    #[test]
    fn solve_and_normal() {
        let m = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let x = solve(&m, &[5.0, 6.0]).unwrap();
        assert!((x[0] + 4.0).abs() < 1e-12 && (x[1] - 4.5).abs() < 1e-12);
        let n = normal_vector(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]], 3).unwrap();
        assert!((n[0] + n[1]).abs() < 1e-12 && (n[1] + n[2]).abs() < 1e-12);
    }

    #[test]
    fn singular_cases() {
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]).is_none());
        assert_eq!(rank(&[vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]], 1.0), 1);
    }
}

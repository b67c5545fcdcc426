//! Small dense linear algebra on row-major `n x n` matrices.

use crate::error::{Error, Result};

/// Minimum absolute pivot accepted by [`Lu::factor`].
pub const PIVOT_FLOOR: f64 = 1e-10;

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::shape(format!("LU: expected {n}x{n} matrix")));
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_abs > PIVOT_FLOOR) {
                return Err(Error::Numeric(format!(
                    "singular matrix: pivot {pivot_abs:e} in column {col}"
                )));
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for k in col + 1..n {
                    lu[r * n + k] -= factor * lu[col * n + k];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for k in 0..r {
                y[r] -= self.lu[r * n + k] * y[k];
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                y[r] -= self.lu[r * n + k] * y[k];
            }
            y[r] /= self.lu[r * n + r];
        }
        y
    }
}

/// Orthonormalizes the rows of a square matrix by modified Gram-Schmidt.
/// Returns `None` when the rows are numerically dependent.
pub fn orthonormalize(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut q = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            let dot: f64 = (0..n).map(|k| q[i * n + k] * q[j * n + k]).sum();
            for k in 0..n {
                q[i * n + k] -= dot * q[j * n + k];
            }
        }
        let norm = (0..n).map(|k| q[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for k in 0..n {
            q[i * n + k] /= norm;
        }
    }
    Some(q)
}

pub fn matvec(a: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| dot(&a[r * cols..(r + 1) * cols], x))
        .collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Median of a non-empty slice (mean of the middle two for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Rounds every value to the nearest `f32`, the precision used on disk.
pub fn round_f32(values: &mut [f64]) {
    for v in values {
        *v = *v as f32 as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let lu = Lu::factor(&a, 2).unwrap();
        let x = lu.solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(Lu::factor(&a, 2).is_err());
    }

    #[test]
    fn orthonormal_rows() {
        let a = [1.0, 2.0, 0.5, 0.3, -1.0, 2.0, 0.7, 0.1, 1.0];
        let q = orthonormalize(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&q[i * 3..i * 3 + 3], &q[j * 3..j * 3 + 3]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

//! Tridiagonal storage, the Thomas solve, and Sturm-sequence eigenvalue
//! counting for symmetric tridiagonal matrices.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real tridiagonal matrix stored by diagonals.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len() + 1, diag.len());
        assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = x[i] * self.diag[i];
                if i > 0 {
                    y += x[i - 1] * self.lower[i - 1];
                }
                if i + 1 < n {
                    y += x[i + 1] * self.upper[i];
                }
                y
            })
            .collect()
    }

    /// Largest |A - A^T| entry.
    pub fn asymmetry(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (l - u).abs())
            .fold(0.0, f64::max)
    }

    /// Banded text dump: one line per diagonal, `offset v0 v1 ...`.
    pub fn to_banded_text(&self) -> String {
        let mut out = String::new();
        for (offset, values) in [(-1, &self.lower), (0, &self.diag), (1, &self.upper)] {
            let _ = write!(out, "{offset}");
            for v in values.iter() {
                let _ = write!(out, " {v:.17e}");
            }
            out.push('\n');
        }
        out
    }

    /// Symmetric tridiagonal obtained by the similarity `W^{1/2} A W^{-1/2}`,
    /// valid when `W A` is symmetric.
    pub fn symmetrize_with_weights(&self, weights: &[f64]) -> Tridiagonal {
        let n = self.len();
        assert_eq!(weights.len(), n);
        let off: Vec<f64> = (0..n.saturating_sub(1))
            .map(|i| {
                let s = (weights[i] / weights[i + 1]).sqrt();
                // entry (i, i+1) scaled: sqrt(w_i) a_{i,i+1} / sqrt(w_{i+1})
                self.upper[i] * s
            })
            .collect();
        Tridiagonal::new(off.clone(), self.diag.clone(), off)
    }
}

/// Solve `(diag_shift * I + scale * A) x = rhs` in place for a real
/// tridiagonal `A` and complex scalars. This is the shape every
/// Crank–Nicolson step needs.
pub fn solve_shifted(
    a: &Tridiagonal,
    diag_shift: &[Complex64],
    scale: Complex64,
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = a.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(diag_shift.len(), n);
    let lower: Vec<Complex64> = a.lower.iter().map(|&l| scale * l).collect();
    let upper: Vec<Complex64> = a.upper.iter().map(|&u| scale * u).collect();
    let diag: Vec<Complex64> = a
        .diag
        .iter()
        .zip(diag_shift)
        .map(|(&d, &s)| s + scale * d)
        .collect();
    solve_complex(&lower, &diag, &upper, rhs)
}

/// Thomas algorithm for a general complex tridiagonal system, in place.
pub fn solve_complex(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut beta = diag[0];
    if beta.norm() == 0.0 {
        return Err(Error::SingularTridiagonal(0));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if beta.norm() == 0.0 || !beta.re.is_finite() || !beta.im.is_finite() {
            return Err(Error::SingularTridiagonal(i));
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
    Ok(())
}

/// Number of eigenvalues of the symmetric tridiagonal `t` strictly below
/// `x`, from the signs of the LDL^T pivots of `t - x I`.
pub fn sturm_count(t: &Tridiagonal, x: f64) -> usize {
    let n = t.len();
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..n {
        let off2 = if i > 0 { t.lower[i - 1] * t.lower[i - 1] } else { 0.0 };
        d = t.diag[i] - x - if i > 0 { off2 / d } else { 0.0 };
        if d == 0.0 {
            d = -f64::EPSILON * (t.diag[i].abs() + x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval enclosing the spectrum.
pub fn gershgorin(t: &Tridiagonal) -> (f64, f64) {
    let n = t.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += t.lower[i - 1].abs();
        }
        if i + 1 < n {
            r += t.upper[i].abs();
        }
        lo = lo.min(t.diag[i] - r);
        hi = hi.max(t.diag[i] + r);
    }
    (lo, hi)
}

/// All eigenvalues of the symmetric tridiagonal `t` in `[lo, hi)`, each
/// located by bisection on the Sturm count to absolute width `tol`.
/// Returns `(value, half_width)` pairs in increasing order.
pub fn eigenvalues_in(t: &Tridiagonal, lo: f64, hi: f64, tol: f64) -> Vec<(f64, f64)> {
    let n_lo = sturm_count(t, lo);
    let n_hi = sturm_count(t, hi);
    let mut out = Vec::with_capacity(n_hi.saturating_sub(n_lo));
    for k in n_lo..n_hi {
        // the k-th eigenvalue (0-based) lies where the count steps from k to k+1
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if sturm_count(t, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push((0.5 * (a + b), 0.5 * (b - a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Tridiagonal {
        Tridiagonal::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn thomas_matches_product() {
        let a = laplacian_1d(7);
        let x: Vec<Complex64> = (0..7).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b = a.apply_complex(&x);
        let ones = vec![Complex64::new(0.0, 0.0); 7];
        solve_shifted(&a, &ones, Complex64::new(1.0, 0.0), &mut b).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 20;
        let a = laplacian_1d(n);
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        assert_eq!(sturm_count(&a, 1.0), exact.iter().filter(|&&e| e < 1.0).count());
        let found = eigenvalues_in(&a, 0.0, 4.0, 1e-12);
        assert_eq!(found.len(), n);
        for ((e, _), x) in found.iter().zip(&exact) {
            assert!((e - x).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let z = Complex64::new(0.0, 0.0);
        let mut rhs = vec![Complex64::new(1.0, 0.0); 2];
        let err = solve_complex(&[z], &[z, z], &[z], &mut rhs).unwrap_err();
        assert!(matches!(err, Error::SingularTridiagonal(0)));
    }
}

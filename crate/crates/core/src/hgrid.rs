//! Cell-centered radial grid on the hyperbolic plane.
//!
//! Nodes sit at `r_i = (i - 1/2) h`, so nothing is ever evaluated at the
//! coordinate singularity. Integrals carry the measure `sh(r) dr` unless a
//! function says otherwise.

use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

/// Fields may be rejected when `|f|/r^m` near the origin exceeds this many
/// times its value at the edge of the inspected window.
pub const ADMISSIBLE_ORIGIN_LIMIT: f64 = 200.0;

#[derive(Debug, Clone)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    r_max: f64,
    r: Vec<f64>,
    sh: Vec<f64>,
    ch: Vec<f64>,
    coth: Vec<f64>,
    weights: Vec<f64>,
    // sh at cell faces r = j h, j = 0..=n
    sh_face: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.h == other.h && self.r_max == other.r_max
    }
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Arc<Self>> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        if n < 8 {
            return Err(Error::InvalidArgument(format!("need at least 8 nodes, got {n}")));
        }
        if r_max > 300.0 {
            return Err(Error::InvalidArgument(format!("r_max = {r_max} overflows sh(r)")));
        }
        let h = r_max / n as f64;
        let r: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) * h).collect();
        let sh: Vec<f64> = r.iter().map(|x| x.sinh()).collect();
        let ch: Vec<f64> = r.iter().map(|x| x.cosh()).collect();
        let coth: Vec<f64> = sh.iter().zip(&ch).map(|(s, c)| c / s).collect();
        let weights = sh.iter().map(|s| s * h).collect();
        let sh_face = (0..=n).map(|j| (j as f64 * h).sinh()).collect();
        Ok(Arc::new(Self { n, h, r_max, r, sh, ch, coth, weights, sh_face }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn sh(&self) -> &[f64] {
        &self.sh
    }

    pub fn ch(&self) -> &[f64] {
        &self.ch
    }

    pub fn coth(&self) -> &[f64] {
        &self.coth
    }

    /// Quadrature weights `sh(r_i) h` (midpoint rule per cell).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same grid with half the spacing.
    /// `sh` at the cell faces `j h`, `j = 0..=N`.
    pub fn sh_face(&self) -> &[f64] {
        &self.sh_face
    }

    pub fn refined(&self) -> Result<Arc<Self>> {
        Self::new(self.r_max, 2 * self.n)
    }

    /// Index of the last node with `r_i < r`.
    pub fn index_below(&self, r: f64) -> usize {
        let k = (r / self.h + 0.5).floor() as isize - 1;
        k.clamp(0, self.n as isize - 1) as usize
    }

    /// `∫ f sh dr` over `[0, r_max]`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// `∫ f dr` over `[0, r_max]`.
    pub fn integrate_flat(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        f.iter().sum::<f64>() * self.h
    }

    /// `C_i = ∫_0^{r_i} f ds` (plain measure) by the trapezoid rule; the
    /// half cell next to the origin uses a linear extrapolation of `f(0)`.
    pub fn cumulative_from_origin(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        let h = self.h;
        let f0 = 1.5 * f[0] - 0.5 * f[1];
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.25 * h * (f0 + f[0]);
        out.push(acc);
        for i in 1..n {
            acc += 0.5 * h * (f[i - 1] + f[i]);
            out.push(acc);
        }
        out
    }

    /// `∫_0^{r_i} f sh ds` by the trapezoid rule, using `sh(0) = 0` exactly
    /// in the half cell next to the origin.
    pub fn cumulative_weighted_from_origin(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n);
        let h = self.h;
        let mut out = Vec::with_capacity(self.n);
        let mut acc = 0.25 * h * f[0] * self.sh[0];
        out.push(acc);
        for i in 1..self.n {
            acc += 0.5 * h * (f[i - 1] * self.sh[i - 1] + f[i] * self.sh[i]);
            out.push(acc);
        }
        out
    }

    /// `R_i = ∫_{r_i}^{r_max} f ds` (plain measure) by the trapezoid rule.
    pub fn cumulative_to_end(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        let h = self.h;
        let f_end = 1.5 * f[n - 1] - 0.5 * f[n - 2];
        let mut out = vec![0.0; n];
        let mut acc = 0.25 * h * (f[n - 1] + f_end);
        out[n - 1] = acc;
        for i in (0..n - 1).rev() {
            acc += 0.5 * h * (f[i] + f[i + 1]);
            out[i] = acc;
        }
        out
    }

    /// Centered first derivative. The origin ghost is `f_0 = (-1)^parity f_1`,
    /// which is exact for fields behaving like `r^parity`; the last node
    /// uses the one-sided second-order stencil.
    pub fn ddr<T>(&self, f: &[T], parity: i32) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        let inv2h = 0.5 / self.h;
        let mut out = Vec::with_capacity(n);
        let ghost = if parity.rem_euclid(2) == 0 { f[0] } else { f[0] * -1.0 };
        out.push((f[1] - ghost) * inv2h);
        for i in 1..n - 1 {
            out.push((f[i + 1] - f[i - 1]) * inv2h);
        }
        out.push((f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * inv2h);
        out
    }

    /// `∂_r^* f = -∂_r f - coth(r) f`.
    pub fn ddr_star<T>(&self, f: &[T], parity: i32) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        self.ddr(f, parity)
            .into_iter()
            .zip(f.iter().zip(&self.coth))
            .map(|(d, (&v, &c))| (d + v * c) * -1.0)
            .collect()
    }

    /// Flux-form `∂_r^* ∂_r = -(1/sh) ∂_r (sh ∂_r ·)`.
    ///
    /// Zero flux through the origin (sh(0) = 0) and a Dirichlet zero at
    /// `r_max` through the ghost `f_{N+1} = -f_N`. The matrix is symmetric
    /// in the `sh`-weighted inner product.
    pub fn laplacian(&self) -> Tridiagonal {
        let n = self.n;
        let h2 = self.h * self.h;
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];
        for i in 0..n {
            let s = self.sh[i];
            let left = self.sh_face[i];
            let right = self.sh_face[i + 1];
            let mut d = left + right;
            if i == n - 1 {
                d += right;
            }
            diag[i] = d / (h2 * s);
            if i + 1 < n {
                upper[i] = -right / (h2 * s);
            }
            if i > 0 {
                lower[i - 1] = -left / (h2 * s);
            }
        }
        Tridiagonal::new(lower, diag, upper)
    }

    /// Similarity transform `S^{1/2} A S^{-1/2}` with `S = diag(sh)`:
    /// maps an operator on radial functions to its half-line form.
    pub fn to_half_line(&self, a: &Tridiagonal) -> Tridiagonal {
        a.symmetrize_with_weights(&self.sh)
    }

    /// L^p norm of a nonnegative profile with the `sh dr` measure.
    pub fn lp_norm_abs(&self, abs: &[f64], p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("L^p exponent must be >= 1, got {p}")));
        }
        if abs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if p.is_infinite() {
            return Ok(abs.iter().fold(0.0, |m, &v| m.max(v.abs())));
        }
        let s: f64 = abs
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.abs().powf(p) * w)
            .sum();
        Ok(s.powf(1.0 / p))
    }

    pub fn lp_norm_real(&self, f: &[f64], p: f64) -> Result<f64> {
        self.lp_norm_abs(f, p)
    }

    /// Plain `L^2(dr)` norm, used for half-line functions.
    pub fn l2_flat(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() * self.h).sqrt()
    }

    pub fn check_same(&self, other: &RadialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(N={}, r_max={}) vs (N={}, r_max={})",
                self.n, self.r_max, other.n, other.r_max
            )))
        }
    }
}

/// Complex perturbation sampled on a grid, tagged with its equivariance
/// degree.
#[derive(Debug, Clone)]
pub struct ComplexRadialField {
    values: Vec<Complex64>,
    degree: i32,
    grid: Arc<RadialGrid>,
}

impl PartialEq for ComplexRadialField {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && *self.grid == *other.grid && self.values == other.values
    }
}

impl ComplexRadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>, degree: i32) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values, degree, grid })
    }

    pub fn zeros(grid: Arc<RadialGrid>, degree: i32) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.n()];
        Self { values, degree, grid }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, degree: i32, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.r().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, degree)
    }

    pub fn from_real(grid: Arc<RadialGrid>, degree: i32, re: &[f64]) -> Result<Self> {
        Self::new(grid, re.iter().map(|&x| Complex64::new(x, 0.0)).collect(), degree)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// New field on the same grid and degree.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.degree)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * a).collect(),
            degree: self.degree,
            grid: self.grid.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { values, degree: self.degree, grid: self.grid.clone() })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `sup |f_i|/r_i^m` over the first tenth of the nodes, relative to
    /// `sup |f_i| / r_k^m` on the same window. Fields that really vanish
    /// like `r^m` give an O(1) value.
    pub fn origin_ratio(&self) -> f64 {
        let r = self.grid.r();
        let k = (self.grid.n() / 10).max(2);
        let m = self.degree;
        let mut peak_scaled: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..k {
            let a = self.values[i].norm();
            peak_scaled = peak_scaled.max(a / r[i].powi(m));
            peak = peak.max(a);
        }
        if peak == 0.0 {
            return 0.0;
        }
        peak_scaled * r[k - 1].powi(m) / peak
    }

    pub fn check_admissible(&self) -> Result<()> {
        let ratio = self.origin_ratio();
        if ratio > ADMISSIBLE_ORIGIN_LIMIT || !ratio.is_finite() {
            log::warn!("rejecting field of degree {}: origin ratio {ratio:.3e}", self.degree);
            return Err(Error::InadmissibleOrigin { degree: self.degree, ratio });
        }
        Ok(())
    }

    /// CSV with a `# m=..,h=..,r_max=..` header line and columns r, re, im.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# m={},h={:.17e},r_max={:.17e}",
            self.degree,
            self.grid.h(),
            self.grid.r_max()
        )?;
        writeln!(w, "r,re,im")?;
        for (r, v) in self.grid.r().iter().zip(&self.values) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", r, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
        let meta = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let (mut m, mut h, mut r_max) = (None, None, None);
        for kv in meta.trim().split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry '{kv}'")))?;
            let bad = |_| Error::Parse(format!("bad value for {k}: '{v}'"));
            match k.trim() {
                "m" => m = Some(v.trim().parse::<i32>().map_err(|e| Error::Parse(e.to_string()))?),
                "h" => h = Some(v.trim().parse::<f64>().map_err(bad)?),
                "r_max" => r_max = Some(v.trim().parse::<f64>().map_err(bad)?),
                other => return Err(Error::Parse(format!("unknown metadata key '{other}'"))),
            }
        }
        let (m, h, r_max) = match (m, h, r_max) {
            (Some(m), Some(h), Some(r)) => (m, h, r),
            _ => return Err(Error::Parse("metadata needs m, h and r_max".into())),
        };
        let n = (r_max / h).round() as usize;
        let grid = RadialGrid::new(r_max, n)?;
        let cols = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
        if cols.trim() != "r,re,im" {
            return Err(Error::Parse(format!("unexpected columns '{cols}'")));
        }
        let mut values = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("expected 3 columns in '{line}'")));
            }
            let p = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            values.push(Complex64::new(p(parts[1])?, p(parts[2])?));
        }
        Self::new(grid, values, m)
    }
}

/// `(∫ |f|^p sh dr)^{1/p}`, or `max |f_i|` for `p = ∞`.
pub fn weighted_lp_norm(f: &ComplexRadialField, p: f64) -> Result<f64> {
    f.grid.lp_norm_abs(&f.abs(), p)
}

/// `‖∂_r f‖_{L²} + ‖f / sh‖_{L²}`.
pub fn h1m_norm(f: &ComplexRadialField) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let g = &f.grid;
    let d = g.ddr(&f.values, f.degree);
    let dn: f64 = d.iter().zip(g.weights()).map(|(v, w)| v.norm_sqr() * w).sum();
    let cn: f64 = f
        .values
        .iter()
        .zip(g.sh())
        .zip(g.weights())
        .map(|((v, s), w)| v.norm_sqr() / (s * s) * w)
        .sum();
    Ok(dn.sqrt() + cn.sqrt())
}

pub fn ddr(f: &ComplexRadialField) -> Result<ComplexRadialField> {
    let d = f.grid.ddr(&f.values, f.degree);
    ComplexRadialField::new(f.grid.clone(), d, f.degree)
}

pub fn ddr_star(f: &ComplexRadialField) -> Result<ComplexRadialField> {
    let d = f.grid.ddr_star(&f.values, f.degree);
    ComplexRadialField::new(f.grid.clone(), d, f.degree)
}

/// `Re ∫ f ḡ sh dr`.
pub fn inner_re(f: &[Complex64], g: &[Complex64], grid: &RadialGrid) -> f64 {
    f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| (a * b.conj()).re * w)
        .sum()
}

/// `∫ f ḡ sh dr`.
pub fn inner(f: &[Complex64], g: &[Complex64], grid: &RadialGrid) -> Complex64 {
    f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| a * b.conj() * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn first_node_is_half_step() {
        let g = RadialGrid::new(30.0, 6000).unwrap();
        assert!((g.r()[0] - g.h() / 2.0).abs() < 1e-15);
        assert!(g.r().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quadrature_reproduces_sh_integral() {
        let mut errs = vec![];
        for n in [200, 400, 800] {
            let g = RadialGrid::new(5.0, n).unwrap();
            let one = vec![1.0; n];
            let exact = 5.0f64.cosh() - 1.0;
            errs.push((g.integrate(&one) - exact).abs() / exact);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!((1.9..=2.1).contains(&order), "order {order}");
    }

    #[test]
    fn lp_norm_of_constant_on_unit_interval() {
        let g = RadialGrid::new(1.0, 400).unwrap();
        let f = ComplexRadialField::from_fn(g.clone(), 1, |_| c(1.0)).unwrap();
        let v = weighted_lp_norm(&f, 1.0).unwrap();
        let exact = 1.0f64.cosh() - 1.0;
        assert!((v - exact).abs() < 5.0 * g.h() * g.h());
    }

    #[test]
    fn lp_norm_infinity_is_max() {
        let g = RadialGrid::new(3.0, 100).unwrap();
        let f = ComplexRadialField::from_fn(g, 1, |r| Complex64::new(0.0, (r - 1.0).exp() * (-r * r).exp())).unwrap();
        let expect = f.abs().iter().cloned().fold(0.0, f64::max);
        assert_eq!(weighted_lp_norm(&f, f64::INFINITY).unwrap(), expect);
    }

    #[test]
    fn non_finite_rejected() {
        let g = RadialGrid::new(3.0, 100).unwrap();
        let mut v = vec![c(0.0); 100];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(ComplexRadialField::new(g.clone(), v, 1), Err(Error::NonFinite)));
        let mut a = vec![0.0; 100];
        a[7] = f64::INFINITY;
        assert!(matches!(g.lp_norm_abs(&a, 2.0), Err(Error::NonFinite)));
    }

    #[test]
    fn ddr_sin_second_order() {
        let mut errs = vec![];
        for n in [300, 600] {
            let g = RadialGrid::new(6.0, n).unwrap();
            let f: Vec<f64> = g.r().iter().map(|r| r.sin()).collect();
            let d = g.ddr(&f, 1);
            let e = d[1..n - 1]
                .iter()
                .zip(&g.r()[1..n - 1])
                .map(|(a, r)| (a - r.cos()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] < 1e-3 && errs[0] / errs[1] > 3.8);
    }

    #[test]
    fn ddr_of_constant_vanishes_inside() {
        let g = RadialGrid::new(6.0, 100).unwrap();
        let d = g.ddr(&vec![2.5; 100], 0);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cumulative_integrals_agree_with_total() {
        let g = RadialGrid::new(8.0, 800).unwrap();
        let f: Vec<f64> = g.r().iter().map(|r| r * (-r).exp()).collect();
        let a = g.cumulative_from_origin(&f);
        let b = g.cumulative_to_end(&f);
        let exact = 1.0 - 9.0 * (-8.0f64).exp();
        for i in (0..800).step_by(97) {
            assert!((a[i] + b[i] - exact).abs() < 1e-4);
        }
        let r = g.r()[399];
        let e = 1.0 - (1.0 + r) * (-r).exp();
        assert!((a[399] - e).abs() < 1e-5);
    }

    #[test]
    fn laplacian_is_weighted_symmetric_and_consistent() {
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let l = g.laplacian();
        let w = g.sh();
        for i in 0..999 {
            let a = w[i] * l.upper[i];
            let b = w[i + 1] * l.lower[i];
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        // -Δ e^{-(r-4)^2} against the analytic value
        let f: Vec<f64> = g.r().iter().map(|r| (-(r - 4.0) * (r - 4.0)).exp()).collect();
        let lf = l.apply(&f);
        for i in (100..900).step_by(50) {
            let r = g.r()[i];
            let x = r - 4.0;
            let e = (-x * x).exp();
            let exact = -((4.0 * x * x - 2.0) * e + g.coth()[i] * (-2.0 * x * e));
            assert!((lf[i] - exact).abs() < 1e-3, "{} vs {}", lf[i], exact);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::new(4.0, 40).unwrap();
        let f = ComplexRadialField::from_fn(g, 2, |r| Complex64::new(r.sin() / 3.0, r * r * (-r).exp())).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = ComplexRadialField::read_csv(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn origin_ratio_flags_wrong_degree() {
        let g = RadialGrid::new(20.0, 2000).unwrap();
        let good = ComplexRadialField::from_fn(g.clone(), 2, |r| c(r * r * (-r).exp())).unwrap();
        let bad = ComplexRadialField::from_fn(g, 2, |r| c(r * (-r).exp())).unwrap();
        assert!(good.check_admissible().is_ok());
        assert!(bad.check_admissible().is_err());
    }
}

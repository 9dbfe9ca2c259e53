//! Linearized operators around a vortex profile.
//!
//! With `α = (A_θ[Q] - m)/sh`:
//!
//! ```text
//! L_Q ε   = ∂ε + αε - B_Q ε,          B_Q ε  = (Q/sh) ∫_0^r Re(Qε) sh ds
//! L_Q^* f = ∂^*f + αf - B_Q^*(Q f),    B_Q^* f = Q ∫_r^∞ Re f ds
//! A_Q     = ∂ + α - coth,              R_Q = ∂^*∂ + 1 + V_RQ = A_Q^* A_Q - 1
//! 𝓗       = ∂^*∂ + Q²,                 H = sh^{1/2} 𝓗 sh^{-1/2}
//! ```
//!
//! `∂_r A_θ[Q]/sh` is replaced by `½(1 - Q²)` everywhere, so no tabulated
//! profile is ever differentiated. The discrete `∂^*∂` is the flux form from
//! [`RadialGrid::laplacian`], symmetric in the `sh`-weighted inner product;
//! the half-line `H` is its exact similarity transform.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgrid::{ComplexRadialField, RadialGrid};
use crate::tridiag::Tridiagonal;
use crate::vortex::VortexProfile;

/// `V_RQ` from pointwise profile data; `deficit = 1 - Q`.
pub fn v_rq_at(r: f64, m: i32, deficit: f64, a: f64) -> f64 {
    let s = r.sinh();
    let coth = 1.0 / r.tanh();
    let b = (m as f64 - a) / s;
    1.0 / (s * s) - 0.5 * deficit * (2.0 - deficit) + 2.0 * coth * b + b * b
}

/// Pointwise potentials on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    pub v_rq: Vec<f64>,
    pub v_h: Vec<f64>,
    pub v_calh: Vec<f64>,
}

impl PotentialTable {
    pub fn from_profile(p: &VortexProfile) -> Self {
        Self::from_samples(p.grid(), p.m(), p.q(), p.deficit(), p.a_theta())
    }

    /// Potentials for arbitrary `(Q, 1 - Q, A_θ)` node samples, e.g. for
    /// substituted limits.
    pub fn from_samples(grid: &RadialGrid, m: i32, q: &[f64], deficit: &[f64], a: &[f64]) -> Self {
        let n = grid.n();
        let mut v_rq = Vec::with_capacity(n);
        let mut v_h = Vec::with_capacity(n);
        let mut v_calh = Vec::with_capacity(n);
        for i in 0..n {
            let r = grid.r()[i];
            let s = grid.sh()[i];
            v_rq.push(v_rq_at(r, m, deficit[i], a[i]));
            v_h.push(0.25 - 0.25 / (s * s) + q[i] * q[i]);
            v_calh.push(q[i] * q[i]);
        }
        Self { v_rq, v_h, v_calh }
    }

    pub fn write_csv<W: Write>(&self, grid: &RadialGrid, mut w: W) -> Result<()> {
        writeln!(w, "r,V_RQ,V_H")?;
        for ((r, a), b) in grid.r().iter().zip(&self.v_rq).zip(&self.v_h) {
            writeln!(w, "{r:.17e},{a:.17e},{b:.17e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    LQ,
    LQStar,
    BQ,
    BQStar,
    AQ,
    AQStar,
    RQ,
    CalH,
    H,
}

impl OperatorKind {
    pub fn is_local(self) -> bool {
        !matches!(self, Self::LQ | Self::LQStar | Self::BQ | Self::BQStar)
    }
}

/// Profile data and operator actions shared by every downstream module.
#[derive(Debug, Clone)]
pub struct ProfileOps {
    profile: Arc<VortexProfile>,
    grid: Arc<RadialGrid>,
    alpha: Vec<f64>,
    potentials: PotentialTable,
    laplacian: Tridiagonal,
}

impl ProfileOps {
    pub fn new(profile: Arc<VortexProfile>) -> Self {
        let grid = profile.grid().clone();
        let alpha = profile.alpha();
        let potentials = PotentialTable::from_profile(&profile);
        let laplacian = grid.laplacian();
        Self { profile, grid, alpha, potentials, laplacian }
    }

    pub fn profile(&self) -> &Arc<VortexProfile> {
        &self.profile
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn m(&self) -> i32 {
        self.profile.m()
    }

    pub fn q(&self) -> &[f64] {
        self.profile.q()
    }

    /// `(A_θ[Q] - m)/sh`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn potentials(&self) -> &PotentialTable {
        &self.potentials
    }

    /// Flux-form `∂^*∂`.
    pub fn laplacian(&self) -> &Tridiagonal {
        &self.laplacian
    }

    fn check(&self, f: &ComplexRadialField, degree: i32) -> Result<()> {
        self.grid.check_same(f.grid())?;
        if f.degree() != degree {
            return Err(Error::DegreeMismatch { expected: degree, got: f.degree() });
        }
        Ok(())
    }

    /// `B_Q ε` on raw values.
    pub fn bq_values(&self, eps: &[Complex64]) -> Vec<f64> {
        let g = &self.grid;
        let q = self.q();
        let integrand: Vec<f64> = (0..g.n()).map(|i| q[i] * eps[i].re).collect();
        let c = g.cumulative_weighted_from_origin(&integrand);
        (0..g.n()).map(|i| q[i] / g.sh()[i] * c[i]).collect()
    }

    /// `B_Q^* f = Q ∫_r^∞ Re f ds` on raw values.
    pub fn bq_star_values(&self, f: &[Complex64]) -> Vec<f64> {
        let re: Vec<f64> = f.iter().map(|v| v.re).collect();
        let t = self.grid.cumulative_to_end(&re);
        t.iter().zip(self.q()).map(|(a, q)| a * q).collect()
    }

    pub fn lq_values(&self, eps: &[Complex64], parity: i32) -> Vec<Complex64> {
        let d = self.grid.ddr(eps, parity);
        let b = self.bq_values(eps);
        (0..eps.len()).map(|i| d[i] + eps[i] * self.alpha[i] - b[i]).collect()
    }

    pub fn lq_star_values(&self, f: &[Complex64], parity: i32) -> Vec<Complex64> {
        let ds = self.grid.ddr_star(f, parity);
        let qf: Vec<Complex64> = f.iter().zip(self.q()).map(|(v, q)| v * q).collect();
        let b = self.bq_star_values(&qf);
        (0..f.len()).map(|i| ds[i] + f[i] * self.alpha[i] - b[i]).collect()
    }

    pub fn apply_lq(&self, eps: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.check(eps, self.m())?;
        ComplexRadialField::new(self.grid.clone(), self.lq_values(eps.values(), eps.degree()), self.m() + 1)
    }

    /// `L_Q^*` maps degree `m + 1` data back to degree `m`.
    pub fn apply_lq_star(&self, f: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.grid.check_same(f.grid())?;
        let v = self.lq_star_values(f.values(), f.degree());
        ComplexRadialField::new(self.grid.clone(), v, self.m())
    }

    pub fn apply_bq(&self, eps: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.grid.check_same(eps.grid())?;
        let v = self.bq_values(eps.values()).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        eps.with_values(v)
    }

    pub fn apply_bq_star(&self, f: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.grid.check_same(f.grid())?;
        let v = self.bq_star_values(f.values()).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        f.with_values(v)
    }

    /// `A_Q u = ∂u + (α - coth) u`, degree `m + 1` to degree `m`.
    pub fn apply_aq(&self, u: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.check(u, self.m() + 1)?;
        let d = self.grid.ddr(u.values(), u.degree());
        let c = self.grid.coth();
        let v = (0..d.len()).map(|i| d[i] + u.values()[i] * (self.alpha[i] - c[i])).collect();
        ComplexRadialField::new(self.grid.clone(), v, self.m())
    }

    /// `A_Q^* u = ∂^*u + (α - coth) u`.
    pub fn apply_aq_star(&self, u: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.grid.check_same(u.grid())?;
        let d = self.grid.ddr_star(u.values(), u.degree());
        let c = self.grid.coth();
        let v = (0..d.len()).map(|i| d[i] + u.values()[i] * (self.alpha[i] - c[i])).collect();
        ComplexRadialField::new(self.grid.clone(), v, self.m() + 1)
    }

    /// Tridiagonal `R_Q = ∂^*∂ + 1 + V_RQ` on radial functions.
    pub fn rq_matrix(&self) -> Tridiagonal {
        let mut t = self.laplacian.clone();
        for (d, v) in t.diag.iter_mut().zip(&self.potentials.v_rq) {
            *d += 1.0 + v;
        }
        t
    }

    pub fn apply_rq(&self, eps1: &ComplexRadialField) -> Result<ComplexRadialField> {
        self.check(eps1, self.m() + 1)?;
        eps1.with_values(self.rq_matrix().apply_complex(eps1.values()))
    }

    /// Tridiagonal `𝓗 = ∂^*∂ + Q²` on radial functions.
    pub fn calh_matrix(&self) -> Tridiagonal {
        let mut t = self.laplacian.clone();
        for (d, v) in t.diag.iter_mut().zip(&self.potentials.v_calh) {
            *d += v;
        }
        t
    }

    pub fn build_calh(&self) -> OperatorHandle {
        OperatorHandle { kind: OperatorKind::CalH, matrix: self.calh_matrix() }
    }

    pub fn build_h(&self) -> OperatorHandle {
        OperatorHandle { kind: OperatorKind::H, matrix: self.grid.to_half_line(&self.calh_matrix()) }
    }

    pub fn build_rq(&self) -> OperatorHandle {
        OperatorHandle { kind: OperatorKind::RQ, matrix: self.rq_matrix() }
    }
}

/// A local operator in tridiagonal form.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    pub kind: OperatorKind,
    pub matrix: Tridiagonal,
}

impl OperatorHandle {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.apply(f)
    }

    pub fn to_banded_text(&self) -> String {
        self.matrix.to_banded_text()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex::solve_profile;

    fn ops(m: i32, n: usize) -> ProfileOps {
        let g = RadialGrid::new(20.0, n).unwrap();
        ProfileOps::new(Arc::new(solve_profile(m, &g, 1e-8).unwrap()))
    }

    fn bump(g: &Arc<RadialGrid>, deg: i32, c: f64, phase: f64) -> ComplexRadialField {
        ComplexRadialField::from_fn(g.clone(), deg, |r| {
            Complex64::from_polar((-(r - c) * (r - c) * 2.0).exp(), phase * r)
        })
        .unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let o = ops(1, 1000);
        let z = ComplexRadialField::zeros(o.grid().clone(), 1);
        for f in [o.apply_lq(&z), o.apply_lq_star(&z), o.apply_bq(&z), o.apply_bq_star(&z)] {
            assert!(f.unwrap().values().iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn potential_decreases_and_decays() {
        for m in 1..=3 {
            let o = ops(m, 2000);
            let v = &o.potentials().v_rq;
            assert!(v.windows(2).all(|w| w[1] < w[0]), "m={m}");
            assert!(v.last().unwrap().abs() < (-20.0f64).exp());
            assert!((o.potentials().v_h.last().unwrap() - 1.25).abs() < 1e-8);
        }
    }

    #[test]
    fn bq_is_only_real_linear() {
        let o = ops(1, 1000);
        let u = ComplexRadialField::from_real(o.grid().clone(), 1, &o.q().iter().zip(o.grid().r()).map(|(q, r)| q * (-(r - 3.0) * (r - 3.0)).exp()).collect::<Vec<_>>()).unwrap();
        let iu = u.with_values(u.values().iter().map(|v| v * Complex64::i()).collect()).unwrap();
        let a = o.apply_bq(&iu).unwrap();
        let b = o.apply_bq(&u).unwrap();
        let diff: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y * Complex64::i()).norm()).sum();
        assert!(diff > 1e-3);
    }

    #[test]
    fn factorization_of_rq() {
        let mut errs = vec![];
        for n in [1000, 2000] {
            let o = ops(1, n);
            let u = bump(o.grid(), 2, 4.0, 0.7);
            let a = o.apply_rq(&u).unwrap();
            let b = o.apply_aq_star(&o.apply_aq(&u).unwrap()).unwrap();
            let v: Vec<Complex64> = a.values().iter().zip(b.values()).zip(u.values()).map(|((x, y), z)| x - (y - z)).collect();
            errs.push(o.grid().lp_norm_abs(&v.iter().map(|c| c.norm()).collect::<Vec<_>>(), 2.0).unwrap());
        }
        assert!(errs[0] < 5e-2 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn degree_is_checked() {
        let o = ops(1, 500);
        let u = bump(o.grid(), 1, 4.0, 0.0);
        assert!(matches!(o.apply_rq(&u), Err(Error::DegreeMismatch { .. })));
    }
}

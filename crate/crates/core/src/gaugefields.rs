//! Nonlocal gauge fields and the nonlinear Darboux transform.
//!
//! For `φ = Q + ε` with `g = a_θ/sh`:
//!
//! ```text
//! a_θ(r) = -∫_0^r (Q Re ε + ½|ε|²) sh ds
//! A₀(r)  = ½ ∫_r^∞ (Q Re ε₁ + Re(ε₁ ε̄)) ds
//! ε₁     = ∂ε + αε + g (Q + ε)
//! ```
//!
//! The inverse map solves `𝓗 (Re ε / Q) = F` through the Green kernel of
//! `H` and integrates `∂(Im ε / Q) = (Im ε₁ - g Im ε) / Q` inward from
//! `r_max`, iterating from `ε = 0`.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hgrid::{h1m_norm, weighted_lp_norm, ComplexRadialField, RadialGrid};
use crate::linops::ProfileOps;
use crate::spectra::{fundamental_system_h, FundamentalSystem};

pub const DEFAULT_SMALLNESS_GUARD: f64 = 1e-2;

/// `a_θ` and `A₀` on the grid nodes, tagged with the field that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeState {
    pub a_theta: Vec<f64>,
    pub a0: Vec<f64>,
    pub source_hash: String,
    grid: Arc<RadialGrid>,
}

impl GaugeState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `a_θ / sh`.
    pub fn g(&self) -> Vec<f64> {
        self.a_theta.iter().zip(self.grid.sh()).map(|(a, s)| a / s).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# source={}", self.source_hash)?;
        writeln!(w, "r,a_theta,A0")?;
        for ((r, a), b) in self.grid.r().iter().zip(&self.a_theta).zip(&self.a0) {
            writeln!(w, "{r:.17e},{a:.17e},{b:.17e}")?;
        }
        Ok(())
    }
}

fn hash_fields(fields: &[&[Complex64]]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        for v in f.iter() {
            h.update(v.re.to_le_bytes());
            h.update(v.im.to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

/// `a_θ` on raw values.
pub fn a_theta_values(ops: &ProfileOps, eps: &[Complex64]) -> Vec<f64> {
    let g = ops.grid();
    let q = ops.q();
    let integrand: Vec<f64> = (0..g.n())
        .map(|i| q[i] * eps[i].re + 0.5 * eps[i].norm_sqr())
        .collect();
    g.cumulative_weighted_from_origin(&integrand).into_iter().map(|c| -c).collect()
}

/// `A₀` on raw values.
pub fn a0_values(ops: &ProfileOps, eps1: &[Complex64], eps: &[Complex64]) -> Vec<f64> {
    let q = ops.q();
    let integrand: Vec<f64> = (0..eps.len())
        .map(|i| eps1[i].re * q[i] + (eps1[i] * eps[i].conj()).re)
        .collect();
    ops.grid().cumulative_to_end(&integrand).into_iter().map(|c| 0.5 * c).collect()
}

/// `ε₁ = ∂ε + αε + (a_θ/sh)(Q + ε)` on raw values.
pub fn darboux_values(ops: &ProfileOps, eps: &[Complex64], a_theta: &[f64]) -> Vec<Complex64> {
    let g = ops.grid();
    let d = g.ddr(eps, ops.m());
    let (q, al, sh) = (ops.q(), ops.alpha(), g.sh());
    (0..eps.len())
        .map(|i| d[i] + eps[i] * al[i] + (eps[i] + q[i]) * (a_theta[i] / sh[i]))
        .collect()
}

fn check_degree(ops: &ProfileOps, f: &ComplexRadialField, degree: i32) -> Result<()> {
    ops.grid().check_same(f.grid())?;
    if f.degree() != degree {
        return Err(Error::DegreeMismatch { expected: degree, got: f.degree() });
    }
    Ok(())
}

pub fn compute_a_theta(ops: &ProfileOps, eps: &ComplexRadialField) -> Result<GaugeState> {
    check_degree(ops, eps, ops.m())?;
    Ok(GaugeState {
        a_theta: a_theta_values(ops, eps.values()),
        a0: vec![0.0; eps.values().len()],
        source_hash: hash_fields(&[eps.values()]),
        grid: ops.grid().clone(),
    })
}

/// Both gauge fields; `a_θ` from `ε`, `A₀` from the pair.
pub fn compute_a0(
    ops: &ProfileOps,
    eps1: &ComplexRadialField,
    eps: &ComplexRadialField,
) -> Result<GaugeState> {
    check_degree(ops, eps1, ops.m() + 1)?;
    check_degree(ops, eps, ops.m())?;
    Ok(GaugeState {
        a_theta: a_theta_values(ops, eps.values()),
        a0: a0_values(ops, eps1.values(), eps.values()),
        source_hash: hash_fields(&[eps1.values(), eps.values()]),
        grid: ops.grid().clone(),
    })
}

pub fn darboux_forward(ops: &ProfileOps, eps: &ComplexRadialField) -> Result<ComplexRadialField> {
    check_degree(ops, eps, ops.m())?;
    let a = a_theta_values(ops, eps.values());
    ComplexRadialField::new(ops.grid().clone(), darboux_values(ops, eps.values(), &a), ops.m() + 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionLog {
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub update_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub eps: ComplexRadialField,
    pub iterations: usize,
    pub final_update_norm: f64,
    pub converged: bool,
    /// `‖ε^{k+1} - ε^k‖_{H¹_m}` per iteration.
    pub update_norms: Vec<f64>,
    pub tol: f64,
}

impl ReconstructionResult {
    /// Ratios of successive update norms.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.update_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn log(&self) -> ReconstructionLog {
        ReconstructionLog {
            iterations: self.iterations,
            converged: self.converged,
            tol: self.tol,
            update_norms: self.update_norms.clone(),
        }
    }
}

/// Fixed-point inverse of [`darboux_forward`]. Holds the fundamental
/// system of `H`, so repeated reconstructions on one profile are cheap.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    ops: Arc<ProfileOps>,
    fs: FundamentalSystem,
    pub smallness_guard: f64,
}

impl Reconstructor {
    pub fn new(ops: Arc<ProfileOps>) -> Result<Self> {
        let fs = fundamental_system_h(ops.profile())?;
        Ok(Self { ops, fs, smallness_guard: DEFAULT_SMALLNESS_GUARD })
    }

    pub fn ops(&self) -> &Arc<ProfileOps> {
        &self.ops
    }

    /// One sweep of the fixed-point map.
    fn sweep(&self, eps1: &[Complex64], eps: &[Complex64]) -> Result<Vec<Complex64>> {
        let ops = &*self.ops;
        let grid = ops.grid();
        let n = grid.n();
        let (q, sh, coth) = (ops.q(), grid.sh(), grid.coth());
        let a = a_theta_values(ops, eps);
        let g: Vec<f64> = a.iter().zip(sh).map(|(a, s)| a / s).collect();

        let u1: Vec<f64> = (0..n).map(|i| eps1[i].re / q[i]).collect();
        let u2: Vec<f64> = (0..n).map(|i| g[i] * eps[i].re / q[i]).collect();
        let d1 = grid.ddr(&u1, 1);
        let d2 = grid.ddr(&u2, 1);
        // (1/sh) ∂(sh u) = coth u + ∂u
        let f: Vec<f64> = (0..n)
            .map(|i| {
                -(coth[i] * u1[i] + d1[i]) + (coth[i] * u2[i] + d2[i]) - 0.5 * eps[i].norm_sqr()
            })
            .collect();
        let half_f: Vec<f64> = (0..n).map(|i| sh[i].sqrt() * f[i]).collect();
        let w = self.fs.green_solve(&half_f)?;

        let t1: Vec<f64> = (0..n).map(|i| eps1[i].im / q[i]).collect();
        let t2: Vec<f64> = (0..n).map(|i| g[i] * eps[i].im / q[i]).collect();
        let i1 = grid.cumulative_to_end(&t1);
        let i2 = grid.cumulative_to_end(&t2);
        Ok((0..n)
            .map(|i| Complex64::new(q[i] * w[i] / sh[i].sqrt(), q[i] * (i2[i] - i1[i])))
            .collect())
    }

    pub fn reconstruct(
        &self,
        eps1: &ComplexRadialField,
        tol: f64,
        max_iter: usize,
    ) -> Result<ReconstructionResult> {
        let ops = &*self.ops;
        check_degree(ops, eps1, ops.m() + 1)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let size = weighted_lp_norm(eps1, 2.0)?;
        if size > self.smallness_guard {
            return Err(Error::InvalidArgument(format!(
                "‖ε₁‖ = {size:.3e} exceeds the smallness guard {:.3e}",
                self.smallness_guard
            )));
        }
        let grid = ops.grid().clone();
        let m = ops.m();
        let mut eps = vec![Complex64::new(0.0, 0.0); grid.n()];
        let mut norms: Vec<f64> = vec![];
        let mut increases = 0;
        for k in 0..max_iter {
            let next = self.sweep(eps1.values(), &eps)?;
            let diff: Vec<Complex64> = next.iter().zip(&eps).map(|(a, b)| a - b).collect();
            let d = h1m_norm(&ComplexRadialField::new(grid.clone(), diff, m)?)?;
            if let Some(&prev) = norms.last() {
                increases = if d > prev { increases + 1 } else { 0 };
            }
            norms.push(d);
            eps = next;
            if increases >= 2 {
                return Err(Error::OutsideContraction(norms));
            }
            if d <= tol {
                return Ok(ReconstructionResult {
                    eps: ComplexRadialField::new(grid, eps, m)?,
                    iterations: k + 1,
                    final_update_norm: d,
                    converged: true,
                    update_norms: norms,
                    tol,
                });
            }
        }
        let last = norms.last().copied().unwrap_or(f64::INFINITY);
        log::warn!("reconstruction stopped after {max_iter} iterations, last update {last:.3e}");
        Ok(ReconstructionResult {
            eps: ComplexRadialField::new(grid, eps, m)?,
            iterations: max_iter,
            final_update_norm: last,
            converged: false,
            update_norms: norms,
            tol,
        })
    }
}

pub fn reconstruct_epsilon(
    ops: Arc<ProfileOps>,
    eps1: &ComplexRadialField,
    tol: f64,
    max_iter: usize,
) -> Result<ReconstructionResult> {
    Reconstructor::new(ops)?.reconstruct(eps1, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgrid::RadialGrid;
    use crate::vortex::solve_profile;

    fn ops(m: i32) -> Arc<ProfileOps> {
        let g = RadialGrid::new(20.0, 2000).unwrap();
        Arc::new(ProfileOps::new(Arc::new(solve_profile(m, &g, 1e-8).unwrap())))
    }

    fn field(ops: &ProfileOps, f: impl Fn(f64) -> Complex64) -> ComplexRadialField {
        let q = ops.q().to_vec();
        let g = ops.grid().clone();
        let v = g.r().iter().zip(&q).map(|(r, q)| f(*r) * *q).collect();
        ComplexRadialField::new(g, v, ops.m()).unwrap()
    }

    #[test]
    fn zero_field_is_fixed() {
        let o = ops(1);
        let z = ComplexRadialField::zeros(o.grid().clone(), 1);
        assert!(compute_a_theta(&o, &z).unwrap().a_theta.iter().all(|v| *v == 0.0));
        assert!(darboux_forward(&o, &z).unwrap().values().iter().all(|v| v.norm() == 0.0));
        let z1 = ComplexRadialField::zeros(o.grid().clone(), 2);
        let rec = reconstruct_epsilon(o, &z1, 1e-12, 5).unwrap();
        assert_eq!(rec.iterations, 1);
        assert!(rec.eps.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn a_theta_closed_forms() {
        let o = ops(1);
        let g = o.grid().clone();
        let q = field(&o, |_| Complex64::new(1.0, 0.0));
        let a = compute_a_theta(&o, &q).unwrap().a_theta;
        let q2: Vec<f64> = o.q().iter().map(|q| q * q).collect();
        let c = g.cumulative_weighted_from_origin(&q2);
        for i in 0..g.n() {
            assert!((a[i] + 1.5 * c[i]).abs() <= 1e-12 * (1.0 + c[i]));
        }
        let im = field(&o, |r| Complex64::new(0.0, (-r).exp()));
        let a = compute_a_theta(&o, &im).unwrap();
        assert!(a.a_theta.iter().all(|v| *v <= 0.0));
        let lin: Vec<f64> = im.values().iter().map(|v| v.re).collect();
        assert!(lin.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn a0_derivative_identity() {
        let o = ops(1);
        let g = o.grid().clone();
        let eps = field(&o, |r| Complex64::new(1e-3 * (-(r - 2.0) * (r - 2.0)).exp(), 5e-4 * (-r).exp()));
        let e1 = darboux_forward(&o, &eps).unwrap();
        let st = compute_a0(&o, &e1, &eps).unwrap();
        assert_eq!(*st.a0.last().unwrap() != 0.0, true);
        let d = g.ddr(&st.a0, 0);
        let mut worst: f64 = 0.0;
        for i in 1..g.n() - 1 {
            let rhs = -0.5 * (e1.values()[i].re * o.q()[i] + (e1.values()[i] * eps.values()[i].conj()).re);
            worst = worst.max((d[i] - rhs).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn a_theta_identity_holds() {
        // -∂^*(a_θ/sh) + Q Re ε + ½|ε|² = 0
        let o = ops(2);
        let g = o.grid().clone();
        let eps = field(&o, |r| Complex64::new(1e-2 * (-(r - 3.0) * (r - 3.0)).exp(), 1e-2 * (-r).exp()));
        let st = compute_a_theta(&o, &eps).unwrap();
        let gg = st.g();
        let ds = g.ddr_star(&gg, 1);
        let mut worst: f64 = 0.0;
        for i in 0..g.n() - 1 {
            let v = eps.values()[i];
            worst = worst.max((-ds[i] + o.q()[i] * v.re + 0.5 * v.norm_sqr()).abs());
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn round_trip_recovers_field() {
        for m in [1, 3] {
            let o = ops(m);
            let star = field(&o, |r| Complex64::new(1e-3 * (-(r - 3.0) * (r - 3.0)).exp(), 4e-4 * (-r).exp()));
            let e1 = darboux_forward(&o, &star).unwrap();
            let rec = reconstruct_epsilon(o.clone(), &e1, 1e-12, 20).unwrap();
            assert!(rec.converged);
            assert!(rec.contraction_ratios().iter().all(|r| *r <= 0.5), "{:?}", rec.update_norms);
            let err = h1m_norm(&rec.eps.sub(&star).unwrap()).unwrap();
            assert!(err < 1e-6, "m={m}: {err}");
            let back = darboux_forward(&o, &rec.eps).unwrap();
            let d = weighted_lp_norm(&back.sub(&e1).unwrap(), 2.0).unwrap();
            assert!(d < 1e-6, "{d}");
        }
    }

    #[test]
    fn guard_rejects_large_data() {
        let o = ops(1);
        let big = ComplexRadialField::from_fn(o.grid().clone(), 2, |r| Complex64::new(r * r * (-r).exp(), 0.0)).unwrap();
        assert!(matches!(reconstruct_epsilon(o, &big, 1e-10, 10), Err(Error::InvalidArgument(_))));
    }
}

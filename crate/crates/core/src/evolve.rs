//! Time evolution of perturbations of the vortex.
//!
//! Three formulations of the same flow, each written as `i ∂_t y = A y + E(y)`
//! with a real tridiagonal `A` advanced by Crank–Nicolson and the remainder
//! `E` treated explicitly at the half step (predictor plus one corrector):
//!
//! ```text
//! direct:  A = ½(∂^*∂ + m²/sh²),          E = 𝓕(ε)
//! LL:      A = ½(∂^*∂ + α² - ½(1 - Q²)),  E = ½N_L ε + G(ε)
//! ε₁:      A = ½R_Q,                      E = N(ε₁; ε)
//! ```
//!
//! `N_L` is the nonlocal, real-linear remainder of `L_Q^* L_Q`, rewritten
//! without derivatives of `ε` inside integrals. The `ε₁` formulation needs
//! `ε` for its gauge fields and runs a direct integration alongside.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaugefields::{a0_values, a_theta_values, darboux_values};
use crate::hgrid::{h1m_norm, ComplexRadialField, RadialGrid};
use crate::io::svg_line_plot;
use crate::linops::ProfileOps;
use crate::tridiag::{solve_shifted, Tridiagonal};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "epsilon_direct")]
    Direct,
    #[serde(rename = "epsilon_LL")]
    LL,
    #[serde(rename = "epsilon1")]
    Epsilon1,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Direct => "epsilon_direct",
            Formulation::LL => "epsilon_LL",
            Formulation::Epsilon1 => "epsilon1",
        })
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon_direct" | "direct" => Ok(Formulation::Direct),
            "epsilon_LL" | "LL" | "ll" => Ok(Formulation::LL),
            "epsilon1" => Ok(Formulation::Epsilon1),
            _ => Err(Error::InvalidArgument(format!("unknown formulation '{s}'"))),
        }
    }
}

/// `Off` drops `E` entirely, leaving the Crank–Nicolson flow of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Full,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub formulation: Formulation,
    pub dt: f64,
    pub t_final: f64,
    /// Peak damping rate of the sponge on the outer 10% of nodes; 0 disables it.
    pub sponge: f64,
    pub nonlinearity: Nonlinearity,
    /// Approximate number of trace rows.
    pub samples: usize,
    pub local_radius: f64,
    pub blowup_threshold: f64,
    /// Budget for `sup_t ‖ε‖_{H¹_m} / δ`; an implementation choice, not a
    /// constant from the theory.
    pub stability_factor: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            formulation: Formulation::Direct,
            dt: 0.02,
            t_final: 10.0,
            sponge: 0.0,
            nonlinearity: Nonlinearity::Full,
            samples: 200,
            local_radius: 2.0,
            blowup_threshold: 0.5,
            stability_factor: 10.0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return bad(format!("T = {} must be at least dt = {}", self.t_final, self.dt));
        }
        if !(self.sponge >= 0.0 && self.sponge.is_finite()) {
            return bad(format!("sponge strength must be non-negative, got {}", self.sponge));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blow-up threshold must be positive".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// `𝓕(ε)` of the direct formulation.
pub fn forcing_direct(ops: &ProfileOps, eps: &[C64]) -> Vec<C64> {
    let grid = ops.grid();
    let (q, al, sh) = (ops.q(), ops.alpha(), grid.sh());
    let a_q = ops.profile().a_theta();
    let def = ops.profile().deficit();
    let m = ops.m() as f64;
    let a = a_theta_values(ops, eps);
    let e1 = darboux_values(ops, eps, &a);
    let a0 = a0_values(ops, &e1, eps);
    (0..eps.len())
        .map(|i| {
            let e = eps[i];
            let g = a[i] / sh[i];
            let phi = e + q[i];
            let one_m_q2 = def[i] * (2.0 - def[i]);
            let cent = (a_q[i] * a_q[i] - 2.0 * m * a_q[i]) / (sh[i] * sh[i]);
            e * (-0.25 * one_m_q2 + 0.5 * cent)
                + phi * (0.5 * (q[i] * e.re + 0.5 * e.norm_sqr()) + g * al[i] + 0.5 * g * g - a0[i])
        })
        .collect()
}

/// `½ N_L ε`, the nonlocal real-linear part of `½ L_Q^* L_Q`.
pub fn half_nl(ops: &ProfileOps, eps: &[C64]) -> Vec<C64> {
    let grid = ops.grid();
    let (q, al) = (ops.q(), ops.alpha());
    let n = eps.len();
    let bq = ops.bq_values(eps); // Q · (1/sh) ∫ Q Re ε sh
    let t1: Vec<f64> = (0..n).map(|i| al[i] * q[i] * eps[i].re).collect();
    let t2: Vec<f64> = (0..n).map(|i| q[i] * bq[i]).collect();
    let i1 = grid.cumulative_to_end(&t1);
    let i2 = grid.cumulative_to_end(&t2);
    (0..n)
        .map(|i| {
            C64::new(
                q[i] * q[i] * eps[i].re - al[i] * bq[i] - q[i] * i1[i] + 0.5 * q[i] * i2[i],
                0.0,
            )
        })
        .collect()
}

/// `G(ε)` of the `L_Q^* L_Q` formulation, all nine groups.
pub fn nonlinearity_ll(ops: &ProfileOps, eps: &[C64]) -> Vec<C64> {
    let grid = ops.grid();
    let (q, al, sh) = (ops.q(), ops.alpha(), grid.sh());
    let n = eps.len();
    let a = a_theta_values(ops, eps);
    let e1 = darboux_values(ops, eps, &a);
    let a0 = a0_values(ops, &e1, eps);
    let abs2: Vec<f64> = eps.iter().map(|e| e.norm_sqr()).collect();
    let g2: Vec<f64> = grid
        .cumulative_weighted_from_origin(&abs2)
        .iter()
        .zip(sh)
        .map(|(c, s)| -0.5 * c / s)
        .collect();
    let g: Vec<f64> = (0..n).map(|i| a[i] / sh[i]).collect();
    let d = grid.ddr(eps, ops.m());
    let t3: Vec<f64> = (0..n).map(|i| ((d[i] + eps[i] * (al[i] + g[i])) * eps[i].conj()).re).collect();
    let t4: Vec<f64> = (0..n).map(|i| q[i] * q[i] * g2[i]).collect();
    let t5: Vec<f64> = (0..n).map(|i| q[i] * g[i] * eps[i].re).collect();
    let i3 = grid.cumulative_to_end(&t3);
    let i4 = grid.cumulative_to_end(&t4);
    let i5 = grid.cumulative_to_end(&t5);
    (0..n)
        .map(|i| {
            let e = eps[i];
            let phi = e + q[i];
            e * (-a0[i] + 0.5 * (q[i] * e.re + 0.5 * abs2[i]) + al[i] * g[i])
                + 0.25 * abs2[i] * q[i]
                + phi * (0.5 * g[i] * g[i])
                + al[i] * q[i] * g2[i]
                - q[i] * (0.5 * i3[i] + 0.5 * i4[i] + i5[i])
        })
        .collect()
}

/// `N(ε₁)` with gauge fields from the companion `ε`.
pub fn nonlinearity_eps1(ops: &ProfileOps, eps1: &[C64], eps: &[C64]) -> Vec<C64> {
    let grid = ops.grid();
    let (q, al, sh, coth) = (ops.q(), ops.alpha(), grid.sh(), grid.coth());
    let a = a_theta_values(ops, eps);
    let a0 = a0_values(ops, eps1, eps);
    (0..eps.len())
        .map(|i| {
            let g = a[i] / sh[i];
            let e = eps[i];
            let k = q[i] * e.re + 0.5 * e.norm_sqr() - 2.0 * coth[i] * g + 2.0 * g * al[i] + g * g;
            eps1[i] * (0.5 * k - a0[i])
        })
        .collect()
}

/// One formulation's Crank–Nicolson stepper at a fixed `dt`.
#[derive(Debug, Clone)]
pub struct Stepper {
    ops: Arc<ProfileOps>,
    formulation: Formulation,
    nonlinearity: Nonlinearity,
    dt: f64,
    a: Tridiagonal,
    damping: Vec<f64>,
}

impl Stepper {
    pub fn new(ops: Arc<ProfileOps>, formulation: Formulation, dt: f64, sponge: f64, nonlinearity: Nonlinearity) -> Self {
        let grid = ops.grid().clone();
        let n = grid.n();
        let mut a = ops.laplacian().clone();
        match formulation {
            Formulation::Direct => {
                let m2 = (ops.m() * ops.m()) as f64;
                for (d, s) in a.diag.iter_mut().zip(grid.sh()) {
                    *d += m2 / (s * s);
                }
            }
            Formulation::LL => {
                let def = ops.profile().deficit();
                for i in 0..n {
                    a.diag[i] += ops.alpha()[i].powi(2) - 0.5 * def[i] * (2.0 - def[i]);
                }
            }
            Formulation::Epsilon1 => a = ops.rq_matrix(),
        }
        for v in a.lower.iter_mut().chain(a.diag.iter_mut()).chain(a.upper.iter_mut()) {
            *v *= 0.5;
        }
        let damping = sponge_profile(&grid, sponge);
        Self { ops, formulation, nonlinearity, dt, a, damping }
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.a
    }

    fn explicit(&self, y: &[C64], companion: Option<&[C64]>) -> Result<Vec<C64>> {
        if self.nonlinearity == Nonlinearity::Off {
            return Ok(vec![ZERO; y.len()]);
        }
        let ops = &*self.ops;
        Ok(match self.formulation {
            Formulation::Direct => forcing_direct(ops, y),
            Formulation::LL => {
                let mut e = half_nl(ops, y);
                for (a, b) in e.iter_mut().zip(nonlinearity_ll(ops, y)) {
                    *a += b;
                }
                e
            }
            Formulation::Epsilon1 => {
                let c = companion.ok_or_else(|| {
                    Error::CompanionUnavailable("the ε₁ flow needs ε for its gauge fields".into())
                })?;
                let mut e = nonlinearity_eps1(ops, y, c);
                *e.last_mut().expect("non-empty grid") += boundary_source(ops, c);
                e
            }
        })
    }

    fn cn_solve(&self, y: &[C64], e: &[C64]) -> Result<Vec<C64>> {
        let hdt = 0.5 * self.dt;
        let ay = self.a.apply_complex(y);
        let mut rhs: Vec<C64> = (0..y.len())
            .map(|i| y[i] * (1.0 - hdt * self.damping[i]) - C64::i() * (ay[i] * hdt + e[i] * self.dt))
            .collect();
        let shift: Vec<C64> = self.damping.iter().map(|g| C64::new(1.0 + hdt * g, 0.0)).collect();
        solve_shifted(&self.a, &shift, C64::new(0.0, hdt), &mut rhs)?;
        Ok(rhs)
    }

    /// Advance `y` by `dt`. The `ε₁` flow takes the companion `ε` at both
    /// ends of the step.
    pub fn step(&self, y: &[C64], companion: Option<(&[C64], &[C64])>) -> Result<Vec<C64>> {
        let (c0, c_mid) = match companion {
            Some((a, b)) => {
                let mid: Vec<C64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
                (Some(a.to_vec()), Some(mid))
            }
            None => (None, None),
        };
        let e0 = self.explicit(y, c0.as_deref())?;
        let pred = self.cn_solve(y, &e0)?;
        if self.nonlinearity == Nonlinearity::Off {
            return Ok(pred);
        }
        let mid: Vec<C64> = y.iter().zip(&pred).map(|(a, b)| (a + b) * 0.5).collect();
        let e1 = self.explicit(&mid, c_mid.as_deref())?;
        let out = self.cn_solve(y, &e1)?;
        if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(out)
    }
}

/// `ε₁` does not vanish at `r_max` even though `ε` does: its Dirichlet value
/// is `D(ε)` at the outer face, `∂_r ε + Q a_θ / sh` there. Entering it
/// through the ghost `2b - f_N` of `½∂*∂` leaves this source at the last node.
fn boundary_source(ops: &ProfileOps, eps: &[C64]) -> C64 {
    let g = ops.grid();
    let n = g.n();
    let (h, s_face, s_node) = (g.h(), g.sh_face()[n], g.sh()[n - 1]);
    let a = a_theta_values(ops, eps);
    let extrap = |v: &[f64]| 1.5 * v[n - 1] - 0.5 * v[n - 2];
    let b = eps[n - 1] * (-2.0 / h) + C64::new(extrap(ops.q()) * extrap(&a) / s_face, 0.0);
    -b * (s_face / (h * h * s_node))
}

/// Quadratic ramp from 0 at `0.9 r_max` to `strength` at `r_max`.
fn sponge_profile(grid: &RadialGrid, strength: f64) -> Vec<f64> {
    let start = 0.9 * grid.r_max();
    grid.r()
        .iter()
        .map(|&r| if strength > 0.0 && r > start { strength * ((r - start) / (grid.r_max() - start)).powi(2) } else { 0.0 })
        .collect()
}

pub fn step_epsilon_direct(ops: Arc<ProfileOps>, eps: &[C64], dt: f64) -> Result<Vec<C64>> {
    Stepper::new(ops, Formulation::Direct, dt, 0.0, Nonlinearity::Full).step(eps, None)
}

pub fn step_epsilon_ll(ops: Arc<ProfileOps>, eps: &[C64], dt: f64) -> Result<Vec<C64>> {
    Stepper::new(ops, Formulation::LL, dt, 0.0, Nonlinearity::Full).step(eps, None)
}

pub fn step_epsilon1(
    ops: Arc<ProfileOps>,
    eps1: &[C64],
    dt: f64,
    companion: Option<(&[C64], &[C64])>,
) -> Result<Vec<C64>> {
    Stepper::new(ops, Formulation::Epsilon1, dt, 0.0, Nonlinearity::Full).step(eps1, companion)
}

/// Conserved-quantity bookkeeping relative to the bare vortex.
#[derive(Debug, Clone)]
pub struct Monitors {
    ops: Arc<ProfileOps>,
    /// `M[Q] = -∫ (1 - Q²) sh dr`.
    pub mass_q: f64,
    /// `V[Q]`.
    pub energy_q: f64,
}

impl Monitors {
    pub fn new(ops: Arc<ProfileOps>) -> Self {
        let grid = ops.grid().clone();
        let def = ops.profile().deficit();
        let q = ops.q();
        let al = ops.alpha();
        let one_m_q2: Vec<f64> = def.iter().map(|d| d * (2.0 - d)).collect();
        let mass_q = -grid.integrate(&one_m_q2);
        // with Q' = -αQ
        let dens: Vec<f64> = (0..grid.n())
            .map(|i| 0.5 * one_m_q2[i] * one_m_q2[i] + 2.0 * al[i] * al[i] * q[i] * q[i])
            .collect();
        let energy_q = std::f64::consts::PI * grid.integrate(&dens);
        Self { ops, mass_q, energy_q }
    }

    /// `M[Q + ε] - M[Q] = ∫ (2 Q Re ε + |ε|²) sh dr`.
    pub fn mass_shift(&self, eps: &[C64]) -> f64 {
        let q = self.ops.q();
        let s: Vec<f64> = eps.iter().zip(q).map(|(e, q)| 2.0 * q * e.re + e.norm_sqr()).collect();
        self.ops.grid().integrate(&s)
    }

    /// `V[Q + ε] - V[Q]`, expanded so nothing of size `V[Q]` cancels. The
    /// gradient term uses cell-face differences, matching the flux-form
    /// `∂^*∂` including its Dirichlet ghost.
    pub fn energy_shift(&self, eps: &[C64]) -> f64 {
        let ops = &*self.ops;
        let grid = ops.grid();
        let n = grid.n();
        let h = grid.h();
        let (q, sh, sf) = (ops.q(), grid.sh(), grid.sh_face());
        let def = ops.profile().deficit();
        let a_q = ops.profile().a_theta();
        let m = ops.m() as f64;
        let a = a_theta_values(ops, eps);
        let mut bulk = 0.0;
        for i in 0..n {
            let e = eps[i];
            let s = 2.0 * q[i] * e.re + e.norm_sqr();
            let one_m_q2 = def[i] * (2.0 - def[i]);
            let mu = m - a_q[i];
            let nu = mu - a[i];
            let cent = ((a[i] * a[i] - 2.0 * mu * a[i]) * q[i] * q[i] + nu * nu * s) / (sh[i] * sh[i]);
            bulk += (0.5 * (s * s - 2.0 * one_m_q2 * s) + cent) * grid.weights()[i];
        }
        let mut grad = 0.0;
        for j in 1..n {
            let dq = q[j] - q[j - 1];
            let de = eps[j] - eps[j - 1];
            grad += sf[j] * (2.0 * dq * de.re + de.norm_sqr()) / h;
        }
        // ghost ε_{N+1} = -ε_N; Q is flat to round-off there
        grad += sf[n] * 4.0 * eps[n - 1].norm_sqr() / h;
        std::f64::consts::PI * (bulk + grad)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub h1m: f64,
    pub l2: f64,
    pub linf: f64,
    pub eps1_l2: f64,
    pub local_mass: f64,
    pub total_mass: f64,
    pub energy: f64,
    pub strichartz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { t: f64, sup: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub m: i32,
    pub formulation: Formulation,
    pub dt: f64,
    pub t_final: f64,
    /// `‖ε(0)‖_{H¹_m}`.
    pub delta: f64,
    pub status: RunStatus,
    pub samples: Vec<TraceSample>,
    /// Mass and energy relative to the bare vortex, unrounded by `M[Q]`, `V[Q]`.
    pub mass_shift: Vec<f64>,
    pub energy_shift: Vec<f64>,
    /// Mass that has left through `r_max` by each sample time. The Dirichlet
    /// wall holds `ε` but not its flux, so `M` alone is not conserved.
    pub mass_outflow: Vec<f64>,
}

pub const TRACE_COLUMNS: [&str; 9] =
    ["t", "h1m", "l2", "linf", "eps1_l2", "local_mass", "total_mass", "energy", "strichartz"];

impl EvolutionTrace {
    pub fn sup_h1m(&self) -> f64 {
        self.samples.iter().map(|s| s.h1m).fold(0.0, f64::max)
    }

    pub fn sup_eps1_l2(&self) -> f64 {
        self.samples.iter().map(|s| s.eps1_l2).fold(0.0, f64::max)
    }

    /// `sup_t ‖ε‖_{H¹_m} / δ`.
    pub fn stability_ratio(&self) -> f64 {
        if self.delta == 0.0 {
            0.0
        } else {
            self.sup_h1m() / self.delta
        }
    }

    /// Range of `‖ε₁‖_{L²} / ‖ε‖_{H¹_m}` over samples with `ε ≠ 0`.
    pub fn equivalence_band(&self) -> (f64, f64) {
        self.samples
            .iter()
            .filter(|s| s.h1m > 0.0)
            .map(|s| s.eps1_l2 / s.h1m)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    fn drift(&self, series: &[f64]) -> f64 {
        let t_end = self.samples.last().map(|s| s.t).unwrap_or(0.0);
        if t_end <= 0.0 {
            return 0.0;
        }
        let x0 = series[0];
        series.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max) / t_end
    }

    /// `max_t |M(t) - M(0)| / T`.
    pub fn mass_drift_rate(&self) -> f64 {
        self.drift(&self.mass_shift)
    }

    pub fn energy_drift_rate(&self) -> f64 {
        self.drift(&self.energy_shift)
    }

    /// Drift of `M(t)` plus the mass that has left through the outer wall.
    pub fn mass_balance_drift_rate(&self) -> f64 {
        let bal: Vec<f64> = self.mass_shift.iter().zip(&self.mass_outflow).map(|(m, f)| m + f).collect();
        self.drift(&bal)
    }

    pub fn strichartz(&self) -> f64 {
        self.samples.last().map(|s| s.strichartz).unwrap_or(0.0)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let f: fn(&TraceSample) -> f64 = match name {
            "t" => |s| s.t,
            "h1m" => |s| s.h1m,
            "l2" => |s| s.l2,
            "linf" => |s| s.linf,
            "eps1_l2" => |s| s.eps1_l2,
            "local_mass" => |s| s.local_mass,
            "total_mass" => |s| s.total_mass,
            "energy" => |s| s.energy,
            "strichartz" => |s| s.strichartz,
            _ => return None,
        };
        Some(self.samples.iter().map(f).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                s.t, s.h1m, s.l2, s.linf, s.eps1_l2, s.local_mass, s.total_mass, s.energy, s.strichartz
            )?;
        }
        Ok(())
    }

    pub fn svg(&self, column: &str) -> Option<String> {
        let ys = self.column(column)?;
        let ts = self.column("t")?;
        Some(svg_line_plot(&format!("{column} ({})", self.formulation), "t", &ts, &ys))
    }

    pub fn summary(&self) -> TraceSummary {
        let (lo, hi) = self.equivalence_band();
        TraceSummary {
            m: self.m,
            formulation: self.formulation,
            dt: self.dt,
            t_final: self.t_final,
            delta: self.delta,
            status: self.status.clone(),
            sup_h1m: self.sup_h1m(),
            sup_eps1_l2: self.sup_eps1_l2(),
            stability_ratio: self.stability_ratio(),
            strichartz_l4: self.strichartz(),
            equivalence_band: (lo, hi),
            mass_drift_rate: self.mass_drift_rate(),
            mass_balance_drift_rate: self.mass_balance_drift_rate(),
            energy_drift_rate: self.energy_drift_rate(),
            local_mass_initial: self.samples.first().map(|s| s.local_mass).unwrap_or(0.0),
            local_mass_final: self.samples.last().map(|s| s.local_mass).unwrap_or(0.0),
        }
    }
}

/// Run metadata, serialized next to the trace CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummary {
    pub m: i32,
    pub formulation: Formulation,
    pub dt: f64,
    pub t_final: f64,
    pub delta: f64,
    pub status: RunStatus,
    pub sup_h1m: f64,
    pub sup_eps1_l2: f64,
    pub stability_ratio: f64,
    pub strichartz_l4: f64,
    pub equivalence_band: (f64, f64),
    pub mass_drift_rate: f64,
    pub mass_balance_drift_rate: f64,
    pub energy_drift_rate: f64,
    pub local_mass_initial: f64,
    pub local_mass_final: f64,
}

/// Trace plus the final fields.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub trace: EvolutionTrace,
    pub eps: Vec<C64>,
    pub eps1: Vec<C64>,
}

/// `δ Q e^{-(r-3)²}` rescaled to `‖ε₀‖_{H¹_m} = δ`.
pub fn initial_data(ops: &ProfileOps, delta: f64) -> Result<ComplexRadialField> {
    let grid = ops.grid().clone();
    let v: Vec<C64> = grid
        .r()
        .iter()
        .zip(ops.q())
        .map(|(r, q)| C64::new(q * (-(r - 3.0) * (r - 3.0)).exp(), 0.0))
        .collect();
    let f = ComplexRadialField::new(grid, v, ops.m())?;
    if delta == 0.0 {
        return Ok(f.scaled(0.0));
    }
    let n = h1m_norm(&f)?;
    Ok(f.scaled(delta / n))
}

struct Sampler<'a> {
    ops: &'a ProfileOps,
    monitors: Monitors,
    local: Vec<bool>,
}

impl Sampler<'_> {
    fn sample(&self, t: f64, eps: &[C64], eps1: &[C64], strichartz: f64) -> Result<(TraceSample, f64, f64)> {
        let grid = self.ops.grid();
        let m = self.ops.m();
        let f = ComplexRadialField::new(grid.clone(), eps.to_vec(), m)?;
        let abs: Vec<f64> = eps.iter().map(|v| v.norm()).collect();
        let abs1: Vec<f64> = eps1.iter().map(|v| v.norm()).collect();
        let local: Vec<f64> =
            abs.iter().zip(&self.local).map(|(a, &inside)| if inside { a * a } else { 0.0 }).collect();
        let dm = self.monitors.mass_shift(eps);
        let de = self.monitors.energy_shift(eps);
        Ok((
            TraceSample {
                t,
                h1m: h1m_norm(&f)?,
                l2: grid.lp_norm_abs(&abs, 2.0)?,
                linf: grid.lp_norm_abs(&abs, f64::INFINITY)?,
                eps1_l2: grid.lp_norm_abs(&abs1, 2.0)?,
                local_mass: grid.integrate(&local),
                total_mass: self.monitors.mass_q + dm,
                energy: self.monitors.energy_q + de,
                strichartz,
            },
            dm,
            de,
        ))
    }
}

fn l4_fourth(grid: &RadialGrid, v: &[C64]) -> f64 {
    let s: Vec<f64> = v.iter().map(|z| z.norm_sqr() * z.norm_sqr()).collect();
    grid.integrate(&s)
}

/// Evolve `eps0` under `cfg`. A blow-up stops the run and is reported in
/// the trace status rather than as an error.
pub fn run_evolution(ops: Arc<ProfileOps>, eps0: &ComplexRadialField, cfg: &EvolutionConfig) -> Result<EvolutionRun> {
    cfg.validate()?;
    ops.grid().check_same(eps0.grid())?;
    if eps0.degree() != ops.m() {
        return Err(Error::DegreeMismatch { expected: ops.m(), got: eps0.degree() });
    }
    let grid = ops.grid().clone();
    let n_steps = cfg.n_steps();
    let every = (n_steps / cfg.samples).max(1);
    let direct = Stepper::new(ops.clone(), Formulation::Direct, cfg.dt, cfg.sponge, cfg.nonlinearity);
    let primary = match cfg.formulation {
        Formulation::Direct => None,
        f => Some(Stepper::new(ops.clone(), f, cfg.dt, cfg.sponge, cfg.nonlinearity)),
    };
    let sampler = Sampler {
        ops: &ops,
        monitors: Monitors::new(ops.clone()),
        local: grid.r().iter().map(|&r| r < cfg.local_radius).collect(),
    };
    let forward = |eps: &[C64]| {
        let a = a_theta_values(&ops, eps);
        darboux_values(&ops, eps, &a)
    };

    let mut eps = eps0.values().to_vec();
    let mut eps1 = forward(&eps);
    let delta = h1m_norm(eps0)?;
    let mut samples = vec![];
    let (mut dms, mut des, mut outs) = (vec![], vec![], vec![]);
    let outflow_rate = |eps: &[C64]| {
        // d/dt ∫|φ|² sh = -sh Q Im ∂_r ε at the wall, face derivative -2 ε_N / h
        let n = grid.n();
        let q_face = 1.5 * ops.q()[n - 1] - 0.5 * ops.q()[n - 2];
        -2.0 * grid.sh_face()[n] * q_face * eps[n - 1].im / grid.h()
    };
    let mut outflow = 0.0;
    let mut rate_prev = outflow_rate(&eps);
    let mut l4_acc = 0.0;
    let mut l4_prev = l4_fourth(&grid, &eps);
    let (s, dm, de) = sampler.sample(0.0, &eps, &eps1, 0.0)?;
    samples.push(s);
    dms.push(dm);
    des.push(de);
    outs.push(0.0);
    let mut status = RunStatus::Completed;

    for k in 1..=n_steps {
        let t = k as f64 * cfg.dt;
        match (cfg.formulation, &primary) {
            (Formulation::Direct, _) => {
                eps = direct.step(&eps, None)?;
            }
            (Formulation::LL, Some(st)) => {
                eps = st.step(&eps, None)?;
            }
            (Formulation::Epsilon1, Some(st)) => {
                let next = direct.step(&eps, None)?;
                eps1 = st.step(&eps1, Some((&eps, &next)))?;
                eps = next;
            }
            _ => unreachable!("stepper exists for every non-direct formulation"),
        }
        if cfg.formulation != Formulation::Epsilon1 {
            eps1 = forward(&eps);
        }
        let rate = outflow_rate(&eps);
        outflow += 0.5 * cfg.dt * (rate + rate_prev);
        rate_prev = rate;
        let l4 = l4_fourth(&grid, &eps);
        l4_acc += 0.5 * cfg.dt * (l4 + l4_prev);
        l4_prev = l4;
        let sup = eps.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let blown = sup > cfg.blowup_threshold;
        if k % every == 0 || k == n_steps || blown {
            let (s, dm, de) = sampler.sample(t, &eps, &eps1, l4_acc.powf(0.25))?;
            samples.push(s);
            dms.push(dm);
            des.push(de);
            outs.push(outflow);
        }
        if blown {
            log::warn!("blow-up detector fired at t = {t}: sup |ε| = {sup:.3e}");
            status = RunStatus::BlowUp { t, sup };
            break;
        }
    }
    Ok(EvolutionRun {
        trace: EvolutionTrace {
            m: ops.m(),
            formulation: cfg.formulation,
            dt: cfg.dt,
            t_final: n_steps as f64 * cfg.dt,
            delta,
            status,
            samples,
            mass_shift: dms,
            energy_shift: des,
            mass_outflow: outs,
        },
        eps,
        eps1,
    })
}

/// The stability experiment: data of size `δ` in `H¹_m`, evolved to `T`.
pub fn run_stability_experiment(ops: Arc<ProfileOps>, delta: f64, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    if !(0.0..=1e-2).contains(&delta) {
        return Err(Error::InvalidArgument(format!("δ = {delta} is outside the small-data range [0, 1e-2]")));
    }
    let eps0 = initial_data(&ops, delta)?;
    Ok(run_evolution(ops, &eps0, cfg)?.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaugefields::darboux_forward;
    use crate::hgrid::weighted_lp_norm;
    use crate::vortex::solve_profile;

    fn ops(m: i32, r_max: f64, n: usize) -> Arc<ProfileOps> {
        let g = RadialGrid::new(r_max, n).unwrap();
        Arc::new(ProfileOps::new(Arc::new(solve_profile(m, &g, 1e-8).unwrap())))
    }

    fn l2_diff(grid: &RadialGrid, a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm()).collect();
        grid.lp_norm_abs(&d, 2.0).unwrap()
    }

    #[test]
    fn vortex_is_a_fixed_point_of_every_formulation() {
        let o = ops(1, 15.0, 600);
        let z = vec![ZERO; 600];
        for f in [Formulation::Direct, Formulation::LL, Formulation::Epsilon1] {
            let st = Stepper::new(o.clone(), f, 0.05, 0.0, Nonlinearity::Full);
            let out = st.step(&z, Some((&z, &z))).unwrap();
            assert!(out.iter().all(|v| v.norm() == 0.0), "{f}");
        }
        let cfg = EvolutionConfig { t_final: 1.0, dt: 0.1, ..Default::default() };
        let tr = run_stability_experiment(o, 0.0, &cfg).unwrap();
        assert!(tr.samples.iter().all(|s| s.h1m == 0.0 && s.eps1_l2 == 0.0));
    }

    #[test]
    fn ll_remainder_matches_direct_forcing() {
        // ½(T_loc - K) ε + ½N_L ε + G(ε) = 𝓕(ε), to O(h²)
        let mut errs = vec![];
        for n in [1000, 2000] {
            let o = ops(2, 20.0, n);
            let g = o.grid().clone();
            let eps: Vec<C64> = g
                .r()
                .iter()
                .zip(o.q())
                .map(|(r, q)| C64::new(0.3, 0.2) * *q * (-(r - 3.0f64).powi(2)).exp())
                .collect();
            let a_q = o.profile().a_theta();
            let m = o.m() as f64;
            let def = o.profile().deficit();
            let lhs_a = half_nl(&o, &eps);
            let lhs_b = nonlinearity_ll(&o, &eps);
            let rhs = forcing_direct(&o, &eps);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let s = g.sh()[i];
                let diff_pot = (a_q[i] * a_q[i] - 2.0 * m * a_q[i]) / (s * s) - 0.5 * def[i] * (2.0 - def[i]);
                let lhs = eps[i] * (0.5 * diff_pot) + lhs_a[i] + lhs_b[i];
                worst = worst.max((lhs - rhs[i]).norm());
            }
            errs.push(worst);
        }
        assert!(errs[1] < 1e-3 && errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn energy_shift_matches_bogomolny_identity() {
        // V - V[Q] = π ‖ε₁‖²: the boundary term stays m even though the
        // flux perturbation a_θ(r_max) does not vanish
        let o = ops(1, 20.0, 2000);
        let g = o.grid().clone();
        let eps = initial_data(&o, 1e-2).unwrap();
        let e1 = darboux_forward(&o, &eps).unwrap();
        let a = a_theta_values(&o, eps.values());
        assert!(a[g.n() - 1] < -1e-3);
        let mon = Monitors::new(o.clone());
        let lhs = mon.energy_shift(eps.values());
        let rhs = std::f64::consts::PI * weighted_lp_norm(&e1, 2.0).unwrap().powi(2);
        assert!((lhs - rhs).abs() < 1e-3 * lhs.abs(), "{lhs} vs {rhs}");
        assert!((mon.energy_q - std::f64::consts::PI).abs() < 1e-3, "{}", mon.energy_q);
    }

    #[test]
    fn free_flow_is_unitary() {
        let o = ops(1, 20.0, 1000);
        let g = o.grid().clone();
        let eps = initial_data(&o, 1e-3).unwrap();
        let st = Stepper::new(o.clone(), Formulation::Direct, 0.05, 0.0, Nonlinearity::Off);
        let mut y = eps.values().to_vec();
        let n0 = l2_diff(&g, &y, &vec![ZERO; y.len()]);
        for _ in 0..100 {
            y = st.step(&y, None).unwrap();
        }
        let n1 = l2_diff(&g, &y, &vec![ZERO; y.len()]);
        assert!((n1 - n0).abs() < 1e-12 * n0, "{n0} {n1}");
    }

    #[test]
    fn direct_scheme_is_second_order_in_time() {
        let o = ops(1, 15.0, 600);
        let g = o.grid().clone();
        let eps0 = initial_data(&o, 1e-2).unwrap();
        let run = |dt: f64| {
            let cfg = EvolutionConfig { dt, t_final: 1.0, ..Default::default() };
            run_evolution(o.clone(), &eps0, &cfg).unwrap().eps
        };
        let reference = run(0.2 / 8.0);
        let e1 = l2_diff(&g, &run(0.2), &reference);
        let e2 = l2_diff(&g, &run(0.1), &reference);
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "{e1} {e2} {order}");
    }

    #[test]
    fn epsilon1_flow_requires_companion() {
        let o = ops(1, 15.0, 600);
        let z = vec![ZERO; 600];
        let err = step_epsilon1(o, &z, 0.1, None).unwrap_err();
        assert!(matches!(err, Error::CompanionUnavailable(_)));
    }

    #[test]
    fn trace_csv_has_fixed_columns() {
        let o = ops(1, 15.0, 600);
        let cfg = EvolutionConfig { t_final: 0.5, dt: 0.1, ..Default::default() };
        let tr = run_stability_experiment(o, 1e-3, &cfg).unwrap();
        let mut buf = vec![];
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(text.lines().count(), tr.samples.len() + 1);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(tr.svg("energy").unwrap().contains("<path"));
    }
}

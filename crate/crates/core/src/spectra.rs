//! Spectral analysis of `R_Q` and `H` in half-line form.
//!
//! Every eigenvalue count is computed twice: by Sturm sequences on the
//! symmetrized tridiagonal matrix and by counting nodes of the regular
//! solution of the ODE, integrated with RK4 at step `h` on the profile's
//! quarter-point samples. The two discretizations are independent, so an
//! agreement is a real check.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::hgrid::RadialGrid;
use crate::linops::{v_rq_at, ProfileOps};
use crate::tridiag::{eigenvalues_in, gershgorin, sturm_count, Tridiagonal};
use crate::vortex::VortexProfile;

/// Bottom of the essential spectrum of `R_Q`: `1 + 1/4`.
pub const THRESHOLD: f64 = 1.25;
/// `√5 / 2`, the decay rate of solutions of `H f = 0`.
pub const KAPPA: f64 = 1.118_033_988_749_895;
pub const DEFAULT_ETA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Eigenvalue {
    pub value: f64,
    pub error_bar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub operator: String,
    pub essential_spectrum_bottom: f64,
    pub search_interval: (f64, f64),
    pub gap_eigenvalues: Vec<Eigenvalue>,
    pub matrix_count: usize,
    pub shooting_count: usize,
    /// Fitted `1/r²` coefficient of the half-line potential at the origin.
    pub indicial_coefficient: f64,
    /// Origin exponent `ν` of the regular half-line solution.
    pub indicial_exponent: f64,
    pub resonance_indicator: Option<f64>,
    /// Unnormalized coefficient of the `r e^{-r/2}` branch.
    pub resonance_raw: Option<f64>,
    pub notes: Vec<String>,
}

/// `-u'' + V u = E u` on `(0, r_max)` with `u(r_max) = 0`, with `V`
/// sampled at every quarter step so RK4 at step `h` never interpolates.
#[derive(Debug, Clone)]
pub struct HalfLineProblem {
    grid: Arc<RadialGrid>,
    // k = 0..=4N, r = k h/4; k = 0 is unused
    v: Vec<f64>,
    matrix: Tridiagonal,
    label: String,
}

/// Regular solution sampled at the nodes from `start` on.
#[derive(Debug, Clone)]
pub struct RegularSolution {
    pub start: usize,
    pub u: Vec<f64>,
    pub u_end: f64,
    /// Values are `u * 2^scale_exp2`.
    pub scale_exp2: i32,
    pub nu: f64,
    pub zeros: usize,
}

impl HalfLineProblem {
    /// Half-line form of `∂^*∂ + 1 + V_pot`, where `V_pot` is given at the
    /// quarter points and nodes.
    fn from_radial_potential(
        grid: &Arc<RadialGrid>,
        v_pot_quarter: impl Fn(usize, f64) -> f64,
        label: &str,
    ) -> Self {
        let n = grid.n();
        let dr = grid.h() / 4.0;
        let v: Vec<f64> = (0..=4 * n)
            .map(|k| {
                if k == 0 {
                    return f64::NAN;
                }
                let r = k as f64 * dr;
                let s = r.sinh();
                1.25 - 0.25 / (s * s) + v_pot_quarter(k, r)
            })
            .collect();
        let mut radial = grid.laplacian();
        for i in 0..n {
            radial.diag[i] += 1.0 + v_pot_quarter(4 * i + 2, grid.r()[i]);
        }
        let matrix = grid.to_half_line(&radial);
        Self { grid: grid.clone(), v, matrix, label: label.to_string() }
    }

    /// `R_Q` with its potential shifted by `shift` (0 for the real operator).
    pub fn rq(profile: &VortexProfile, shift: f64) -> Self {
        let m = profile.m();
        let label = if shift == 0.0 { "R_Q".to_string() } else { format!("R_Q{shift:+}") };
        Self::from_radial_potential(
            profile.grid(),
            |k, r| {
                let (_, a) = profile.sample_quarter(k);
                v_rq_at(r, m, profile.deficit_quarter(k), a) + shift
            },
            &label,
        )
    }

    /// `∂^*∂ + 1 + (m+1)²/sh²`, the vortex-free comparison operator.
    pub fn free(grid: &Arc<RadialGrid>, m: i32) -> Self {
        let k2 = ((m + 1) * (m + 1)) as f64;
        Self::from_radial_potential(grid, |_, r| k2 / (r.sinh() * r.sinh()), "free")
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    fn v_node(&self, i: usize) -> f64 {
        self.v[4 * i + 2]
    }

    /// Fit `r² V ≈ c + d r²` near the origin.
    pub fn indicial_fit(&self) -> (f64, f64) {
        let r = self.grid.r();
        let mut xs = vec![];
        let mut ys = vec![];
        for i in 0..self.grid.n() {
            if r[i] > 0.3 && xs.len() >= 5 {
                break;
            }
            xs.push(r[i] * r[i]);
            ys.push(r[i] * r[i] * self.v_node(i));
        }
        let f = fit::linear(&xs, &ys);
        (f.intercept, f.slope)
    }

    /// Regular solution at energy `e`, seeded with amplitude `seed` from a
    /// two-term Frobenius series.
    pub fn regular_solution(&self, e: f64, seed: f64) -> RegularSolution {
        let (c, d) = self.indicial_fit();
        let nu = 0.5 + (0.25 + c).sqrt();
        let a2 = (d - e) / (4.0 * nu + 2.0);
        let h = self.grid.h();
        let n = self.grid.n();
        let r_start = (0.1f64).max(4.0 * nu * h);
        let start = self.grid.index_below(r_start).max(1).min(n - 2);
        let r0 = self.grid.r()[start];
        let mut u = seed * r0.powf(nu) * (1.0 + a2 * r0 * r0);
        let mut du = seed * (nu * r0.powf(nu - 1.0) + a2 * (nu + 2.0) * r0.powf(nu + 1.0));
        let mut out = Vec::with_capacity(n - start);
        out.push(u);
        let mut scale_exp2 = 0i32;
        let mut zeros = 0usize;
        let f = |k: usize, u: f64| (self.v[k] - e) * u;
        let rk4 = |k: usize, step: f64, kq: usize, u: f64, du: f64| -> (f64, f64) {
            // kq: quarter-index offset of a half step
            let (k1u, k1d) = (du, f(k, u));
            let (k2u, k2d) = (du + 0.5 * step * k1d, f(k + kq, u + 0.5 * step * k1u));
            let (k3u, k3d) = (du + 0.5 * step * k2d, f(k + kq, u + 0.5 * step * k2u));
            let (k4u, k4d) = (du + step * k3d, f(k + 2 * kq, u + step * k3u));
            (
                u + step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
                du + step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
            )
        };
        for i in start..n - 1 {
            let k = 4 * i + 2;
            let (nu_, nd) = rk4(k, h, 2, u, du);
            if nu_ == 0.0 || nu_.signum() != u.signum() {
                zeros += 1;
            }
            u = nu_;
            du = nd;
            if u.abs() > 1e150 {
                u *= 2f64.powi(-500);
                du *= 2f64.powi(-500);
                for x in out.iter_mut() {
                    *x *= 2f64.powi(-500);
                }
                scale_exp2 += 500;
            }
            out.push(u);
        }
        // last half step to r_max
        let (u_end, _) = rk4(4 * (n - 1) + 2, 0.5 * h, 1, u, du);
        if u_end == 0.0 || u_end.signum() != u.signum() {
            zeros += 1;
        }
        RegularSolution { start, u: out, u_end, scale_exp2, nu, zeros }
    }

    /// Dirichlet eigenvalues strictly below `e`, from the matrix.
    pub fn matrix_count(&self, e: f64) -> usize {
        sturm_count(&self.matrix, e)
    }

    /// Dirichlet eigenvalues strictly below `e`, from the node count.
    pub fn shooting_count(&self, e: f64) -> usize {
        self.regular_solution(e, 1.0).zeros
    }

    /// Dual-method eigenvalue scan of `[lo, hi)`.
    pub fn scan(&self, lo: f64, hi: f64) -> Result<(Vec<Eigenvalue>, usize, usize)> {
        let (glo, _) = gershgorin(&self.matrix);
        let floor = glo.min(lo);
        let mat_hi = self.matrix_count(hi);
        let shoot_hi = self.shooting_count(hi);
        let mat_lo = self.matrix_count(floor);
        if mat_hi != shoot_hi {
            return Err(Error::SpectralCountMismatch { matrix: mat_hi, shooting: shoot_hi });
        }
        let vals = eigenvalues_in(&self.matrix, floor, hi, 1e-10)
            .into_iter()
            .map(|(value, error_bar)| Eigenvalue { value, error_bar })
            .collect();
        Ok((vals, mat_hi - mat_lo, shoot_hi))
    }

    /// Report eigenvalues below `THRESHOLD - eta`.
    pub fn gap_report(&self, eta: f64) -> Result<SpectralReport> {
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("gap margin must be positive, got {eta}")));
        }
        let hi = THRESHOLD - eta;
        let (vals, mc, sc) = self.scan(0.0, hi)?;
        let (c, _) = self.indicial_fit();
        let n = self.grid.n();
        Ok(SpectralReport {
            operator: self.label.clone(),
            essential_spectrum_bottom: self.v_node(n - 1).min(self.v[4 * n]),
            search_interval: (0.0, hi),
            gap_eigenvalues: vals,
            matrix_count: mc,
            shooting_count: sc,
            indicial_coefficient: c,
            indicial_exponent: 0.5 + (0.25 + c).sqrt(),
            resonance_indicator: None,
            resonance_raw: None,
            notes: vec![],
        })
    }

    /// Threshold behaviour of the regular solution at `E = 5/4`.
    ///
    /// Near infinity the half-line solution is `a + b r`, i.e.
    /// `ε₁ = (a + b r) e^{-r/2}` up to a constant. The raw coefficient `b`
    /// scales with the seed; the indicator `b r_max / rms(ε₁ e^{r/2})` on
    /// `[r_max/2, r_max]` does not. A resonance would make it vanish.
    pub fn resonance(&self, seed: f64) -> (f64, f64) {
        let sol = self.regular_solution(THRESHOLD, seed);
        let r = self.grid.r();
        let sh = self.grid.sh();
        let r_max = self.grid.r_max();
        let scale = 2f64.powi(sol.scale_exp2);
        let eps1 = |i: usize| sol.u[i - sol.start] * scale / sh[i].sqrt();
        let (mut xs, mut ys) = (vec![], vec![]);
        let (mut acc, mut cnt) = (0.0, 0usize);
        for i in sol.start..self.grid.n() {
            if r[i] >= 0.6 * r_max && r[i] <= 0.9 * r_max {
                xs.push(r[i]);
                ys.push(eps1(i));
            }
            if r[i] >= 0.5 * r_max {
                let y = eps1(i) * (0.5 * r[i]).exp();
                acc += y * y;
                cnt += 1;
            }
        }
        let (_, b) = fit::two_basis(&xs, &ys, |x| (-0.5 * x).exp(), |x| x * (-0.5 * x).exp());
        let rms = (acc / cnt as f64).sqrt();
        (b * r_max / rms, b)
    }

    pub fn resonance_report(&self) -> Result<SpectralReport> {
        let mut rep = self.gap_report(DEFAULT_ETA)?;
        let (ind, raw) = self.resonance(1.0);
        rep.resonance_indicator = Some(ind);
        rep.resonance_raw = Some(raw);
        rep.notes.push("indicator = b r_max / rms(eps1 e^{r/2}) on [r_max/2, r_max]".into());
        Ok(rep)
    }
}

/// No eigenvalues of `R_Q` below `5/4 - eta`, by both methods.
pub fn gap_eigenvalues_rq(profile: &VortexProfile, eta: f64) -> Result<SpectralReport> {
    HalfLineProblem::rq(profile, 0.0).gap_report(eta)
}

pub fn resonance_test_rq(profile: &VortexProfile) -> Result<SpectralReport> {
    HalfLineProblem::rq(profile, 0.0).resonance_report()
}

/// `{φ₀, φ∞}` for `H f = 0` in half-line normalization.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    grid: Arc<RadialGrid>,
    pub phi0: Vec<f64>,
    pub phi_inf: Vec<f64>,
    pub dphi0: Vec<f64>,
    pub dphi_inf: Vec<f64>,
    /// `φ₀ - sh^{1/2}`, integrated directly to avoid cancellation.
    pub phi0_correction: Vec<f64>,
    /// `W = φ₀'φ∞ - φ₀φ∞'` at every node.
    pub wronskian_nodes: Vec<f64>,
    pub wronskian: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalAsymptotics {
    pub phi0_growth_rate: f64,
    pub phi_inf_decay_rate: f64,
    pub phi0_origin_exponent: f64,
    /// Exponent of `φ∞ / log th(r/2)` at the origin (expected 1/2).
    pub phi_inf_log_branch_exponent: f64,
    pub phi0_correction_exponent: f64,
    pub wronskian: f64,
    pub wronskian_relative_spread: f64,
}

/// Integrate `𝓗 g = E g` in the regular variables `(g, p = sh g')`:
/// `g' = p/sh`, `p' = sh (Q² - E) g`. `q2(k)` is `Q²` at quarter index `k`.
fn regular_rk4(
    q2: &dyn Fn(usize) -> f64,
    e: f64,
    k: usize,
    step: f64,
    kq: isize,
    dr: f64,
    g: f64,
    p: f64,
    g_offset: f64,
) -> (f64, f64) {
    // g_offset lets the caller integrate g - 1 instead of g
    let f = |k: isize, g: f64, p: f64| {
        let k = k as usize;
        let s = (k as f64 * dr).sinh();
        (p / s, s * (q2(k) - e) * (g + g_offset))
    };
    let k = k as isize;
    let (k1g, k1p) = f(k, g, p);
    let (k2g, k2p) = f(k + kq, g + 0.5 * step * k1g, p + 0.5 * step * k1p);
    let (k3g, k3p) = f(k + kq, g + 0.5 * step * k2g, p + 0.5 * step * k2p);
    let (k4g, k4p) = f(k + 2 * kq, g + step * k3g, p + step * k3p);
    (
        g + step / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g),
        p + step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

pub fn fundamental_system_h(profile: &VortexProfile) -> Result<FundamentalSystem> {
    let grid = profile.grid().clone();
    let n = grid.n();
    let h = grid.h();
    let dr = h / 4.0;
    let m = profile.m() as f64;
    let q2 = |k: usize| {
        let (q, _) = profile.sample_quarter(k);
        q * q
    };
    let sh = grid.sh();
    let ch = grid.ch();
    let r = grid.r();

    // outward: δ = g - 1
    let mut delta = vec![0.0; n];
    let mut p0 = vec![0.0; n];
    let q1 = profile.q()[0];
    delta[0] = q1 * q1 * r[0] * r[0] / ((2.0 * m + 2.0) * (2.0 * m + 2.0));
    p0[0] = q1 * q1 * r[0] * r[0] / (2.0 * m + 2.0);
    for i in 0..n - 1 {
        let (g, p) = regular_rk4(&q2, 0.0, 4 * i + 2, h, 2, dr, delta[i], p0[i], 1.0);
        delta[i + 1] = g;
        p0[i + 1] = p;
    }

    // inward from φ∞ = e^{-κ r}
    let mut ginf = vec![0.0; n];
    let mut pinf = vec![0.0; n];
    let rl = r[n - 1];
    let phi = (-KAPPA * rl).exp();
    let dphi = -KAPPA * phi;
    ginf[n - 1] = phi / sh[n - 1].sqrt();
    pinf[n - 1] = sh[n - 1].sqrt() * dphi - 0.5 * ch[n - 1] * phi / sh[n - 1].sqrt();
    for i in (1..n).rev() {
        let (g, p) = regular_rk4(&q2, 0.0, 4 * i + 2, -h, -2, dr, ginf[i], pinf[i], 0.0);
        ginf[i - 1] = g;
        pinf[i - 1] = p;
    }

    let mut phi0 = vec![0.0; n];
    let mut phi_inf = vec![0.0; n];
    let mut dphi0 = vec![0.0; n];
    let mut dphi_inf = vec![0.0; n];
    let mut corr = vec![0.0; n];
    let mut wn = vec![0.0; n];
    for i in 0..n {
        let sq = sh[i].sqrt();
        let g0 = 1.0 + delta[i];
        phi0[i] = sq * g0;
        corr[i] = sq * delta[i];
        phi_inf[i] = sq * ginf[i];
        dphi0[i] = 0.5 * ch[i] / sq * g0 + p0[i] / sq;
        dphi_inf[i] = 0.5 * ch[i] / sq * ginf[i] + pinf[i] / sq;
        wn[i] = p0[i] * ginf[i] - g0 * pinf[i];
    }
    let mid = n / 2;
    let w = wn[mid];
    let scale = (dphi0[mid] * phi_inf[mid]).abs() + (phi0[mid] * dphi_inf[mid]).abs();
    if !(w.abs() > 1e-10 * scale) {
        return Err(Error::DegenerateFundamentalSystem(w));
    }
    Ok(FundamentalSystem {
        grid,
        phi0,
        phi_inf,
        dphi0,
        dphi_inf,
        phi0_correction: corr,
        wronskian_nodes: wn,
        wronskian: w,
    })
}

impl FundamentalSystem {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `f̃ = (1/W)[φ∞ ∫_0^r φ₀ F + φ₀ ∫_r^{r_max} φ∞ F]`, the decaying
    /// solution of `H f̃ = F` that is regular at the origin.
    pub fn green_solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        if f.len() != n {
            return Err(Error::GridMismatch(format!("{} samples for {} nodes", f.len(), n)));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let a: Vec<f64> = self.phi0.iter().zip(f).map(|(p, v)| p * v).collect();
        let b: Vec<f64> = self.phi_inf.iter().zip(f).map(|(p, v)| p * v).collect();
        let ia = self.grid.cumulative_from_origin(&a);
        let ib = self.grid.cumulative_to_end(&b);
        Ok((0..n)
            .map(|i| (self.phi_inf[i] * ia[i] + self.phi0[i] * ib[i]) / self.wronskian)
            .collect())
    }

    pub fn asymptotics(&self, m: i32) -> FundamentalAsymptotics {
        let g = &self.grid;
        let r = g.r();
        let n = g.n();
        let lo = g.index_below(g.r_max() / 3.0);
        let hi = g.index_below(2.0 * g.r_max() / 3.0);
        let xs = &r[lo..hi];
        let l0: Vec<f64> = self.phi0[lo..hi].iter().map(|v| v.ln()).collect();
        let li: Vec<f64> = self.phi_inf[lo..hi].iter().map(|v| v.ln()).collect();

        let first: Vec<usize> = (0..10.min(n)).collect();
        let lr: Vec<f64> = first.iter().map(|&i| r[i].ln()).collect();
        let lp0: Vec<f64> = first.iter().map(|&i| self.phi0[i].ln()).collect();
        let llog: Vec<f64> = first
            .iter()
            .map(|&i| (self.phi_inf[i] / (0.5 * r[i]).tanh().ln()).abs().ln())
            .collect();

        // correction exponent over a window where it dominates round-off
        let wlo = g.index_below(0.05).max(1);
        let whi = g.index_below(0.5).max(wlo + 5);
        let cr: Vec<f64> = r[wlo..whi].iter().map(|x| x.ln()).collect();
        let cc: Vec<f64> = self.phi0_correction[wlo..whi].iter().map(|v| v.abs().ln()).collect();

        let mean = self.wronskian_nodes.iter().sum::<f64>() / n as f64;
        let var = self.wronskian_nodes.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n as f64;
        let _ = m;
        FundamentalAsymptotics {
            phi0_growth_rate: fit::linear(xs, &l0).slope,
            phi_inf_decay_rate: -fit::linear(xs, &li).slope,
            phi0_origin_exponent: fit::linear(&lr, &lp0).slope,
            phi_inf_log_branch_exponent: fit::linear(&lr, &llog).slope,
            phi0_correction_exponent: fit::linear(&cr, &cc).slope,
            wronskian: self.wronskian,
            wronskian_relative_spread: var.sqrt() / self.wronskian.abs(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,phi0,phiInf")?;
        for ((r, a), b) in self.grid.r().iter().zip(&self.phi0).zip(&self.phi_inf) {
            writeln!(w, "{r:.17e},{a:.17e},{b:.17e}")?;
        }
        Ok(())
    }
}

/// Green solve through a freshly built fundamental system.
pub fn green_solve_h(fs: &FundamentalSystem, f: &[f64]) -> Result<Vec<f64>> {
    fs.green_solve(f)
}

/// `‖H f̃ - F‖_{L²(dr)}` with the discrete half-line `H`. The last row is
/// left out: its Dirichlet ghost models the wall at `r_max`, while `f̃`
/// carries the decaying branch, which is small there but not zero.
pub fn green_residual(ops: &ProfileOps, fs: &FundamentalSystem, f: &[f64]) -> Result<f64> {
    let u = fs.green_solve(f)?;
    let hu = ops.build_h().apply(&u);
    let mut d: Vec<f64> = hu.iter().zip(f).map(|(a, b)| a - b).collect();
    if let Some(last) = d.last_mut() {
        *last = 0.0;
    }
    Ok(ops.grid().l2_flat(&d))
}

/// Eigenvalue scan of `H` in `(0, 5/4)`, reported rather than asserted.
pub fn gap_scan_h(profile: &VortexProfile) -> Result<SpectralReport> {
    let grid = profile.grid().clone();
    let ops = ProfileOps::new(Arc::new(profile.clone()));
    let h = ops.build_h();
    let hi = THRESHOLD - DEFAULT_ETA;
    let mat_hi = sturm_count(&h.matrix, hi);
    let mat_lo = sturm_count(&h.matrix, 0.0);
    let shoot_hi = h_node_count(profile, hi);
    let shoot_lo = h_node_count(profile, 0.0);
    if mat_hi != shoot_hi || mat_lo != shoot_lo {
        return Err(Error::SpectralCountMismatch { matrix: mat_hi, shooting: shoot_hi });
    }
    let vals = eigenvalues_in(&h.matrix, 0.0, hi, 1e-10)
        .into_iter()
        .map(|(value, error_bar)| Eigenvalue { value, error_bar })
        .collect();
    let mut notes = vec![];
    if mat_lo > 0 {
        notes.push(format!("{mat_lo} eigenvalue(s) at or below zero"));
    }
    Ok(SpectralReport {
        operator: "H".into(),
        essential_spectrum_bottom: ops.potentials().v_h[grid.n() - 1],
        search_interval: (0.0, hi),
        gap_eigenvalues: vals,
        matrix_count: mat_hi - mat_lo,
        shooting_count: shoot_hi - shoot_lo,
        indicial_coefficient: -0.25,
        indicial_exponent: 0.5,
        resonance_indicator: None,
        resonance_raw: None,
        notes,
    })
}

/// Nodes of the regular solution of `𝓗 g = E g` on `(0, r_max]`.
pub fn h_node_count(profile: &VortexProfile, e: f64) -> usize {
    let grid = profile.grid();
    let n = grid.n();
    let h = grid.h();
    let dr = h / 4.0;
    let m = profile.m() as f64;
    let q2 = |k: usize| {
        let (q, _) = profile.sample_quarter(k);
        q * q
    };
    let r1 = grid.r()[0];
    let q1 = profile.q()[0];
    let mut g = 1.0 - e * r1 * r1 / 4.0;
    let mut p = -e * r1 * r1 / 2.0 + q1 * q1 * r1 * r1 / (2.0 * m + 2.0);
    let mut zeros = 0;
    for i in 0..n {
        let (step, kq) = if i + 1 < n { (h, 2) } else { (0.5 * h, 1) };
        let (ng, np) = regular_rk4(&q2, e, 4 * i + 2, step, kq, dr, g, p, 0.0);
        if ng == 0.0 || ng.signum() != g.signum() {
            zeros += 1;
        }
        g = ng;
        p = np;
        if g.abs() > 1e150 {
            g *= 1e-150;
            p *= 1e-150;
        }
    }
    zeros
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex::solve_profile;

    fn profile(m: i32, r_max: f64, n: usize) -> VortexProfile {
        let g = RadialGrid::new(r_max, n).unwrap();
        solve_profile(m, &g, 1e-8).unwrap()
    }

    #[test]
    fn no_gap_eigenvalues_and_deepened_well_finds_some() {
        let p = profile(1, 20.0, 2000);
        let rep = gap_eigenvalues_rq(&p, DEFAULT_ETA).unwrap();
        assert!(rep.gap_eigenvalues.is_empty(), "{:?}", rep.gap_eigenvalues);
        assert!((rep.indicial_exponent - 2.5).abs() < 0.05, "{}", rep.indicial_exponent);
        let deep = HalfLineProblem::rq(&p, -3.0).gap_report(DEFAULT_ETA).unwrap();
        assert!(deep.matrix_count >= 1 && deep.matrix_count == deep.shooting_count);
    }

    #[test]
    fn resonance_indicator_scales_with_seed() {
        let p = profile(1, 20.0, 2000);
        let prob = HalfLineProblem::rq(&p, 0.0);
        let (i1, b1) = prob.resonance(1.0);
        let (i2, b2) = prob.resonance(2.0);
        assert_eq!(b2, 2.0 * b1);
        assert!((i1 - i2).abs() <= 1e-12 * i1.abs());
        assert!(i1.abs() > 1e-2);
    }

    #[test]
    fn wronskian_is_constant_and_green_inverts() {
        let p = profile(1, 20.0, 2000);
        let fs = fundamental_system_h(&p).unwrap();
        let a = fs.asymptotics(1);
        assert!(a.wronskian > 0.0);
        assert!(a.wronskian_relative_spread < 1e-6, "{}", a.wronskian_relative_spread);
        let ops = ProfileOps::new(Arc::new(p));
        let f: Vec<f64> = ops.grid().r().iter().map(|r| (-(r - 5.0) * (r - 5.0)).exp()).collect();
        let res = green_residual(&ops, &fs, &f).unwrap();
        assert!(res < 1e-3 * ops.grid().l2_flat(&f), "{res}");
        assert!(fs.green_solve(&vec![0.0; f.len()]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn h_scan_counts_agree() {
        let p = profile(1, 20.0, 2000);
        let rep = gap_scan_h(&p).unwrap();
        assert_eq!(rep.matrix_count, rep.shooting_count);
        assert!(rep.gap_eigenvalues.iter().all(|e| e.value > 0.0));
    }
}

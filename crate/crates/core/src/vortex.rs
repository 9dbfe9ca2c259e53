//! Degree-m self-dual vortex `(Q, A_θ[Q])` on the curvature −1 plane.
//!
//! The Bogomolny system
//!
//! ```text
//! Q' = (m - A) Q / sh,      A' = ½ (1 - Q²) sh
//! ```
//!
//! is integrated in the variable `w = log Q - m log th(r/2)`, which removes
//! the `r^m` degeneracy at the origin: `w' = -A/sh`, and the right-hand side
//! is regular at `r = 0`. The unknown is `w(0)`, equivalently the leading
//! coefficient `c` in `Q ≈ c r^m`, found by bisection. A trial that makes
//! `Q` cross 1 had `c` too large; one that makes `A` exceed `m` had `c` too
//! small.
//!
//! Past the radius where the two final bisection trajectories separate, the
//! numerically unstable growing mode (`~ e^{0.618 r}`) dominates, so the
//! solution there is replaced by its decaying linearization
//! `1 - Q ∝ e^{-λ r}` with `λ = (1 + √5)/2`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::hgrid::RadialGrid;

/// Fine integration steps per grid spacing. A multiple of 4 keeps nodes,
/// cell faces and quarter points on the fine mesh.
const FINE_PER_H: usize = 20;
/// Stored samples per grid spacing (quarter points).
const SAMPLES_PER_H: usize = 4;
const MAX_BISECTIONS: usize = 200;

pub const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone)]
pub struct VortexProfile {
    m: i32,
    grid: Arc<RadialGrid>,
    q: Vec<f64>,
    a: Vec<f64>,
    // samples at r = k h / 4, k = 0..=4 (N + 1)
    q_fine: Vec<f64>,
    a_fine: Vec<f64>,
    // 1 - Q, kept separately because Q rounds to 1 at large r
    deficit_fine: Vec<f64>,
    deficit: Vec<f64>,
    shoot_c: f64,
    residual_max: f64,
    tail_start: Option<f64>,
}

/// Serialized form used by the on-disk cache.
#[derive(Debug, Serialize, Deserialize)]
struct StoredProfile {
    m: i32,
    n: usize,
    r_max: f64,
    shoot_c: f64,
    residual_max: f64,
    tail_start: Option<f64>,
    q_fine: Vec<f64>,
    a_fine: Vec<f64>,
    deficit_fine: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileSidecar {
    pub m: i32,
    pub c: f64,
    pub residual_max: f64,
    pub r_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub m: i32,
    pub c: f64,
    pub origin_exponent: f64,
    /// Fitted rate κ in `m - A_θ ~ e^{-κ r}`.
    pub flux_decay_rate: f64,
    /// Fitted rate κ in `1 - Q ~ e^{-κ r}`.
    pub modulus_decay_rate: f64,
    pub one_minus_q_at_rmax: f64,
    pub flux_defect_at_rmax: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Outcome {
    TooSmall,
    TooLarge,
}

struct Shot {
    outcome: Outcome,
    // log Q at the stored samples
    lnq: Vec<f64>,
    a: Vec<f64>,
}

/// Precomputed coefficients on the fine half-step mesh.
struct FineMesh {
    hf: f64,
    steps: usize,
    sh: Vec<f64>,
    // m log th(r/2)
    ln_th_m: Vec<f64>,
}

impl FineMesh {
    fn new(m: i32, h: f64, n: usize) -> Self {
        let hf = h / FINE_PER_H as f64;
        let steps = FINE_PER_H * (n + 1);
        let pts = 2 * steps + 1;
        let mut sh = Vec::with_capacity(pts);
        let mut ln_th_m = Vec::with_capacity(pts);
        for j in 0..pts {
            let r = j as f64 * 0.5 * hf;
            sh.push(r.sinh());
            ln_th_m.push(m as f64 * (0.5 * r).tanh().ln());
        }
        Self { hf, steps, sh, ln_th_m }
    }

    #[inline]
    fn rhs(&self, j: usize, w: f64, a: f64) -> (f64, f64) {
        let s = self.sh[j];
        let dw = if j == 0 { 0.0 } else { -a / s };
        let q = (self.ln_th_m[j] + w).exp();
        (dw, 0.5 * (1.0 - q * q) * s)
    }

    fn shoot(&self, m: i32, w0: f64) -> Shot {
        let mf = m as f64;
        let every = FINE_PER_H / SAMPLES_PER_H;
        let cap = self.steps / every + 1;
        let mut qs = Vec::with_capacity(cap);
        let mut as_ = Vec::with_capacity(cap);
        let (mut w, mut a) = (w0, 0.0);
        qs.push(f64::NEG_INFINITY);
        as_.push(0.0);
        let hf = self.hf;
        for s in 0..self.steps {
            let j = 2 * s;
            let (k1w, k1a) = self.rhs(j, w, a);
            let (k2w, k2a) = self.rhs(j + 1, w + 0.5 * hf * k1w, a + 0.5 * hf * k1a);
            let (k3w, k3a) = self.rhs(j + 1, w + 0.5 * hf * k2w, a + 0.5 * hf * k2a);
            let (k4w, k4a) = self.rhs(j + 2, w + hf * k3w, a + hf * k3a);
            w += hf / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            a += hf / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            let lnq = self.ln_th_m[j + 2] + w;
            if lnq >= 0.0 || !lnq.is_finite() {
                return Shot { outcome: Outcome::TooLarge, lnq: qs, a: as_ };
            }
            if a >= mf || !a.is_finite() {
                return Shot { outcome: Outcome::TooSmall, lnq: qs, a: as_ };
            }
            if (s + 1) % every == 0 {
                qs.push(lnq);
                as_.push(a);
            }
        }
        // no event: decide from the growing-mode component at the end
        let k = qs.len() - 1;
        let r = k as f64 * hf * every as f64;
        let (lnq, a) = (qs[k], as_[k]);
        let d = (mf - a) + GOLDEN * lnq.exp_m1() * r.sinh() / lnq.exp();
        let outcome = if d < 0.0 { Outcome::TooSmall } else { Outcome::TooLarge };
        Shot { outcome, lnq: qs, a: as_ }
    }
}

/// Solve the Bogomolny system for degree `m` on `grid`.
pub fn solve_profile(m: i32, grid: &Arc<RadialGrid>, tol: f64) -> Result<VortexProfile> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("degree must be >= 1, got {m}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = grid.n();
    let h = grid.h();
    let mesh = FineMesh::new(m, h, n);

    // bracket on w0 = log(2^m c)
    let mut lo = -2.0;
    let mut hi = 2.0;
    let mut shot_lo = mesh.shoot(m, lo);
    let mut tries = 0;
    while shot_lo.outcome != Outcome::TooSmall {
        lo -= 4.0;
        tries += 1;
        if tries > 10 {
            return Err(Error::ShootingBracket);
        }
        shot_lo = mesh.shoot(m, lo);
    }
    let mut shot_hi = mesh.shoot(m, hi);
    tries = 0;
    while shot_hi.outcome != Outcome::TooLarge {
        hi += 4.0;
        tries += 1;
        if tries > 10 {
            return Err(Error::ShootingBracket);
        }
        shot_hi = mesh.shoot(m, hi);
    }

    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(Error::ShootingNoConvergence { iterations, lo, hi });
        }
        let shot = mesh.shoot(m, mid);
        match shot.outcome {
            Outcome::TooSmall => {
                lo = mid;
                shot_lo = shot;
            }
            Outcome::TooLarge => {
                hi = mid;
                shot_hi = shot;
            }
        }
    }
    log::debug!("vortex m={m}: w0 in [{lo:.17e}, {hi:.17e}] after {iterations} bisections");

    let total = SAMPLES_PER_H * (n + 1) + 1;
    let dr = h / SAMPLES_PER_H as f64;
    let mf = m as f64;
    let common = shot_lo.lnq.len().min(shot_hi.lnq.len());
    let mut split = common;
    for k in 1..common {
        let (l, u) = (shot_lo.lnq[k], shot_hi.lnq[k]);
        let deficit = -(0.5 * (l + u)).exp_m1();
        if (u - l).abs() > 1e-4 * deficit {
            split = k;
            break;
        }
    }
    let mut q_fine = Vec::with_capacity(total);
    let mut deficit_fine = Vec::with_capacity(total);
    let mut a_fine = Vec::with_capacity(total);
    for k in 0..split.min(total) {
        let lnq = 0.5 * (shot_lo.lnq[k] + shot_hi.lnq[k]);
        q_fine.push(lnq.exp());
        deficit_fine.push(-lnq.exp_m1());
        a_fine.push(0.5 * (shot_lo.a[k] + shot_hi.a[k]));
    }
    let mut tail_start = None;
    if q_fine.len() < total {
        let ks = q_fine.len() - 1;
        let rs = ks as f64 * dr;
        let qs = deficit_fine[ks];
        tail_start = Some(rs);
        let joined = mf - GOLDEN * qs * rs.sinh() / q_fine[ks];
        log::debug!(
            "vortex m={m}: decaying tail from r={rs:.3}, A jump {:.3e}",
            joined - a_fine[ks]
        );
        for k in ks + 1..total {
            let r = k as f64 * dr;
            let q = qs * (-GOLDEN * (r - rs)).exp();
            let big_q = 1.0 - q;
            q_fine.push(big_q);
            deficit_fine.push(q);
            a_fine.push(mf - GOLDEN * q * r.sinh() / big_q);
        }
    }

    let shoot_c = (0.5 * (lo + hi)).exp() / 2f64.powi(m);
    let mut profile =
        VortexProfile::from_fine(m, grid.clone(), q_fine, a_fine, deficit_fine, shoot_c, 0.0, tail_start);
    profile.residual_max = profile.bogomolny_residual().into_iter().fold(0.0, f64::max);
    if profile.residual_max > tol {
        log::warn!("vortex m={m}: residual {:.3e} above tolerance {tol:.1e}", profile.residual_max);
    }
    Ok(profile)
}

impl VortexProfile {
    fn from_fine(
        m: i32,
        grid: Arc<RadialGrid>,
        q_fine: Vec<f64>,
        a_fine: Vec<f64>,
        deficit_fine: Vec<f64>,
        shoot_c: f64,
        residual_max: f64,
        tail_start: Option<f64>,
    ) -> Self {
        let n = grid.n();
        let at_nodes = |v: &[f64]| (1..=n).map(|i| v[SAMPLES_PER_H * i - 2]).collect::<Vec<_>>();
        let q = at_nodes(&q_fine);
        let a = at_nodes(&a_fine);
        let deficit = at_nodes(&deficit_fine);
        Self { m, grid, q, a, q_fine, a_fine, deficit_fine, deficit, shoot_c, residual_max, tail_start }
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `Q` at the grid nodes.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `A_θ[Q]` at the grid nodes.
    pub fn a_theta(&self) -> &[f64] {
        &self.a
    }

    /// `1 - Q` at the nodes, accurate where `Q` itself rounds to 1.
    pub fn deficit(&self) -> &[f64] {
        &self.deficit
    }

    /// `½(1 - Q²)` at the nodes.
    pub fn half_one_minus_q2(&self) -> Vec<f64> {
        self.deficit.iter().map(|d| 0.5 * d * (2.0 - d)).collect()
    }

    pub fn shoot_c(&self) -> f64 {
        self.shoot_c
    }

    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    /// Radius beyond which the decaying asymptotic tail is used.
    pub fn tail_start(&self) -> Option<f64> {
        self.tail_start
    }

    /// `(A_θ[Q] - m)/sh` at the nodes.
    pub fn alpha(&self) -> Vec<f64> {
        let mf = self.m as f64;
        self.a.iter().zip(self.grid.sh()).map(|(a, s)| (a - mf) / s).collect()
    }

    /// `(Q, A_θ)` at `r = k h/4`, for `k = 0..=4(N+1)`. Grid nodes are
    /// `k = 4i - 2` and cell faces `k = 4j`.
    pub fn sample_quarter(&self, k: usize) -> (f64, f64) {
        (self.q_fine[k], self.a_fine[k])
    }

    /// `1 - Q` at `r = k h/4`.
    pub fn deficit_quarter(&self, k: usize) -> f64 {
        self.deficit_fine[k]
    }

    pub fn quarter_len(&self) -> usize {
        self.q_fine.len()
    }

    /// Pointwise Bogomolny residual at the nodes, with sixth-order
    /// differences on the quarter-point samples.
    pub fn bogomolny_residual(&self) -> Vec<f64> {
        const C: [f64; 3] = [45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];
        let dr = self.grid.h() / SAMPLES_PER_H as f64;
        let mf = self.m as f64;
        let sign = if self.m % 2 == 0 { 1.0 } else { -1.0 };
        let at = |k: isize| -> (f64, f64) {
            if k < 0 {
                let (q, a) = self.sample_quarter((-k) as usize);
                (sign * q, a)
            } else {
                self.sample_quarter(k as usize)
            }
        };
        (1..=self.grid.n())
            .map(|i| {
                let k = (SAMPLES_PER_H * i - 2) as isize;
                let (mut dq, mut da) = (0.0, 0.0);
                for (j, c) in C.iter().enumerate() {
                    let o = j as isize + 1;
                    let (qp, ap) = at(k + o);
                    let (qm, am) = at(k - o);
                    dq += c * (qp - qm);
                    da += c * (ap - am);
                }
                dq /= dr;
                da /= dr;
                let r = (i as f64 - 0.5) * self.grid.h();
                let s = r.sinh();
                let (q, a) = at(k);
                let d = self.deficit_fine[k as usize];
                (dq + (a - mf) * q / s).abs() + (da / s - 0.5 * d * (2.0 - d)).abs()
            })
            .collect()
    }

    /// `∫_0^{r_max} ½(1 - Q²) sh dr`, which should equal `A_θ(r_max)`.
    pub fn flux_integral(&self) -> f64 {
        self.grid.integrate(&self.half_one_minus_q2())
    }

    /// `A_θ` at `r_max` (a quarter-point sample, not a node).
    pub fn a_theta_at_rmax(&self) -> f64 {
        self.a_fine[SAMPLES_PER_H * self.grid.n()]
    }

    pub fn deficit_at_rmax(&self) -> f64 {
        self.deficit_fine[SAMPLES_PER_H * self.grid.n()]
    }

    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            m: self.m,
            c: self.shoot_c,
            residual_max: self.residual_max,
            r_max: self.grid.r_max(),
            n: self.grid.n(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,Q,Atheta")?;
        for ((r, q), a) in self.grid.r().iter().zip(&self.q).zip(&self.a) {
            writeln!(w, "{r:.17e},{q:.17e},{a:.17e}")?;
        }
        Ok(())
    }

    fn to_stored(&self) -> StoredProfile {
        StoredProfile {
            m: self.m,
            n: self.grid.n(),
            r_max: self.grid.r_max(),
            shoot_c: self.shoot_c,
            residual_max: self.residual_max,
            tail_start: self.tail_start,
            q_fine: self.q_fine.clone(),
            a_fine: self.a_fine.clone(),
            deficit_fine: self.deficit_fine.clone(),
        }
    }

    fn from_stored(s: StoredProfile, grid: &Arc<RadialGrid>) -> Result<Self> {
        if s.n != grid.n() || s.r_max != grid.r_max() {
            return Err(Error::GridMismatch("cached profile is for another grid".into()));
        }
        let total = SAMPLES_PER_H * (s.n + 1) + 1;
        if s.q_fine.len() != total || s.a_fine.len() != total || s.deficit_fine.len() != total {
            return Err(Error::Parse("cached profile has wrong length".into()));
        }
        Ok(Self::from_fine(
            s.m,
            grid.clone(),
            s.q_fine,
            s.a_fine,
            s.deficit_fine,
            s.shoot_c,
            s.residual_max,
            s.tail_start,
        ))
    }
}

/// Fitted exponents and defects of a converged profile.
pub fn profile_asymptotics(p: &VortexProfile) -> AsymptoticsReport {
    let r = p.grid.r();
    let n = r.len();
    let first: Vec<usize> = (0..10.min(n)).collect();
    let lx: Vec<f64> = first.iter().map(|&i| r[i].ln()).collect();
    let ly: Vec<f64> = first.iter().map(|&i| p.q[i].ln()).collect();
    let origin_exponent = fit::linear(&lx, &ly).slope;

    let mf = p.m as f64;
    let lo = p.grid.index_below(0.2 * p.grid.r_max());
    let hi = p.grid.index_below(0.4 * p.grid.r_max());
    let xs: Vec<f64> = r[lo..hi].to_vec();
    let flux: Vec<f64> = p.a[lo..hi].iter().map(|a| (mf - a).ln()).collect();
    let modulus: Vec<f64> = p.deficit[lo..hi].iter().map(|d| d.ln()).collect();
    AsymptoticsReport {
        m: p.m,
        c: p.shoot_c,
        origin_exponent,
        flux_decay_rate: -fit::linear(&xs, &flux).slope,
        modulus_decay_rate: -fit::linear(&xs, &modulus).slope,
        one_minus_q_at_rmax: p.deficit_at_rmax(),
        flux_defect_at_rmax: (p.a_theta_at_rmax() - mf).abs(),
    }
}

/// On-disk profile cache keyed by `(m, h, r_max)`.
#[derive(Debug, Clone)]
pub struct ProfileCache {
    dir: PathBuf,
}

pub const CACHE_ENV: &str = "VORTEXCTL_CACHE";

impl ProfileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$VORTEXCTL_CACHE`, or a directory under the system temp dir.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(std::env::temp_dir().join("vortexlab-cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, m: i32, grid: &RadialGrid) -> PathBuf {
        self.dir.join(format!(
            "vortex_m{}_h{:016x}_r{:016x}.json",
            m,
            grid.h().to_bits(),
            grid.r_max().to_bits()
        ))
    }

    pub fn load(&self, m: i32, grid: &Arc<RadialGrid>) -> Result<Option<VortexProfile>> {
        let path = self.path_for(m, grid);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let stored: StoredProfile =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if stored.m != m {
            return Err(Error::DegreeMismatch { expected: m, got: stored.m });
        }
        VortexProfile::from_stored(stored, grid).map(Some)
    }

    pub fn store(&self, p: &VortexProfile) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(p.m, &p.grid);
        let text = serde_json::to_string(&p.to_stored()).map_err(|e| Error::Parse(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Cached profile if it meets `tol`, otherwise solve and store.
    pub fn load_or_solve(&self, m: i32, grid: &Arc<RadialGrid>, tol: f64) -> Result<VortexProfile> {
        match self.load(m, grid) {
            Ok(Some(p)) if p.residual_max <= tol => return Ok(p),
            Ok(_) => {}
            Err(e) => log::warn!("ignoring unreadable cached profile: {e}"),
        }
        let p = solve_profile(m, grid, tol)?;
        if let Err(e) = self.store(&p) {
            log::warn!("could not cache profile: {e}");
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_arguments() {
        let g = RadialGrid::new(10.0, 100).unwrap();
        assert!(solve_profile(0, &g, 1e-8).is_err());
        assert!(solve_profile(1, &g, 0.0).is_err());
    }

    #[test]
    fn small_grid_profile_is_monotone() {
        let g = RadialGrid::new(15.0, 1500).unwrap();
        for m in 1..=3 {
            let p = solve_profile(m, &g, 1e-8).unwrap();
            assert!(p.q().windows(2).all(|w| w[1] >= w[0]));
            assert!(p.deficit().windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
            assert!(p.a_theta().windows(2).all(|w| w[1] > w[0]));
            assert!(p.q().iter().all(|&q| q > 0.0 && q < 1.0));
            assert!(p.a_theta().iter().all(|&a| a >= 0.0 && a < m as f64));
            assert!(p.residual_max() < 1e-8, "m={m} residual {}", p.residual_max());
            let rep = profile_asymptotics(&p);
            assert!((rep.origin_exponent - m as f64).abs() < 0.05);
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        let g = RadialGrid::new(10.0, 400).unwrap();
        let p = cache.load_or_solve(2, &g, 1e-6).unwrap();
        let back = cache.load(2, &g).unwrap().unwrap();
        assert_eq!(back.q(), p.q());
        assert_eq!(back.a_theta(), p.a_theta());
        assert_eq!(back.shoot_c(), p.shoot_c());
    }
}

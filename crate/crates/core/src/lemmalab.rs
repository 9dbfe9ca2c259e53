//! Randomized checks of the spatial inequalities behind the small-data
//! theory. Each check evaluates both sides on a family of admissible
//! perturbations and records the worst ratio. Constants the analysis leaves
//! implicit are only reported; the pointwise Sobolev bound with constant 2
//! is the one inequality asserted.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaugefields::{a0_values, a_theta_values, darboux_values};
use crate::hgrid::{h1m_norm, ComplexRadialField, RadialGrid};
use crate::linops::ProfileOps;

/// Slack on the asserted Sobolev constant, in units of `h`. Both sides are
/// quadratures, so the discrete inequality holds up to `O(h)`.
pub const SOBOLEV_SLACK_PER_H: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `Q(r) e^{-((r-c)/w)²} e^{iφ}`.
    QGaussian,
    /// `r^m e^{-r}` times a random low-frequency cosine series.
    BandLimited,
}

/// A sample perturbation described by continuous parameters, so the same
/// sample can be laid on any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    QGaussian { center: f64, width: f64, phase: f64 },
    BandLimited { modes: Vec<(f64, C64)> },
}

impl Shape {
    pub fn family(&self) -> Family {
        match self {
            Shape::QGaussian { .. } => Family::QGaussian,
            Shape::BandLimited { .. } => Family::BandLimited,
        }
    }

    fn draw(rng: &mut ChaCha8Rng, family: Family) -> Self {
        match family {
            Family::QGaussian => Shape::QGaussian {
                center: rng.gen_range(0.5..8.0),
                width: rng.gen_range(0.3..2.5),
                phase: rng.gen_range(0.0..2.0 * PI),
            },
            Family::BandLimited => {
                let modes = (0..6)
                    .map(|k| {
                        let freq = 0.5 * k as f64 + rng.gen_range(0.0..0.5);
                        (freq, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    })
                    .collect();
                Shape::BandLimited { modes }
            }
        }
    }

    /// The sample on `ops`'s grid, scaled to `‖ε‖_{H¹_m} = amplitude`.
    pub fn realize(&self, ops: &ProfileOps, amplitude: f64) -> Result<Vec<C64>> {
        let grid = ops.grid();
        let m = ops.m();
        let v: Vec<C64> = match self {
            Shape::QGaussian { center, width, phase } => grid
                .r()
                .iter()
                .zip(ops.q())
                .map(|(r, q)| C64::from_polar(q * (-((r - center) / width).powi(2)).exp(), *phase))
                .collect(),
            Shape::BandLimited { modes } => grid
                .r()
                .iter()
                .map(|&r| {
                    let s: C64 = modes.iter().map(|(f, c)| c * (f * r).cos()).sum();
                    s * r.powi(m) * (-r).exp()
                })
                .collect(),
        };
        let f = ComplexRadialField::new(grid.clone(), v, m)?;
        let n = h1m_norm(&f)?;
        if n == 0.0 {
            return Ok(f.into_values());
        }
        Ok(f.scaled(amplitude / n).into_values())
    }
}

/// `n` shapes alternating between the two families, from a seeded stream.
/// The first `n` shapes of a longer draw are the shapes of a shorter one.
pub fn draw_shapes(n: usize, seed: u64) -> Vec<Shape> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| Shape::draw(&mut rng, if k % 2 == 0 { Family::QGaussian } else { Family::BandLimited }))
        .collect()
}

/// Every field the inequalities mention, for one perturbation.
#[derive(Debug, Clone)]
pub struct Sample {
    pub eps: Vec<C64>,
    pub eps1: Vec<C64>,
    /// `a_θ / sh`.
    pub g: Vec<f64>,
    pub a0: Vec<f64>,
    pub d_eps: Vec<C64>,
    pub h1m: f64,
}

impl Sample {
    pub fn new(ops: &ProfileOps, eps: Vec<C64>) -> Result<Self> {
        let grid = ops.grid();
        let a = a_theta_values(ops, &eps);
        let eps1 = darboux_values(ops, &eps, &a);
        let a0 = a0_values(ops, &eps1, &eps);
        let g = a.iter().zip(grid.sh()).map(|(a, s)| a / s).collect();
        let d_eps = grid.ddr(&eps, ops.m());
        let h1m = h1m_norm(&ComplexRadialField::new(grid.clone(), eps.clone(), ops.m())?)?;
        Ok(Self { eps, eps1, g, a0, d_eps, h1m })
    }
}

pub fn prepare_samples(ops: &ProfileOps, shapes: &[Shape], amplitude: f64) -> Result<Vec<Sample>> {
    shapes.iter().map(|s| Sample::new(ops, s.realize(ops, amplitude)?)).collect()
}

/// One inequality with its exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "snake_case")]
pub enum Check {
    /// `‖ε‖_p ≲ ‖ε₁‖_p + ‖a_θ/sh‖²_∞ + ‖ε‖²_∞`.
    EpsVsEps1 { p: f64 },
    /// `‖ε‖_∞ ≲ ‖ε₁‖_{p₁} + ‖a_θ/sh‖²_∞ + ‖ε₁‖²_{q₁}`.
    EpsInfVsEps1 { p1: f64, q1: f64 },
    /// `‖a_θ/sh‖_p ≲ (1 + ‖ε‖_∞)(‖ε‖_∞ + ‖ε‖_p)`.
    AThetaBound { p: f64 },
    /// `‖A₀‖_p ≲ (1 + ‖ε‖_∞) ‖ε₁‖_p`.
    A0Bound { p: f64 },
    /// `‖coth (a_θ/sh) ε₁‖_p ≲ (1 + ‖ε‖_∞)(‖ε‖_∞ + ‖ε‖_{p₁}) ‖ε₁‖_{p₂}`.
    CothWeighted { p: f64, p1: f64, p2: f64 },
    /// `‖ε/sh‖_p + ‖∂ε‖_p ≲ ‖ε₁‖_p + (1 + ‖ε‖_∞)‖a_θ/sh‖_p`.
    H1mFromEps1 { p: f64 },
    /// `max |ε|² ≤ 2 ‖ε/sh‖_2 ‖∂ε‖_2`.
    SobolevEmbedding,
}

impl Check {
    pub fn id(&self) -> &'static str {
        match self {
            Check::EpsVsEps1 { .. } => "eps_vs_eps1",
            Check::EpsInfVsEps1 { .. } => "eps_inf_vs_eps1",
            Check::AThetaBound { .. } => "a_theta_bound",
            Check::A0Bound { .. } => "A0_bound",
            Check::CothWeighted { .. } => "coth_weighted",
            Check::H1mFromEps1 { .. } => "H1m_from_eps1",
            Check::SobolevEmbedding => "sobolev_embedding",
        }
    }

    pub fn exponents(&self) -> Vec<f64> {
        match *self {
            Check::EpsVsEps1 { p } | Check::AThetaBound { p } | Check::A0Bound { p } | Check::H1mFromEps1 { p } => {
                vec![p]
            }
            Check::EpsInfVsEps1 { p1, q1 } => vec![p1, q1],
            Check::CothWeighted { p, p1, p2 } => vec![p, p1, p2],
            Check::SobolevEmbedding => vec![2.0],
        }
    }

    pub fn descriptors(&self) -> (&'static str, &'static str) {
        match self {
            Check::EpsVsEps1 { .. } => ("|eps|_p", "|eps1|_p + |a/sh|_inf^2 + |eps|_inf^2"),
            Check::EpsInfVsEps1 { .. } => ("|eps|_inf", "|eps1|_p1 + |a/sh|_inf^2 + |eps1|_q1^2"),
            Check::AThetaBound { .. } => ("|a/sh|_p", "(1 + |eps|_inf)(|eps|_inf + |eps|_p)"),
            Check::A0Bound { .. } => ("|A0|_p", "(1 + |eps|_inf)|eps1|_p"),
            Check::CothWeighted { .. } => ("|coth (a/sh) eps1|_p", "(1 + |eps|_inf)(|eps|_inf + |eps|_p1)|eps1|_p2"),
            Check::H1mFromEps1 { .. } => ("|eps/sh|_p + |d eps|_p", "|eps1|_p + (1 + |eps|_inf)|a/sh|_p"),
            Check::SobolevEmbedding => ("max |eps|^2", "2 |eps/sh|_2 |d eps|_2"),
        }
    }

    /// Only the constant-2 Sobolev bound is forced by the analysis.
    pub fn is_asserted(&self) -> bool {
        matches!(self, Check::SobolevEmbedding)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            Check::EpsVsEps1 { p } | Check::A0Bound { p } | Check::H1mFromEps1 { p } if !(2.0..f64::INFINITY).contains(&p) => {
                bad(format!("{}: need 2 <= p < inf, got {p}", self.id()))
            }
            Check::AThetaBound { p } if p < 2.0 => bad(format!("a_theta_bound: need p >= 2, got {p}")),
            Check::EpsInfVsEps1 { p1, q1 } if !(2.0..f64::INFINITY).contains(&p1) || q1 < 2.0 => {
                bad(format!("eps_inf_vs_eps1: need 2 <= p1 < inf and q1 >= 2, got ({p1}, {q1})"))
            }
            Check::CothWeighted { p, p1, p2 } => {
                if p <= 1.0 || p1 <= 1.0 || p2 <= 1.0 || !p1.is_finite() || !p2.is_finite() {
                    return bad(format!("coth_weighted: exponents must lie in (1, inf), got ({p}, {p1}, {p2})"));
                }
                if ((1.0 / p1 + 1.0 / p2) - 1.0 / p).abs() > 1e-12 {
                    return bad(format!("coth_weighted: 1/{p1} + 1/{p2} != 1/{p}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `(LHS, RHS)` for one sample.
    pub fn sides(&self, grid: &RadialGrid, s: &Sample) -> Result<(f64, f64)> {
        let abs = |v: &[C64]| v.iter().map(|z| z.norm()).collect::<Vec<_>>();
        let (e, e1, de) = (abs(&s.eps), abs(&s.eps1), abs(&s.d_eps));
        let g: Vec<f64> = s.g.iter().map(|v| v.abs()).collect();
        let n = |f: &[f64], p: f64| grid.lp_norm_abs(f, p);
        let inf = f64::INFINITY;
        let e_inf = n(&e, inf)?;
        Ok(match *self {
            Check::EpsVsEps1 { p } => (n(&e, p)?, n(&e1, p)? + n(&g, inf)?.powi(2) + e_inf * e_inf),
            Check::EpsInfVsEps1 { p1, q1 } => (e_inf, n(&e1, p1)? + n(&g, inf)?.powi(2) + n(&e1, q1)?.powi(2)),
            Check::AThetaBound { p } => (n(&g, p)?, (1.0 + e_inf) * (e_inf + n(&e, p)?)),
            Check::A0Bound { p } => {
                let a0: Vec<f64> = s.a0.iter().map(|v| v.abs()).collect();
                (n(&a0, p)?, (1.0 + e_inf) * n(&e1, p)?)
            }
            Check::CothWeighted { p, p1, p2 } => {
                let lhs: Vec<f64> = (0..e1.len()).map(|i| grid.coth()[i] * g[i] * e1[i]).collect();
                (n(&lhs, p)?, (1.0 + e_inf) * (e_inf + n(&e, p1)?) * n(&e1, p2)?)
            }
            Check::H1mFromEps1 { p } => {
                let over: Vec<f64> = e.iter().zip(grid.sh()).map(|(v, s)| v / s).collect();
                (n(&over, p)? + n(&de, p)?, n(&e1, p)? + (1.0 + e_inf) * n(&g, p)?)
            }
            Check::SobolevEmbedding => {
                let over: Vec<f64> = e.iter().zip(grid.sh()).map(|(v, s)| v / s).collect();
                (e_inf * e_inf, 2.0 * n(&over, 2.0)? * n(&de, 2.0)?)
            }
        })
    }
}

/// `LHS / RHS`, with `0/0 = 0`.
fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCase {
    pub lemma: String,
    pub lhs: String,
    pub rhs: String,
    pub exponents: Vec<f64>,
    pub families: Vec<Family>,
    pub n_samples: usize,
    pub worst_ratio: f64,
    /// Index of the sample attaining the worst ratio.
    pub worst_index: usize,
    pub ratios: Vec<f64>,
}

pub fn evaluate(grid: &RadialGrid, check: Check, samples: &[Sample], families: &[Family]) -> Result<InequalityCase> {
    check.validate()?;
    let ratios = samples
        .iter()
        .map(|s| check.sides(grid, s).map(|(l, r)| ratio(l, r)))
        .collect::<Result<Vec<_>>>()?;
    let (worst_index, worst_ratio) =
        ratios.iter().copied().enumerate().fold((0, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    if !worst_ratio.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut fam = families.to_vec();
    fam.dedup();
    let (lhs, rhs) = check.descriptors();
    Ok(InequalityCase {
        lemma: check.id().into(),
        lhs: lhs.into(),
        rhs: rhs.into(),
        exponents: check.exponents(),
        families: fam,
        n_samples: samples.len(),
        worst_ratio,
        worst_index,
        ratios,
    })
}

fn run_one(ops: &ProfileOps, check: Check, cfg: &LemmaConfig) -> Result<InequalityCase> {
    let shapes = draw_shapes(cfg.n_samples, cfg.seed);
    let samples = prepare_samples(ops, &shapes, cfg.amplitude)?;
    let fams: Vec<Family> = shapes.iter().map(Shape::family).collect();
    evaluate(ops.grid(), check, &samples, &fams)
}

pub fn check_eps_vs_eps1(ops: &ProfileOps, p: f64, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::EpsVsEps1 { p }, cfg)
}

pub fn check_a_theta_bound(ops: &ProfileOps, p: f64, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::AThetaBound { p }, cfg)
}

pub fn check_a0_bound(ops: &ProfileOps, p: f64, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::A0Bound { p }, cfg)
}

pub fn check_coth_weighted_bound(ops: &ProfileOps, p: f64, p1: f64, p2: f64, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::CothWeighted { p, p1, p2 }, cfg)
}

pub fn check_h1m_from_eps1(ops: &ProfileOps, p: f64, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::H1mFromEps1 { p }, cfg)
}

pub fn check_sobolev_embedding(ops: &ProfileOps, cfg: &LemmaConfig) -> Result<InequalityCase> {
    run_one(ops, Check::SobolevEmbedding, cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub n_samples: usize,
    /// `‖ε‖_{H¹_m}` of every sample.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self { n_samples: 200, amplitude: 1e-3, seed: 0x5eed }
    }
}

/// The exponent choices the small-data argument actually uses.
pub fn default_checks() -> Vec<Check> {
    let mut v = vec![];
    for p in [2.0, 8.0 / 3.0, 4.0] {
        v.push(Check::EpsVsEps1 { p });
    }
    v.push(Check::EpsInfVsEps1 { p1: 2.0, q1: 4.0 });
    for p in [2.0, 4.0, f64::INFINITY] {
        v.push(Check::AThetaBound { p });
    }
    for p in [2.0, 8.0 / 3.0, 4.0] {
        v.push(Check::A0Bound { p });
    }
    v.push(Check::CothWeighted { p: 4.0 / 3.0, p1: 2.0, p2: 4.0 });
    v.push(Check::CothWeighted { p: 2.0, p1: 4.0, p2: 4.0 });
    for p in [2.0, 4.0] {
        v.push(Check::H1mFromEps1 { p });
    }
    v.push(Check::SobolevEmbedding);
    v
}

/// One JSON report per check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub exponents: Vec<f64>,
    pub n_samples: usize,
    pub worst_ratio: f64,
    /// `|w(h/2) / w(h) - 1|` for the worst ratio `w`, when a refined grid was given.
    pub refinement_drift: Option<f64>,
    /// `|w(2n) / w(n) - 1|`.
    pub sample_doubling_drift: f64,
    pub asserted: bool,
    /// For the asserted check: fraction of samples satisfying the bound.
    pub holds_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaSuite {
    pub config: LemmaConfig,
    pub reports: Vec<LemmaReport>,
    /// Range of `‖ε₁‖_{L²} / ‖ε‖_{H¹_m}` over all samples.
    pub equivalence_band: (f64, f64),
}

impl LemmaSuite {
    /// All worst ratios finite, stable within `sample_tol` under sample
    /// doubling and `refine_tol` under refinement, and the Sobolev bound
    /// holding on every sample.
    pub fn passes(&self, sample_tol: f64, refine_tol: f64) -> bool {
        self.reports.iter().all(|r| {
            r.worst_ratio.is_finite()
                && r.sample_doubling_drift <= sample_tol
                && r.refinement_drift.is_none_or(|d| d <= refine_tol)
                && r.holds_fraction.is_none_or(|f| f == 1.0)
        })
    }
}

fn drift(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (b / a - 1.0).abs()
    }
}

/// Run `checks` on `cfg.n_samples` samples and on twice as many, and on the
/// refined grid `fine` when given (same shapes, re-laid).
pub fn run_suite(ops: &ProfileOps, fine: Option<&ProfileOps>, checks: &[Check], cfg: &LemmaConfig) -> Result<LemmaSuite> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("lemma suite needs at least one sample".into()));
    }
    let shapes = draw_shapes(2 * cfg.n_samples, cfg.seed);
    let fams: Vec<Family> = shapes.iter().map(Shape::family).collect();
    let doubled = prepare_samples(ops, &shapes, cfg.amplitude)?;
    let base = &doubled[..cfg.n_samples];
    let refined = match fine {
        Some(f) => Some(prepare_samples(f, &shapes[..cfg.n_samples], cfg.amplitude)?),
        None => None,
    };
    let grid = ops.grid();
    let h = grid.h();
    let mut reports = vec![];
    for &check in checks {
        let c = evaluate(grid, check, base, &fams[..cfg.n_samples])?;
        let c2 = evaluate(grid, check, &doubled, &fams)?;
        let refinement_drift = match (&refined, fine) {
            (Some(s), Some(f)) => Some(drift(c.worst_ratio, evaluate(f.grid(), check, s, &fams[..cfg.n_samples])?.worst_ratio)),
            _ => None,
        };
        let holds_fraction = check.is_asserted().then(|| {
            let bound = 1.0 + SOBOLEV_SLACK_PER_H * h;
            c2.ratios.iter().filter(|&&r| r <= bound).count() as f64 / c2.ratios.len() as f64
        });
        reports.push(LemmaReport {
            lemma: c.lemma,
            exponents: c.exponents,
            n_samples: c.n_samples,
            worst_ratio: c.worst_ratio,
            refinement_drift,
            sample_doubling_drift: drift(c.worst_ratio, c2.worst_ratio),
            asserted: check.is_asserted(),
            holds_fraction,
        });
    }
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &doubled {
        if s.h1m > 0.0 {
            let abs1: Vec<f64> = s.eps1.iter().map(|v| v.norm()).collect();
            let r = grid.lp_norm_abs(&abs1, 2.0)? / s.h1m;
            band = (band.0.min(r), band.1.max(r));
        }
    }
    Ok(LemmaSuite { config: cfg.clone(), reports, equivalence_band: band })
}

/// Worst ratio of `check` at each amplitude, same shapes throughout.
pub fn amplitude_sweep(ops: &ProfileOps, check: Check, amplitudes: &[f64], cfg: &LemmaConfig) -> Result<Vec<(f64, f64)>> {
    let shapes = draw_shapes(cfg.n_samples, cfg.seed);
    let fams: Vec<Family> = shapes.iter().map(Shape::family).collect();
    amplitudes
        .iter()
        .map(|&a| {
            let s = prepare_samples(ops, &shapes, a)?;
            Ok((a, evaluate(ops.grid(), check, &s, &fams)?.worst_ratio))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex::solve_profile;
    use std::sync::Arc;

    fn ops(n: usize) -> ProfileOps {
        let g = RadialGrid::new(20.0, n).unwrap();
        ProfileOps::new(Arc::new(solve_profile(1, &g, 1e-10).unwrap()))
    }

    #[test]
    fn zero_field_gives_zero_ratios() {
        let o = ops(1000);
        let s = Sample::new(&o, vec![C64::new(0.0, 0.0); 1000]).unwrap();
        for c in default_checks() {
            let case = evaluate(o.grid(), c, std::slice::from_ref(&s), &[Family::QGaussian]).unwrap();
            assert_eq!(case.worst_ratio, 0.0, "{}", c.id());
        }
    }

    #[test]
    fn shapes_are_prefix_stable() {
        let a = draw_shapes(10, 3);
        let b = draw_shapes(20, 3);
        assert_eq!(a[..], b[..10]);
    }

    #[test]
    fn imaginary_perturbation_has_smaller_gauge_field() {
        let o = ops(1000);
        let real = Shape::QGaussian { center: 3.0, width: 1.0, phase: 0.0 }.realize(&o, 1e-3).unwrap();
        let imag = Shape::QGaussian { center: 3.0, width: 1.0, phase: 0.5 * PI }.realize(&o, 1e-3).unwrap();
        let c = Check::AThetaBound { p: 2.0 };
        let lhs = |e: Vec<C64>| c.sides(o.grid(), &Sample::new(&o, e).unwrap()).unwrap().0;
        assert!(lhs(imag) < lhs(real));
    }

    #[test]
    fn sobolev_bound_holds_on_samples() {
        let o = ops(1000);
        let cfg = LemmaConfig { n_samples: 40, ..Default::default() };
        let case = check_sobolev_embedding(&o, &cfg).unwrap();
        assert!(case.worst_ratio <= 1.0 + SOBOLEV_SLACK_PER_H * o.grid().h(), "{}", case.worst_ratio);
    }

    #[test]
    fn bad_exponents_are_rejected() {
        let o = ops(200);
        let cfg = LemmaConfig { n_samples: 2, ..Default::default() };
        assert!(check_coth_weighted_bound(&o, 2.0, 2.0, 2.0, &cfg).is_err());
        assert!(check_eps_vs_eps1(&o, 1.5, &cfg).is_err());
    }
}

//! One function per subcommand. Each resolves its inputs, runs the
//! pipeline, and leaves its artifacts in the output directory.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;
use vortexlab::acceptance::{self, green_test_functions, CriterionResult, Mode};
use vortexlab::evolve::{initial_data, run_evolution, RunStatus, TRACE_COLUMNS};
use vortexlab::gaugefields::{darboux_forward, Reconstructor};
use vortexlab::hgrid::{h1m_norm, ComplexRadialField, RadialGrid};
use vortexlab::io::svg_line_plot;
use vortexlab::lemmalab::{default_checks, run_suite};
use vortexlab::linops::{PotentialTable, ProfileOps};
use vortexlab::spectra::{fundamental_system_h, gap_eigenvalues_rq, gap_scan_h, green_residual, resonance_test_rq};
use vortexlab::vortex::{profile_asymptotics, ProfileCache, VortexProfile};

use crate::config::RunConfig;
use crate::output::OutDir;

pub type Outcome = vortexlab::Result<()>;

/// The profile for `cfg`, from the cache or solved and stored on a miss.
fn profile(cfg: &RunConfig, out: &mut OutDir, n: usize) -> vortexlab::Result<Arc<VortexProfile>> {
    let grid = RadialGrid::new(cfg.grid.r_max, n)?;
    let cache = ProfileCache::from_env();
    out.profile_cache = Some(cache.dir().display().to_string());
    let m = cfg.vortex.m;
    if let Some(p) = cache.load(m, &grid)? {
        log::info!("profile m={m} N={n} loaded from {}", cache.path_for(m, &grid).display());
        return Ok(Arc::new(p));
    }
    log::info!("profile m={m} N={n} not cached, solving");
    let p = cache.load_or_solve(m, &grid, cfg.vortex.tol)?;
    out.notes.push(format!("profile m={m} N={n} solved and cached"));
    Ok(Arc::new(p))
}

fn ops(cfg: &RunConfig, out: &mut OutDir) -> vortexlab::Result<Arc<ProfileOps>> {
    Ok(Arc::new(ProfileOps::new(profile(cfg, out, cfg.grid.n)?)))
}

pub fn cmd_profile(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let p = profile(cfg, out, cfg.grid.n)?;
    out.write_with("profile.csv", |w| p.write_csv(w))?;
    out.write_json("profile.json", &p.sidecar())?;
    out.write_json("asymptotics.json", &profile_asymptotics(&p))?;
    out.write_with("potentials.csv", |w| PotentialTable::from_profile(&p).write_csv(p.grid(), w))?;
    let svg = svg_line_plot(&format!("Q, m = {}", p.m()), "r", p.grid().r(), p.q());
    out.write("profile_Q.svg", svg.as_bytes())
}

#[derive(Serialize)]
struct SpectrumOutput {
    r_q: vortexlab::spectra::SpectralReport,
    r_q_threshold: vortexlab::spectra::SpectralReport,
    h: vortexlab::spectra::SpectralReport,
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let p = profile(cfg, out, cfg.grid.n)?;
    let report = SpectrumOutput {
        r_q: gap_eigenvalues_rq(&p, cfg.spectra.eta)?,
        r_q_threshold: resonance_test_rq(&p)?,
        h: gap_scan_h(&p)?,
    };
    out.write_json("spectrum.json", &report)
}

#[derive(Serialize)]
struct GreenOutput {
    asymptotics: vortexlab::spectra::FundamentalAsymptotics,
    /// `‖H f̃ - F‖_{L²(dr)}` for the twenty reference right-hand sides.
    green_residuals: Vec<f64>,
}

pub fn cmd_green(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let ops = ops(cfg, out)?;
    let fs = fundamental_system_h(ops.profile())?;
    let green_residuals = green_test_functions(ops.grid())
        .iter()
        .map(|f| green_residual(&ops, &fs, f))
        .collect::<vortexlab::Result<Vec<_>>>()?;
    out.write_with("fundamental.csv", |w| fs.write_csv(w))?;
    out.write_json("green.json", &GreenOutput { asymptotics: fs.asymptotics(cfg.vortex.m), green_residuals })
}

#[derive(Serialize)]
struct ReconstructOutput {
    amplitude: f64,
    error_h1m: f64,
    contraction_ratios: Vec<f64>,
    log: vortexlab::gaugefields::ReconstructionLog,
}

/// Round trip of `δ Q e^{-(r-3)²}` through the forward map and back.
pub fn cmd_reconstruct(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let ops = ops(cfg, out)?;
    let grid = ops.grid().clone();
    let d = cfg.evolve.delta;
    let v: Vec<C64> = grid.r().iter().zip(ops.q()).map(|(r, q)| C64::new(d * q * (-(r - 3.0) * (r - 3.0)).exp(), 0.0)).collect();
    let star = ComplexRadialField::new(grid, v, ops.m())?;
    let eps1 = darboux_forward(&ops, &star)?;
    let rec = Reconstructor::new(ops.clone())?.reconstruct(&eps1, cfg.spectra.reconstruct_tol, cfg.spectra.reconstruct_max_iter)?;
    let error_h1m = h1m_norm(&rec.eps.sub(&star)?)?;
    out.write_with("eps_star.csv", |w| star.write_csv(w))?;
    out.write_with("eps1.csv", |w| eps1.write_csv(w))?;
    out.write_with("eps_reconstructed.csv", |w| rec.eps.write_csv(w))?;
    out.write_json(
        "reconstruction.json",
        &ReconstructOutput { amplitude: d, error_h1m, contraction_ratios: rec.contraction_ratios(), log: rec.log() },
    )?;
    if !rec.converged {
        let last = rec.update_norms.last().copied().unwrap_or(f64::NAN);
        return Err(vortexlab::Error::NoConvergence(format!(
            "reconstruction after {} iterations, last update {last:.3e}",
            rec.update_norms.len()
        )));
    }
    Ok(())
}

pub fn cmd_evolve(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let ev = cfg.evolution().map_err(vortexlab::Error::InvalidArgument)?;
    let ops = ops(cfg, out)?;
    let eps0 = initial_data(&ops, cfg.evolve.delta)?;
    let run = run_evolution(ops.clone(), &eps0, &ev)?;
    let tr = &run.trace;
    out.write_with("trace.csv", |w| tr.write_csv(w))?;
    out.write_json("summary.json", &tr.summary())?;
    let grid = ops.grid().clone();
    out.write_with("eps_final.csv", |w| ComplexRadialField::new(grid.clone(), run.eps.clone(), ops.m())?.write_csv(w))?;
    out.write_with("eps1_final.csv", |w| ComplexRadialField::new(grid, run.eps1.clone(), ops.m() + 1)?.write_csv(w))?;
    if cfg.evolve.svg {
        for col in TRACE_COLUMNS.iter().skip(1) {
            if let Some(svg) = tr.svg(col) {
                out.write(&format!("trace_{col}.svg"), svg.as_bytes())?;
            }
        }
    }
    match tr.status {
        RunStatus::Completed => Ok(()),
        RunStatus::BlowUp { t, sup } => Err(vortexlab::Error::BlowUp { t, sup }),
    }
}

pub fn cmd_lemmas(cfg: &RunConfig, out: &mut OutDir) -> Outcome {
    let coarse = ops(cfg, out)?;
    let fine = if cfg.lemmalab.refine {
        Some(ProfileOps::new(profile(cfg, out, 2 * cfg.grid.n)?))
    } else {
        None
    };
    let suite = run_suite(&coarse, fine.as_ref(), &default_checks(), &cfg.lemmas())?;
    for (k, rep) in suite.reports.iter().enumerate() {
        out.write_json(&format!("lemma_{k:02}_{}.json", rep.lemma), rep)?;
    }
    out.write_json("lemmas.json", &suite)
}

#[derive(Serialize)]
struct Verdict<'a> {
    id: u8,
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

/// Runs the acceptance suite. Returns the number of failed criteria.
pub fn cmd_verify_all(quick: bool, out: &mut OutDir) -> vortexlab::Result<usize> {
    let mode = if quick { Mode::Quick } else { Mode::Full };
    let results = acceptance::run_all(mode);
    println!("{}", table(&results));
    let verdicts: Vec<Verdict> =
        results.iter().map(|r| Verdict { id: r.id, name: &r.name, passed: r.passed, detail: &r.detail }).collect();
    out.write_json("acceptance.json", &verdicts)?;
    for r in &results {
        out.notes.push(format!("criterion {} took {:.2} s", r.id, r.seconds));
    }
    Ok(results.iter().filter(|r| !r.passed).count())
}

fn table(results: &[CriterionResult]) -> String {
    let mut s = String::from("  # | result | criterion                  | seconds\n");
    s.push_str("----+--------+----------------------------+--------\n");
    for r in results {
        s.push_str(&format!(
            "{:>3} | {:<6} | {:<26} | {:>7.1}\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds
        ));
    }
    for r in results {
        s.push_str(&format!("\n[{}] {}", r.id, r.detail));
    }
    s
}

//! `vortexctl`: batch front end for the vortex laboratory.
//!
//! Exit codes: 0 on success, 2 for an invalid configuration, 3 when a
//! numerical stage fails (or, for `verify-all`, when a criterion fails).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use output::OutDir;

#[derive(Parser)]
#[command(name = "vortexctl", version, about = "Vortex profiles, spectra, gauge fields, evolution and inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or load) the vortex profile.
    Profile(Flags),
    /// Gap scans of R_Q and H, and the threshold test.
    Spectrum(Flags),
    /// Fundamental system of H and Green residuals.
    Green(Flags),
    /// Darboux round trip on a reference bump.
    Reconstruct(Flags),
    /// Time evolution of a small perturbation.
    Evolve(Flags),
    /// Randomized inequality checks.
    Lemmas(Flags),
    /// The acceptance suite.
    VerifyAll(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Profile(f) => ("profile", f),
            Command::Spectrum(f) => ("spectrum", f),
            Command::Green(f) => ("green", f),
            Command::Reconstruct(f) => ("reconstruct", f),
            Command::Evolve(f) => ("evolve", f),
            Command::Lemmas(f) => ("lemmas", f),
            Command::VerifyAll(f) => ("verify-all", f),
        }
    }
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<i32>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Profile solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed of the lemma sample stream.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// epsilon_direct, epsilon_LL or epsilon1.
    #[arg(long)]
    formulation: Option<String>,
    /// Peak sponge damping on the outer 10% of the grid.
    #[arg(long)]
    sponge: Option<f64>,
    /// Reduced acceptance suite (verify-all only).
    #[arg(long)]
    quick: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            m: self.m,
            r_max: self.rmax,
            n: self.n,
            dt: self.dt,
            t_final: self.t_final,
            delta: self.delta,
            tol: self.tol,
            seed: self.seed,
            out: self.out.clone(),
            formulation: self.formulation.clone(),
            sponge: self.sponge,
        }
    }

    fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (name, flags) = cli.command.parts();
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("vortexctl: invalid configuration: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut out = match OutDir::create(&cfg.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("vortexctl: cannot create {}: {e}", cfg.out.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match &cli.command {
        Command::Profile(_) => commands::cmd_profile(&cfg, &mut out).map(|_| 0),
        Command::Spectrum(_) => commands::cmd_spectrum(&cfg, &mut out).map(|_| 0),
        Command::Green(_) => commands::cmd_green(&cfg, &mut out).map(|_| 0),
        Command::Reconstruct(_) => commands::cmd_reconstruct(&cfg, &mut out).map(|_| 0),
        Command::Evolve(_) => commands::cmd_evolve(&cfg, &mut out).map(|_| 0),
        Command::Lemmas(_) => commands::cmd_lemmas(&cfg, &mut out).map(|_| 0),
        Command::VerifyAll(f) => commands::cmd_verify_all(f.quick, &mut out),
    };
    // the manifest is written even on failure so partial outputs stay traceable
    let failed = match result {
        Ok(n) => Some(n),
        Err(e) => {
            eprintln!("vortexctl {name}: {e}");
            out.notes.push(format!("failed: {e}"));
            None
        }
    };
    if let Err(e) = out.finish(name, &cfg) {
        eprintln!("vortexctl {name}: writing manifest: {e}");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    match failed {
        Some(0) => ExitCode::SUCCESS,
        Some(n) => {
            eprintln!("vortexctl {name}: {n} criterion(s) failed");
            ExitCode::from(EXIT_NUMERICAL)
        }
        None => ExitCode::from(EXIT_NUMERICAL),
    }
}

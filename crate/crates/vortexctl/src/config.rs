//! Run configuration: a TOML file with one section per pipeline, overlaid
//! by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortexlab::evolve::{EvolutionConfig, Formulation, Nonlinearity};
use vortexlab::lemmalab::LemmaConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub out: PathBuf,
    pub grid: GridSection,
    pub vortex: VortexSection,
    pub evolve: EvolveSection,
    pub spectra: SpectraSection,
    pub lemmalab: LemmaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VortexSection {
    pub m: i32,
    /// Bogomolny residual target of the shooting solve.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub formulation: String,
    pub nonlinearity: String,
    pub dt: f64,
    pub t_final: f64,
    /// `‖ε(0)‖_{H¹_m}`; also the bump size for `reconstruct`.
    pub delta: f64,
    pub sponge: f64,
    pub samples: usize,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraSection {
    /// Margin below the threshold for the gap scan.
    pub eta: f64,
    pub reconstruct_tol: f64,
    pub reconstruct_max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSection {
    pub n_samples: usize,
    pub amplitude: f64,
    pub seed: u64,
    /// Repeat every check on the grid with `2N` nodes.
    pub refine: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            out: PathBuf::from("out"),
            grid: GridSection::default(),
            vortex: VortexSection::default(),
            evolve: EvolveSection::default(),
            spectra: SpectraSection::default(),
            lemmalab: LemmaSection::default(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self { r_max: 30.0, n: 6000 }
    }
}

impl Default for VortexSection {
    fn default() -> Self {
        Self { m: 1, tol: 1e-10 }
    }
}

impl Default for EvolveSection {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        Self {
            formulation: d.formulation.to_string(),
            nonlinearity: "full".into(),
            dt: d.dt,
            t_final: d.t_final,
            delta: 1e-3,
            sponge: d.sponge,
            samples: d.samples,
            svg: true,
        }
    }
}

impl Default for SpectraSection {
    fn default() -> Self {
        Self { eta: vortexlab::spectra::DEFAULT_ETA, reconstruct_tol: 1e-12, reconstruct_max_iter: 60 }
    }
}

impl Default for LemmaSection {
    fn default() -> Self {
        let d = LemmaConfig::default();
        Self { n_samples: d.n_samples, amplitude: d.amplitude, seed: d.seed, refine: true }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<i32>,
    pub r_max: Option<f64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub delta: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formulation: Option<String>,
    pub sponge: Option<f64>,
}

fn range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), String> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(format!("{name} = {v} is outside [{lo}, {hi}]"))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.m, self.vortex.m);
        set!(o.r_max, self.grid.r_max);
        set!(o.n, self.grid.n);
        set!(o.dt, self.evolve.dt);
        set!(o.t_final, self.evolve.t_final);
        set!(o.delta, self.evolve.delta);
        set!(o.tol, self.vortex.tol);
        set!(o.seed, self.lemmalab.seed);
        set!(o.out, self.out);
        set!(o.formulation, self.evolve.formulation);
        set!(o.sponge, self.evolve.sponge);
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(1..=8).contains(&self.vortex.m) {
            return Err(format!("m = {} is outside [1, 8]", self.vortex.m));
        }
        range("tol", self.vortex.tol, 1e-14, 1e-3)?;
        range("r_max", self.grid.r_max, 2.0, 60.0)?;
        if !(50..=400_000).contains(&self.grid.n) {
            return Err(format!("n = {} is outside [50, 400000]", self.grid.n));
        }
        range("dt", self.evolve.dt, 1e-6, 1.0)?;
        range("T", self.evolve.t_final, 0.0, 1e4)?;
        range("delta", self.evolve.delta, 0.0, 1e-2)?;
        range("sponge", self.evolve.sponge, 0.0, 1e3)?;
        if self.evolve.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        self.formulation()?;
        self.nonlinearity()?;
        range("eta", self.spectra.eta, 1e-8, 1.0)?;
        range("reconstruct_tol", self.spectra.reconstruct_tol, 1e-15, 1e-3)?;
        if self.spectra.reconstruct_max_iter == 0 {
            return Err("reconstruct_max_iter must be at least 1".into());
        }
        if self.lemmalab.n_samples == 0 {
            return Err("n_samples must be at least 1".into());
        }
        range("amplitude", self.lemmalab.amplitude, 1e-12, 1e-2)?;
        if self.out.as_os_str().is_empty() {
            return Err("output directory must not be empty".into());
        }
        Ok(())
    }

    pub fn formulation(&self) -> Result<Formulation, String> {
        self.evolve.formulation.parse().map_err(|e: vortexlab::Error| e.to_string())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, String> {
        match self.evolve.nonlinearity.as_str() {
            "full" => Ok(Nonlinearity::Full),
            "off" => Ok(Nonlinearity::Off),
            other => Err(format!("nonlinearity must be \"full\" or \"off\", got {other:?}")),
        }
    }

    pub fn evolution(&self) -> Result<EvolutionConfig, String> {
        Ok(EvolutionConfig {
            formulation: self.formulation()?,
            nonlinearity: self.nonlinearity()?,
            dt: self.evolve.dt,
            t_final: self.evolve.t_final,
            sponge: self.evolve.sponge,
            samples: self.evolve.samples,
            ..Default::default()
        })
    }

    pub fn lemmas(&self) -> LemmaConfig {
        LemmaConfig { n_samples: self.lemmalab.n_samples, amplitude: self.lemmalab.amplitude, seed: self.lemmalab.seed }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[grid]\nrmax = 3.0\n").is_err());
        assert!(toml::from_str::<RunConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c: RunConfig = toml::from_str("[vortex]\nm = 2\n[grid]\nn = 800\n").unwrap();
        c.apply(&Overrides { m: Some(3), ..Default::default() });
        assert_eq!((c.vortex.m, c.grid.n), (3, 800));
    }

    #[test]
    fn ranges_are_enforced() {
        let mut c = RunConfig::default();
        c.evolve.delta = 0.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.evolve.formulation = "epsilon2".into();
        assert!(c.validate().is_err());
    }
}

//! Output directory bookkeeping: every artifact is hashed into the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use vortexlab::io::write_atomic;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config: &'a RunConfig,
    pub profile_cache: Option<String>,
    pub outputs: &'a [OutputEntry],
    pub wall_time_s: f64,
    pub notes: &'a [String],
}

pub struct OutDir {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
    started: Instant,
    pub notes: Vec<String>,
    pub profile_cache: Option<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), outputs: vec![], started: Instant::now(), notes: vec![], profile_cache: None })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> vortexlab::Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.outputs.push(OutputEntry { path: name.into(), sha256: format!("{:x}", Sha256::digest(bytes)), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> vortexlab::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| vortexlab::Error::Parse(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Render through a `Write`-style closure.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> vortexlab::Result<()>,
    ) -> vortexlab::Result<()> {
        let mut buf = vec![];
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// The manifest and the resolved config go last; neither is listed in
    /// the manifest itself.
    pub fn finish(self, command: &str, config: &RunConfig) -> vortexlab::Result<()> {
        write_atomic(&self.dir.join("config.toml"), config.to_toml().as_bytes())?;
        let manifest = Manifest {
            tool: "vortexctl",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            config,
            profile_cache: self.profile_cache.clone(),
            outputs: &self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            notes: &self.notes,
        };
        let mut s = serde_json::to_string_pretty(&manifest).map_err(|e| vortexlab::Error::Parse(e.to_string()))?;
        s.push('\n');
        write_atomic(&self.dir.join("manifest.json"), s.as_bytes())
    }
}

//! Run manifests and output bookkeeping.

use crate::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub options: BTreeMap<String, String>,
    pub seed: u64,
    pub outputs: Vec<String>,
    /// SHA-256 over command, options and configuration entries.
    pub input_hash: String,
    pub wall_time_s: f64,
    pub threads: usize,
    pub version: String,
}

pub fn input_hash(command: &str, config: &BTreeMap<String, String>, options: &BTreeMap<String, String>, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    for (k, v) in config.iter().chain(options) {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    h.update(format!("seed={seed}\n").as_bytes());
    hex::encode(h.finalize())
}

/// Output directory, written files and console lines of one command.
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub lines: Vec<String>,
    pub quiet: bool,
    pub options: BTreeMap<String, String>,
    started: Instant,
}

impl Context {
    pub fn new(out_dir: &Path, seed: u64) -> Result<Context, CliError> {
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Context { out_dir: out_dir.to_path_buf(), seed, outputs: Vec::new(), lines: Vec::new(), quiet: false, options: BTreeMap::new(), started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.out_dir.join(name);
        std::fs::write(&p, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))?;
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn say(&mut self, line: impl Into<String>) {
        let l = line.into();
        if !self.quiet {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{l}");
        }
        self.lines.push(l);
    }

    pub fn option(&mut self, k: &str, v: impl ToString) {
        self.options.insert(k.to_string(), v.to_string());
    }

    pub fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    /// Writes `<command>.manifest.json` and returns the manifest.
    pub fn finish(&mut self, command: &str, config: &BTreeMap<String, String>) -> Result<RunManifest, CliError> {
        let m = RunManifest {
            command: command.to_string(),
            config: config.clone(),
            options: self.options.clone(),
            seed: self.seed,
            outputs: self.outputs.clone(),
            input_hash: input_hash(command, config, &self.options, self.seed),
            wall_time_s: self.elapsed(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
        let p = self.out_dir.join(format!("{command}.manifest.json"));
        std::fs::write(&p, text + "\n")?;
        Ok(m)
    }
}

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::commands::Resolved;
use crate::manifest::{Manifest, OutputFile, Phase};

/// A failed command. Configuration errors exit 2, everything else 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Runtime(m) => m,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

/// Errors raised by the library while a command runs.
impl From<kfca_core::Error> for Failure {
    fn from(e: kfca_core::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory, written files and phase timings of one invocation.
pub struct Context {
    out_dir: PathBuf,
    workers: usize,
    outputs: Vec<OutputFile>,
    phases: Vec<Phase>,
}

impl Context {
    pub fn new(out_dir: PathBuf, workers: usize) -> Result<Self, Failure> {
        fs::create_dir_all(&out_dir)
            .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Self {
            out_dir,
            workers,
            outputs: Vec::new(),
            phases: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        fs::write(&path, content).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.retain(|o| o.path != name);
        self.outputs.push(OutputFile {
            path: name.to_string(),
            bytes: content.len() as u64,
            sha256: sha256_hex(content),
        });
        Ok(())
    }

    pub fn write_json<T: serde::Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `stem.csv` or `stem.json` depending on `format`.
    pub fn write_table<T: serde::Serialize>(
        &mut self,
        stem: &str,
        rows: &[T],
        format: crate::Format,
    ) -> Result<(), Failure> {
        match format {
            crate::Format::Json => self.write_json(&format!("{stem}.json"), rows),
            crate::Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| Failure::runtime(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| Failure::runtime(e.to_string()))?;
                self.write(&format!("{stem}.csv"), &bytes)
            }
        }
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, Failure>) -> Result<T, Failure> {
        let start = Instant::now();
        let out = f(self);
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn finish(self, resolved: &Resolved) -> Result<Vec<OutputFile>, Failure> {
        let manifest = Manifest::new(resolved.clone(), self.workers, self.phases, self.outputs.clone());
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::runtime(e.to_string()))?;
        text.push('\n');
        let path = self.out_dir.join(crate::manifest::MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(self.outputs)
    }
}

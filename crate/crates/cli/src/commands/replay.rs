use std::path::PathBuf;

use clap::Args as ClapArgs;

use super::Resolved;
use crate::context::Failure;
use crate::manifest::{Manifest, OutputFile};

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Manifest written by an earlier run.
    manifest: PathBuf,

    /// Exit 1 unless every output matches the recorded hash.
    #[arg(long)]
    pub check: bool,
}

pub fn resolve(args: Args) -> Result<(Resolved, Vec<OutputFile>), Failure> {
    let bytes = super::read_input(&args.manifest)?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::config(format!("{}: invalid manifest: {e}", args.manifest.display())))?;
    Ok((manifest.resolved, manifest.outputs))
}

pub fn compare(expected: &[OutputFile], actual: &[OutputFile]) -> Result<(), Failure> {
    let mut problems = Vec::new();
    for e in expected {
        match actual.iter().find(|a| a.path == e.path) {
            Some(a) if a.sha256 == e.sha256 => {}
            Some(_) => problems.push(format!("{} differs", e.path)),
            None => problems.push(format!("{} missing", e.path)),
        }
    }
    for a in actual.iter().filter(|a| !expected.iter().any(|e| e.path == a.path)) {
        problems.push(format!("{} is new", a.path));
    }
    if problems.is_empty() {
        println!("{} output(s) reproduced", expected.len());
        Ok(())
    } else {
        Err(Failure::runtime(format!("replay differs: {}", problems.join(", "))))
    }
}

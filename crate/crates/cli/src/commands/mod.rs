pub mod bench;
pub mod commit;
pub mod delta_check;
pub mod replay;
pub mod robustness;
pub mod shapley;
pub mod simulate;
pub mod truthfulness;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::context::{Context, Failure};
use crate::Format;

/// Flags shared by every subcommand.
pub struct Global {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Format,
}

/// A fully resolved invocation: no file lookups or defaults left to apply
/// except for input files named by path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Resolved {
    Simulate(simulate::Params),
    Truthfulness(truthfulness::Params),
    Robustness(robustness::Params),
    Shapley(shapley::Params),
    Bench(bench::Params),
    DeltaCheck(delta_check::Params),
    Commit(commit::CommitParams),
    Verify(commit::VerifyParams),
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Truthfulness(_) => "truthfulness",
            Self::Robustness(_) => "robustness",
            Self::Shapley(_) => "shapley",
            Self::Bench(_) => "bench",
            Self::DeltaCheck(_) => "delta-check",
            Self::Commit(_) => "commit",
            Self::Verify(_) => "verify",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Simulate(p) => Some(p.config.seed),
            Self::Truthfulness(p) => Some(p.seed),
            Self::Robustness(p) => Some(p.seed),
            Self::Shapley(p) => Some(p.seed),
            Self::Bench(p) => Some(p.seed),
            Self::DeltaCheck(_) | Self::Commit(_) | Self::Verify(_) => None,
        }
    }
}

pub fn execute(resolved: &Resolved, ctx: &mut Context) -> Result<(), Failure> {
    match resolved {
        Resolved::Simulate(p) => simulate::execute(p, ctx),
        Resolved::Truthfulness(p) => truthfulness::execute(p, ctx),
        Resolved::Robustness(p) => robustness::execute(p, ctx),
        Resolved::Shapley(p) => shapley::execute(p, ctx),
        Resolved::Bench(p) => bench::execute(p, ctx),
        Resolved::DeltaCheck(p) => delta_check::execute(p, ctx),
        Resolved::Commit(p) => commit::execute_commit(p, ctx),
        Resolved::Verify(p) => commit::execute_verify(p, ctx),
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, Failure> {
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Failure::config(format!("{flag}: cannot parse {s:?}"))))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(Failure::config(format!("{flag}: empty list")));
    }
    Ok(items)
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

/// Absolute form of an input path, so a manifest replays from any directory.
pub fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Library errors met while resolving inputs are configuration errors.
pub fn config_err(e: kfca_core::Error) -> Failure {
    Failure::config(e.to_string())
}

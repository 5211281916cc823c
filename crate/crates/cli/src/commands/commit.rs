use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use kfca_core::commit::{commit, HASH_ALGORITHM};
use kfca_core::{LabelSpace, ReportMatrix};

use super::{absolute, config_err, read_input, Global, Resolved};
use crate::context::{Context, Failure};

#[derive(ClapArgs, Debug)]
pub struct CommitArgs {
    /// Report matrix file, CSV or KFCA binary.
    #[arg(long)]
    reports: PathBuf,

    #[arg(long)]
    salt: String,

    /// Label count for CSV reports (default: inferred from the data).
    #[arg(long)]
    labels: Option<usize>,
}

#[derive(ClapArgs, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    reports: PathBuf,

    #[arg(long)]
    salt: String,

    /// Hex digest printed by `commit`.
    #[arg(long)]
    digest: String,

    #[arg(long)]
    labels: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitParams {
    pub reports: PathBuf,
    pub salt: String,
    pub labels: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub reports: PathBuf,
    pub salt: String,
    pub labels: Option<usize>,
    pub digest: String,
}

#[derive(Serialize)]
struct Record<'a> {
    algorithm: &'a str,
    reports: String,
    salt: &'a str,
    digest: &'a str,
    valid: Option<bool>,
}

fn load(path: &std::path::Path, labels: Option<usize>) -> Result<ReportMatrix, Failure> {
    let labels = labels.map(LabelSpace::new).transpose().map_err(config_err)?;
    ReportMatrix::decode(&read_input(path)?, labels).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn resolve_commit(args: CommitArgs, _global: &Global) -> Result<Resolved, Failure> {
    load(&args.reports, args.labels)?;
    Ok(Resolved::Commit(CommitParams {
        reports: absolute(&args.reports),
        salt: args.salt,
        labels: args.labels,
    }))
}

pub fn resolve_verify(args: VerifyArgs, _global: &Global) -> Result<Resolved, Failure> {
    load(&args.reports, args.labels)?;
    let digest = args.digest.trim().to_ascii_lowercase();
    if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Failure::config(format!("--digest must be 64 hex characters, got {:?}", args.digest)));
    }
    Ok(Resolved::Verify(VerifyParams {
        reports: absolute(&args.reports),
        salt: args.salt,
        labels: args.labels,
        digest,
    }))
}

fn digest_of(path: &std::path::Path, labels: Option<usize>, salt: &str) -> Result<String, Failure> {
    let reports = load(path, labels).map_err(|f| Failure::runtime(f.message()))?;
    Ok(commit(&reports, salt.as_bytes())?)
}

pub fn execute_commit(p: &CommitParams, ctx: &mut Context) -> Result<(), Failure> {
    let digest = digest_of(&p.reports, p.labels, &p.salt)?;
    ctx.write_json(
        "commitment.json",
        &Record {
            algorithm: HASH_ALGORITHM,
            reports: p.reports.display().to_string(),
            salt: &p.salt,
            digest: &digest,
            valid: None,
        },
    )?;
    println!("{digest}");
    Ok(())
}

pub fn execute_verify(p: &VerifyParams, ctx: &mut Context) -> Result<(), Failure> {
    let digest = digest_of(&p.reports, p.labels, &p.salt)?;
    let valid = digest == p.digest;
    ctx.write_json(
        "verification.json",
        &Record {
            algorithm: HASH_ALGORITHM,
            reports: p.reports.display().to_string(),
            salt: &p.salt,
            digest: &p.digest,
            valid: Some(valid),
        },
    )?;
    if !valid {
        return Err(Failure::runtime(format!(
            "commitment mismatch: reports hash to {digest}, expected {}",
            p.digest
        )));
    }
    println!("valid");
    Ok(())
}

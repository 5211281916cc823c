use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use kfca_core::delta::{check_categorical, empirical_delta};
use kfca_core::{CategoricalVerdict, DeltaMatrix, LabelSpace, ReportMatrix};

use super::{absolute, config_err, read_input, Global, Resolved};
use crate::context::{Context, Failure};

#[derive(ClapArgs, Debug)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["reports", "delta"]))]
pub struct Args {
    /// Report matrix file, CSV or KFCA binary.
    #[arg(long)]
    reports: Option<PathBuf>,

    /// A delta matrix JSON file to check directly.
    #[arg(long)]
    delta: Option<PathBuf>,

    /// Label count for CSV reports (default: inferred from the data).
    #[arg(long)]
    labels: Option<usize>,

    /// Client pairs such as `0-1,2-3` (default: every pair).
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Reports {
        path: PathBuf,
        labels: Option<usize>,
        pairs: Option<Vec<(usize, usize)>>,
    },
    Delta(DeltaMatrix),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub input: Input,
}

#[derive(Serialize)]
struct PairResult {
    client_a: Option<usize>,
    client_b: Option<usize>,
    delta: DeltaMatrix,
    verdict: CategoricalVerdict,
}

fn load(path: &std::path::Path, labels: Option<usize>) -> Result<ReportMatrix, Failure> {
    let labels = labels.map(LabelSpace::new).transpose().map_err(config_err)?;
    ReportMatrix::decode(&read_input(path)?, labels).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let bad = || Failure::config(format!("--pairs: expected a-b, got {s:?}"));
            let (a, b) = s.split_once('-').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn resolve(args: Args, _global: &Global) -> Result<Resolved, Failure> {
    let input = match (args.reports, args.delta) {
        (Some(path), _) => {
            let reports = load(&path, args.labels)?;
            let pairs = args.pairs.as_deref().map(parse_pairs).transpose()?;
            for &(a, b) in pairs.iter().flatten() {
                if a == b || a.max(b) >= reports.clients() {
                    return Err(Failure::config(format!(
                        "--pairs: {a}-{b} is not a pair of distinct clients below {}",
                        reports.clients()
                    )));
                }
            }
            Input::Reports {
                path: absolute(&path),
                labels: args.labels,
                pairs,
            }
        }
        (None, Some(path)) => Input::Delta(
            serde_json::from_slice(&read_input(&path)?)
                .map_err(|e| Failure::config(format!("{}: invalid delta JSON: {e}", path.display())))?,
        ),
        (None, None) => return Err(Failure::config("give --reports or --delta")),
    };
    Ok(Resolved::DeltaCheck(Params { input }))
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let results = match &p.input {
        Input::Delta(delta) => vec![PairResult {
            client_a: None,
            client_b: None,
            delta: delta.clone(),
            verdict: check_categorical(delta),
        }],
        Input::Reports { path, labels, pairs } => {
            let reports = load(path, *labels).map_err(|f| Failure::runtime(f.message()))?;
            let n = reports.clients();
            let pairs = pairs
                .clone()
                .unwrap_or_else(|| (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect());
            ctx.phase("estimate", |_| {
                pairs
                    .iter()
                    .map(|&(a, b)| {
                        let delta = empirical_delta(reports.row(a), reports.row(b), reports.labels())?;
                        let verdict = check_categorical(&delta);
                        Ok(PairResult {
                            client_a: Some(a),
                            client_b: Some(b),
                            delta,
                            verdict,
                        })
                    })
                    .collect::<Result<Vec<_>, Failure>>()
            })?
        }
    };
    let all_hold = results.iter().all(|r| r.verdict.holds);
    ctx.write_json("delta_check.json", &serde_json::json!({ "all_hold": all_hold, "pairs": &results }))?;
    let failing = results.iter().filter(|r| !r.verdict.holds).count();
    println!("{} delta matrices checked, {failing} violate the categorical condition", results.len());
    Ok(())
}

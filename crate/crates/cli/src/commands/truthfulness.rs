use clap::{Args as ClapArgs, ValueEnum};
use serde::{Deserialize, Serialize};

use kfca_core::delta::{analytic_delta, empirical_delta};
use kfca_core::mechanism::{ca_score_matrix, ScoreMatrix};
use kfca_core::rng::{Domain, Streams};
use kfca_core::truthfulness::{
    enumerate_top_profiles, random_categorical_delta, summarize_profiles, ProfileSummary, MAX_ENUMERATION_LABELS,
};
use kfca_core::{DeltaMatrix, LabelSpace, SignalWorld};

use super::{config_err, read_input, Global, Resolved};
use crate::context::{Context, Failure};
use crate::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Kfca,
    Ca,
}

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Label count L (at most 5).
    #[arg(long, default_value_t = 2)]
    labels: usize,

    /// `symmetric` (two clients with noise --alpha), `random` (a random
    /// categorical delta), `flip` (the binary label-flip example) or a path
    /// to a delta JSON file.
    #[arg(long, default_value = "symmetric")]
    delta_source: String,

    /// Noise rate for the symmetric source.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    #[arg(long, value_enum, default_value_t = Mechanism::Kfca)]
    mechanism: Mechanism,

    /// Write only the best N rows of the profile table.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mechanism: Mechanism,
    pub source: String,
    pub delta: DeltaMatrix,
    pub top: Option<usize>,
    pub seed: u64,
    pub format: Format,
}

#[derive(Serialize)]
struct ProfileRow {
    rank: usize,
    f1: String,
    f2: String,
    value: f64,
    shared_bijection: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    mechanism: Mechanism,
    source: &'a str,
    delta: &'a DeltaMatrix,
    #[serde(flatten)]
    summary: &'a ProfileSummary,
    truthful_is_max: bool,
    strictly_truthful: bool,
}

/// Reports from the binary label-flip example.
fn flip_example() -> Result<DeltaMatrix, Failure> {
    empirical_delta(&[1, 0, 1, 0, 1, 0], &[0, 1, 0, 1, 0, 1], LabelSpace::binary()).map_err(config_err)
}

pub fn resolve(args: Args, global: &Global) -> Result<Resolved, Failure> {
    let too_many = |l: usize| {
        Failure::config(format!(
            "exhaustive enumeration supports at most L = {MAX_ENUMERATION_LABELS} labels, got L = {l}"
        ))
    };
    let seed = global.seed.unwrap_or(0);
    let delta = match args.delta_source.as_str() {
        "symmetric" | "random" | "flip" if args.labels > MAX_ENUMERATION_LABELS => return Err(too_many(args.labels)),
        "symmetric" => {
            let labels = LabelSpace::new(args.labels).map_err(config_err)?;
            let world = SignalWorld::symmetric(labels, &[args.alpha, args.alpha]).map_err(config_err)?;
            analytic_delta(&world, 0, 1).map_err(config_err)?
        }
        "random" => {
            let labels = LabelSpace::new(args.labels).map_err(config_err)?;
            random_categorical_delta(labels, &mut Streams::new(seed).stream(Domain::Delta, &[]))
        }
        "flip" => {
            if args.labels != 2 {
                return Err(Failure::config("the flip example is binary; use --labels 2"));
            }
            flip_example()?
        }
        path => {
            let bytes = read_input(path.as_ref())?;
            let delta: DeltaMatrix = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::config(format!("{path}: invalid delta JSON: {e}")))?;
            if delta.size() > MAX_ENUMERATION_LABELS {
                return Err(too_many(delta.size()));
            }
            delta
        }
    };
    Ok(Resolved::Truthfulness(Params {
        mechanism: args.mechanism,
        source: args.delta_source,
        delta,
        top: args.top,
        seed,
        format: global.format,
    }))
}

fn map_text(map: &[kfca_core::Label]) -> String {
    map.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let score = match p.mechanism {
        Mechanism::Kfca => ScoreMatrix::kfca(p.delta.labels()),
        Mechanism::Ca => ca_score_matrix(&p.delta),
    };
    let summary = ctx.phase("summarize", |_| Ok(summarize_profiles(&p.delta, &score)?))?;
    let rows = ctx.phase("enumerate", |_| {
        Ok(enumerate_top_profiles(&p.delta, &score, p.top.unwrap_or(usize::MAX))?)
    })?;
    let rows: Vec<ProfileRow> = rows
        .iter()
        .enumerate()
        .map(|(rank, r)| ProfileRow {
            rank: rank + 1,
            f1: map_text(&r.f1),
            f2: map_text(&r.f2),
            value: r.value,
            shared_bijection: r.is_shared_bijection,
        })
        .collect();
    ctx.write_table("profiles", &rows, p.format)?;
    ctx.write_json(
        "summary.json",
        &Summary {
            mechanism: p.mechanism,
            source: &p.source,
            delta: &p.delta,
            summary: &summary,
            truthful_is_max: summary.truthful_is_max(),
            strictly_truthful: summary.strictly_truthful(),
        },
    )?;
    println!(
        "L = {}: {} profiles, max {:.6}, truthful {:.6}, {} maximizer(s), all shared bijections: {}",
        summary.labels,
        summary.profiles,
        summary.max_value,
        summary.truthful_value,
        summary.maximizers,
        summary.maximizers_all_shared_bijections
    );
    Ok(())
}

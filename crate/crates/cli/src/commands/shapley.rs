use std::path::PathBuf;

use clap::Args as ClapArgs;
use rand::Rng;
use serde::{Deserialize, Serialize};

use kfca_core::mechanism::{make_partition, round_rewards, PartitionFractions, ScoreMatrix};
use kfca_core::rng::Domain;
use kfca_core::shapley::{
    distance_metrics, exact_shapley, mc_shapley, CoalitionOracle, Distances, MajorityVoteGame, McConfig,
    StoppingRule, TabularGame, MAX_EXACT_PLAYERS,
};
use kfca_core::{LabelSpace, ReportMatrix, SignalWorld, Streams};

use super::{config_err, parse_list, read_input, Global, Resolved};
use crate::context::{Context, Failure};
use crate::Format;

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Game JSON `{"n": .., "v": {"<bitmask>": value, ..}}`. Without this
    /// or --alphas the three-client accuracy table is used.
    #[arg(long, conflicts_with = "alphas")]
    game: Option<PathBuf>,

    /// Synthetic majority-vote game: comma-separated client noise rates.
    /// Also adds a KFCA reward column.
    #[arg(long)]
    alphas: Option<String>,

    /// Label count of the synthetic world.
    #[arg(long, default_value_t = 2)]
    labels: usize,

    /// Permutation budget of the Monte Carlo estimator.
    #[arg(long, default_value_t = 10_000)]
    permutations: usize,

    /// Truncation threshold as a fraction of |v(N) - v(empty)|; off when absent.
    #[arg(long)]
    truncation: Option<f64>,

    /// Stop early once the running estimate changes by less than this
    /// relative amount over the last 10 permutations.
    #[arg(long)]
    stopping: Option<f64>,

    /// Tasks per client for the KFCA reward column.
    #[arg(long, default_value_t = 10_000)]
    tasks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub source: String,
    pub players: usize,
    /// Value of every coalition, indexed by bitmask.
    pub values: Vec<f64>,
    pub world: Option<Synthetic>,
    pub mc: McConfig,
    pub seed: u64,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub labels: usize,
    pub alphas: Vec<f64>,
    pub tasks: usize,
}

#[derive(Serialize)]
struct Row {
    client: usize,
    phi_exact: f64,
    phi_mc: f64,
    evaluations: usize,
    kfca_reward: Option<f64>,
}

#[derive(Serialize)]
struct DistanceRow {
    estimator: &'static str,
    #[serde(flatten)]
    distances: Option<Distances>,
    evaluations: usize,
    permutations: usize,
    converged: bool,
}

fn too_large(n: usize) -> Failure {
    Failure::config(format!("exact Shapley values need at most {MAX_EXACT_PLAYERS} clients, got {n}"))
}

pub fn resolve(args: Args, global: &Global) -> Result<Resolved, Failure> {
    let (source, game, world) = match (&args.game, &args.alphas) {
        (Some(path), _) => {
            let text = String::from_utf8(read_input(path)?)
                .map_err(|_| Failure::config(format!("{} is not UTF-8", path.display())))?;
            let game = TabularGame::from_json(&text).map_err(config_err)?;
            (super::absolute(path).display().to_string(), game, None)
        }
        (None, Some(list)) => {
            let alphas: Vec<f64> = parse_list("--alphas", list)?;
            if alphas.len() > MAX_EXACT_PLAYERS {
                return Err(too_large(alphas.len()));
            }
            let world = SignalWorld::symmetric(LabelSpace::new(args.labels).map_err(config_err)?, &alphas)
                .map_err(config_err)?;
            let game = TabularGame::tabulate(&MajorityVoteGame::new(&world).map_err(config_err)?).map_err(config_err)?;
            if args.tasks < kfca_core::reports::MIN_TASKS {
                return Err(config_err(kfca_core::Error::TooFewTasks(args.tasks)));
            }
            let synthetic = Synthetic {
                labels: args.labels,
                alphas,
                tasks: args.tasks,
            };
            ("majority-vote".to_string(), game, Some(synthetic))
        }
        (None, None) => ("worked-example".to_string(), TabularGame::worked_example(), None),
    };
    let n = game.players();
    if n > MAX_EXACT_PLAYERS {
        return Err(too_large(n));
    }
    if args.permutations == 0 {
        return Err(Failure::config("--permutations must be at least 1"));
    }
    let mut mc = McConfig {
        max_permutations: args.permutations,
        truncation_eps: None,
        stopping: args.stopping.map(|tol| StoppingRule {
            tol,
            ..StoppingRule::default()
        }),
    };
    if let Some(fraction) = args.truncation {
        if !(fraction.is_finite() && fraction >= 0.0) {
            return Err(Failure::config(format!("--truncation must be a non-negative fraction, got {fraction}")));
        }
        mc = mc.relative_truncation(&game, fraction);
    }
    Ok(Resolved::Shapley(Params {
        source,
        players: n,
        values: (0..1u64 << n).map(|s| game.value(s)).collect(),
        world,
        mc,
        seed: global.seed.unwrap_or(0),
        format: global.format,
    }))
}

/// One round of KFCA rewards with every client scored against all others.
fn kfca_rewards(s: &Synthetic, streams: &Streams) -> Result<Vec<f64>, Failure> {
    let labels = LabelSpace::new(s.labels)?;
    let world = SignalWorld::symmetric(labels, &s.alphas)?;
    let n = s.alphas.len();
    if n < 2 {
        return Err(Failure::runtime("KFCA rewards need at least 2 clients"));
    }
    let truths = world.sample_truths(s.tasks, &mut streams.stream(Domain::Truth, &[]));
    let rows = (0..n)
        .map(|i| world.sample_client_signals(i, &truths, &mut streams.task_stream(Domain::Signal, &[i as u64])))
        .collect();
    let reports = ReportMatrix::from_rows(labels, rows, 0)?;
    let partition = make_partition(s.tasks, &PartitionFractions::default(), &mut streams.stream(Domain::Partition, &[]))?;
    let records = round_rewards(&reports, &partition, &ScoreMatrix::kfca(labels), n - 1, streams)?;
    Ok(records.iter().map(|r| r.reward).collect())
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let game = TabularGame::new(p.players, p.values.clone())?;
    let streams = Streams::new(p.seed);
    let exact = ctx.phase("exact", |_| Ok(exact_shapley(&game)?))?;
    let mc = ctx.phase("monte-carlo", |_| Ok(mc_shapley(&game, &p.mc, &streams)?))?;
    let kfca = match &p.world {
        Some(s) => Some(ctx.phase("kfca", |_| kfca_rewards(s, &streams))?),
        None => None,
    };
    let mut coin = streams.stream(Domain::Trial, &[0]);
    let random: Vec<f64> = (0..p.players).map(|_| coin.random::<f64>()).collect();

    let rows: Vec<Row> = (0..p.players)
        .map(|client| Row {
            client,
            phi_exact: exact.values[client],
            phi_mc: mc.values[client],
            evaluations: mc.evaluations_used,
            kfca_reward: kfca.as_ref().map(|k| k[client]),
        })
        .collect();
    ctx.write_table("shapley", &rows, p.format)?;

    let dist = |v: &[f64]| distance_metrics(&exact.values, v).ok();
    let mut distances = vec![
        DistanceRow {
            estimator: "monte-carlo",
            distances: dist(&mc.values),
            evaluations: mc.evaluations_used,
            permutations: mc.permutations_used,
            converged: mc.converged,
        },
        DistanceRow {
            estimator: "random",
            distances: dist(&random),
            evaluations: 0,
            permutations: 0,
            converged: true,
        },
    ];
    if let Some(k) = &kfca {
        distances.push(DistanceRow {
            estimator: "kfca",
            distances: dist(k),
            evaluations: 0,
            permutations: 0,
            converged: true,
        });
    }
    ctx.write_json("distances.json", &distances)?;
    for d in &distances {
        match &d.distances {
            Some(x) => println!(
                "{:<12} cosine {:.5}  euclidean {:.5}  max diff {:.5}",
                d.estimator, x.cosine, x.euclidean, x.max_diff
            ),
            None => println!("{:<12} distance undefined (no positive reward)", d.estimator),
        }
    }
    Ok(())
}

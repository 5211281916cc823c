use std::time::Instant;

use clap::{Args as ClapArgs, ValueEnum};
use serde::{Deserialize, Serialize};

use kfca_core::mechanism::{ca_round_rewards_empirical, make_partition, round_rewards, PartitionFractions, ScoreMatrix};
use kfca_core::rng::Domain;
use kfca_core::stats::{loglog_slope, median};
use kfca_core::{LabelSpace, ReportMatrix, SignalWorld, Streams, TaskPartition};

use super::{parse_list, Global, Resolved};
use crate::context::{Context, Failure};
use crate::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMechanism {
    /// Exact-agreement scoring with P sampled peers.
    Kfca,
    /// Correlated agreement with a delta estimated for every client pair.
    CaEmpirical,
}

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Client counts.
    #[arg(long, default_value = "10,20,40,80")]
    n_grid: String,

    /// Peer counts for KFCA; the estimated-delta baseline always pairs
    /// every client with all others.
    #[arg(long, default_value = "5")]
    p_grid: String,

    /// Tasks per round for KFCA.
    #[arg(long, default_value_t = 100_000)]
    tasks: usize,

    /// Tasks per round for the estimated-delta baseline.
    #[arg(long, default_value_t = 20_000)]
    ca_tasks: usize,

    /// Timed repetitions per configuration; the median is reported.
    #[arg(long, default_value_t = 5)]
    repeats: usize,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BenchMechanism::Kfca, BenchMechanism::CaEmpirical])]
    mechanism: Vec<BenchMechanism>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n_grid: Vec<usize>,
    pub p_grid: Vec<usize>,
    pub tasks: usize,
    pub ca_tasks: usize,
    pub repeats: usize,
    pub mechanisms: Vec<BenchMechanism>,
    pub seed: u64,
    pub format: Format,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub mechanism: BenchMechanism,
    pub n: usize,
    pub peers: usize,
    pub tasks: usize,
    pub repeats: usize,
    pub median_seconds: f64,
}

#[derive(Debug, Serialize)]
struct Fit {
    mechanism: BenchMechanism,
    peers: Option<usize>,
    slope_vs_n: f64,
}

#[derive(Debug, Serialize)]
struct PeerScaling {
    n: usize,
    peers_from: usize,
    peers_to: usize,
    time_ratio: f64,
}

pub fn resolve(args: Args, global: &Global) -> Result<Resolved, Failure> {
    let mut n_grid: Vec<usize> = parse_list("--n-grid", &args.n_grid)?;
    let mut p_grid: Vec<usize> = parse_list("--p-grid", &args.p_grid)?;
    n_grid.sort_unstable();
    n_grid.dedup();
    p_grid.sort_unstable();
    p_grid.dedup();
    if n_grid[0] < 2 {
        return Err(Failure::config("--n-grid: every client count must be at least 2"));
    }
    if p_grid[0] == 0 {
        return Err(Failure::config("--p-grid: peer counts must be positive"));
    }
    if args.tasks.min(args.ca_tasks) < kfca_core::reports::MIN_TASKS {
        return Err(super::config_err(kfca_core::Error::TooFewTasks(args.tasks.min(args.ca_tasks))));
    }
    if args.repeats == 0 {
        return Err(Failure::config("--repeats must be at least 1"));
    }
    let mut mechanisms = args.mechanism;
    mechanisms.dedup();
    Ok(Resolved::Bench(Params {
        n_grid,
        p_grid,
        tasks: args.tasks,
        ca_tasks: args.ca_tasks,
        repeats: args.repeats,
        mechanisms,
        seed: global.seed.unwrap_or(0),
        format: global.format,
    }))
}

fn instance(n: usize, tasks: usize, streams: &Streams) -> Result<(ReportMatrix, TaskPartition), Failure> {
    let world = SignalWorld::symmetric(LabelSpace::binary(), &vec![0.1; n])?;
    let truths = world.sample_truths(tasks, &mut streams.stream(Domain::Truth, &[n as u64]));
    let rows = (0..n)
        .map(|i| world.sample_client_signals(i, &truths, &mut streams.task_stream(Domain::Signal, &[n as u64, i as u64])))
        .collect();
    let reports = ReportMatrix::from_rows(LabelSpace::binary(), rows, 0)?;
    let partition = make_partition(tasks, &PartitionFractions::default(), &mut streams.stream(Domain::Partition, &[]))?;
    Ok((reports, partition))
}

/// Median wall-clock seconds of `repeats` runs after one warm-up run.
fn time(repeats: usize, mut f: impl FnMut() -> Result<(), Failure>) -> Result<f64, Failure> {
    f()?;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(median(&mut samples))
}

/// Times every configuration on one thread.
pub fn run(p: &Params) -> Result<Vec<BenchRow>, Failure> {
    let streams = Streams::new(p.seed);
    let mut rows = Vec::new();
    for &mechanism in &p.mechanisms {
        let tasks = match mechanism {
            BenchMechanism::Kfca => p.tasks,
            BenchMechanism::CaEmpirical => p.ca_tasks,
        };
        for &n in &p.n_grid {
            let (reports, partition) = instance(n, tasks, &streams)?;
            match mechanism {
                BenchMechanism::Kfca => {
                    let score = ScoreMatrix::kfca(LabelSpace::binary());
                    for &peers in p.p_grid.iter().filter(|&&peers| peers < n) {
                        let median_seconds = time(p.repeats, || {
                            round_rewards(&reports, &partition, &score, peers, &streams)?;
                            Ok(())
                        })?;
                        rows.push(BenchRow {
                            mechanism,
                            n,
                            peers,
                            tasks,
                            repeats: p.repeats,
                            median_seconds,
                        });
                    }
                }
                BenchMechanism::CaEmpirical => {
                    let median_seconds = time(p.repeats, || {
                        ca_round_rewards_empirical(&reports, &partition, &streams)?;
                        Ok(())
                    })?;
                    rows.push(BenchRow {
                        mechanism,
                        n,
                        peers: n - 1,
                        tasks,
                        repeats: p.repeats,
                        median_seconds,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn fits(rows: &[BenchRow], p: &Params) -> Vec<Fit> {
    let mut out = Vec::new();
    let slope = |sel: &dyn Fn(&BenchRow) -> bool| {
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| sel(r)).map(|r| (r.n as f64, r.median_seconds)).collect();
        (pts.len() >= 2).then(|| loglog_slope(&pts))
    };
    for &mechanism in &p.mechanisms {
        match mechanism {
            BenchMechanism::Kfca => {
                for &peers in &p.p_grid {
                    if let Some(s) = slope(&|r| r.mechanism == mechanism && r.peers == peers) {
                        out.push(Fit {
                            mechanism,
                            peers: Some(peers),
                            slope_vs_n: s,
                        });
                    }
                }
            }
            BenchMechanism::CaEmpirical => {
                if let Some(s) = slope(&|r| r.mechanism == mechanism) {
                    out.push(Fit {
                        mechanism,
                        peers: None,
                        slope_vs_n: s,
                    });
                }
            }
        }
    }
    out
}

fn peer_scaling(rows: &[BenchRow]) -> Vec<PeerScaling> {
    let kfca: Vec<&BenchRow> = rows.iter().filter(|r| r.mechanism == BenchMechanism::Kfca).collect();
    let mut out = Vec::new();
    for a in &kfca {
        if let Some(b) = kfca.iter().find(|b| b.n == a.n && b.peers == 2 * a.peers) {
            out.push(PeerScaling {
                n: a.n,
                peers_from: a.peers,
                peers_to: b.peers,
                time_ratio: b.median_seconds / a.median_seconds,
            });
        }
    }
    out
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
    let rows = ctx.phase("bench", |_| pool.install(|| run(p)))?;
    ctx.write_table("bench", &rows, p.format)?;
    let fits = fits(&rows, p);
    let scaling = peer_scaling(&rows);
    ctx.write_json(
        "bench_fit.json",
        &serde_json::json!({ "fits": &fits, "peer_scaling": &scaling }),
    )?;
    for f in &fits {
        match f.peers {
            Some(peers) => println!("{:?} (P = {peers}): log-log slope vs n = {:.3}", f.mechanism, f.slope_vs_n),
            None => println!("{:?}: log-log slope vs n = {:.3}", f.mechanism, f.slope_vs_n),
        }
    }
    for s in &scaling {
        println!("Kfca n = {}: P {} -> {} time ratio {:.3}", s.n, s.peers_from, s.peers_to, s.time_ratio);
    }
    Ok(())
}

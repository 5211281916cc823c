use clap::{Args as ClapArgs, ValueEnum};
use serde::{Deserialize, Serialize};

use kfca_core::robustness::{simulate_robustness, Attacker, Pairing, RobustnessConfig};
use kfca_core::strategy::ReportStrategy;
use kfca_core::{AttackSpec, LabelSpace, SignalWorld, Streams};

use super::{config_err, parse_list, Global, Resolved};
use crate::context::{Context, Failure};
use crate::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PairingArg {
    /// Each peer is malicious with probability lambda.
    Mix,
    /// A fixed set of round(lambda n) malicious clients.
    Fixed,
}

#[derive(ClapArgs, Debug)]
pub struct Args {
    /// Symmetric noise rate shared by all clients.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    #[arg(long, default_value_t = 2)]
    labels: usize,

    /// Comma-separated malicious fractions.
    #[arg(long, default_value = "0,0.2,0.4,0.6")]
    lambdas: String,

    /// Attack applied by malicious clients.
    #[arg(long, default_value = "sign_flip")]
    attack: String,

    /// Instead of --attack, relabel signals with this permutation,
    /// e.g. `1,2,0`.
    #[arg(long)]
    permutation: Option<String>,

    #[arg(long, default_value_t = 11)]
    clients: usize,

    /// Peers per client (default: clients - 1).
    #[arg(long)]
    peers: Option<usize>,

    #[arg(long, default_value_t = 10_000)]
    tasks: usize,

    #[arg(long, default_value_t = 200)]
    trials: usize,

    #[arg(long, value_enum, default_value_t = PairingArg::Mix)]
    pairing: PairingArg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub labels: usize,
    pub lambdas: Vec<f64>,
    /// Template; `lambda` is replaced per grid point.
    pub base: RobustnessConfig,
    pub seed: u64,
    pub format: Format,
}

pub fn resolve(args: Args, global: &Global) -> Result<Resolved, Failure> {
    let lambdas: Vec<f64> = parse_list("--lambdas", &args.lambdas)?;
    if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Failure::config(format!("--lambdas: {bad} outside [0, 1]")));
    }
    let labels = LabelSpace::new(args.labels).map_err(config_err)?;
    let attacker = match &args.permutation {
        Some(p) => Attacker::Strategy(ReportStrategy::permutation(parse_list("--permutation", p)?).map_err(config_err)?),
        None => Attacker::Attack(args.attack.parse::<AttackSpec>().map_err(config_err)?),
    };
    attacker.validate(labels).map_err(config_err)?;
    SignalWorld::symmetric(labels, &[args.alpha]).map_err(config_err)?;
    let base = RobustnessConfig {
        clients: args.clients,
        peers: args.peers.unwrap_or(args.clients.saturating_sub(1)),
        tasks: args.tasks,
        trials: args.trials,
        pairing: match args.pairing {
            PairingArg::Mix => Pairing::PopulationMix,
            PairingArg::Fixed => Pairing::FixedPopulation,
        },
        ..RobustnessConfig::new(0.0, attacker)
    };
    if base.clients < 2 || base.peers == 0 || base.peers >= base.clients {
        return Err(Failure::config(format!(
            "need 1 <= peers < clients, got peers = {} with {} clients",
            base.peers, base.clients
        )));
    }
    if base.tasks < kfca_core::reports::MIN_TASKS {
        return Err(config_err(kfca_core::Error::TooFewTasks(base.tasks)));
    }
    if base.trials == 0 {
        return Err(Failure::config("--trials must be at least 1"));
    }
    Ok(Resolved::Robustness(Params {
        alpha: args.alpha,
        labels: args.labels,
        lambdas,
        base,
        seed: global.seed.unwrap_or(0),
        format: global.format,
    }))
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let world = SignalWorld::symmetric(LabelSpace::new(p.labels)?, &[p.alpha])?;
    // the same seed at every grid point pairs the draws across lambdas
    let streams = Streams::new(p.seed);
    let reports = ctx.phase("simulate", |_| {
        p.lambdas
            .iter()
            .map(|&lambda| {
                let cfg = RobustnessConfig {
                    lambda,
                    ..p.base.clone()
                };
                Ok(simulate_robustness(&world, &cfg, &streams)?)
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    ctx.write_table("robustness", &reports, p.format)?;
    for r in &reports {
        println!(
            "lambda {:.3}: simulated {:+.5} +/- {:.5}, exact {:+.5}, closed form {:+.5}",
            r.lambda, r.simulated_mean, r.simulated_stderr, r.analytic, r.closed_form
        );
    }
    Ok(())
}

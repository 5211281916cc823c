use clap::Args as ClapArgs;
use serde::{Deserialize, Serialize};

use kfca_core::sim::{run_simulation, SimConfig};

use super::{read_input, Global, Resolved};
use crate::context::{Context, Failure};
use crate::Format;

const CONFIG_HELP: &str = "\
Config file format (all keys optional, defaults shown):

  [run]
  mode = kfca_qp        # kfca_qp: sign alphabet, labels = 2; kfca_d: L labels
  rounds = 10
  clients = 10
  peers = 9             # default: clients - 1
  tasks = 10000         # at least 3
  labels = 2
  seed = 0
  persistence = 0.8     # chance a task keeps last round's truth

  [partition]
  bonus = 0.5
  penalty_1 = 0.25
  penalty_2 = 0.25

  [noise]
  alpha = 0.1           # or: alphas = a0, a1, ...   or: concentration = c
  base_noise = 0.1      # concentration only
  skew_gain = 1         # concentration only
  classes = 10          # concentration only
  effort = 1

  [attacks]
  default = honest
  3 = sign_flip         # client index, or a range such as 4-6

Attacks: honest, sign_flip, zero, random, sparse:<percent>, lagged:<k>, stale.";

#[derive(ClapArgs, Debug)]
#[command(after_long_help = CONFIG_HELP)]
pub struct Args {
    /// Override one config value, e.g. `--set run.tasks=5000`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub config: SimConfig,
    pub format: Format,
}

pub fn resolve(args: Args, global: &Global) -> Result<Resolved, Failure> {
    let text = match &global.config {
        Some(path) => String::from_utf8(read_input(path)?)
            .map_err(|_| Failure::config(format!("{} is not UTF-8", path.display())))?,
        None => String::new(),
    };
    let mut config = SimConfig::from_ini_with_overrides(&text, &args.set).map_err(|e| Failure::config(e.to_string()))?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| Failure::config(e.to_string()))?;
    Ok(Resolved::Simulate(Params {
        config,
        format: global.format,
    }))
}

pub fn execute(p: &Params, ctx: &mut Context) -> Result<(), Failure> {
    let run = ctx.phase("simulate", |_| Ok(run_simulation(&p.config)?))?;
    ctx.phase("write", |ctx| {
        ctx.write_table("rewards", &run.reward_rows(), p.format)?;
        ctx.write_json("verdicts.json", &run.verdicts())
    })?;
    for s in run.attack_summary(0) {
        println!(
            "{:<12} clients {:?}  mean reward {:+.4} (stderr {:.4})",
            s.attack.to_string(),
            s.clients,
            s.mean,
            s.stderr
        );
    }
    Ok(())
}

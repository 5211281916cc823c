//! Multi-round federated simulation with synthetic client updates.
//!
//! Training is replaced by a latent truth vector per round. Honest clients
//! observe it through their noise channels and report what they see;
//! attackers transform their own honest history. The aggregation step has
//! nothing to aggregate and only advances the truth sequence.

mod config;
mod run;
mod sweep;

pub use config::{NoiseSpec, SimConfig, SimMode};
pub use run::{build_world, resolve_alphas, run_simulation, AttackSummary, PairVerdict, RoundOutcome, SimRun};
pub use sweep::{heterogeneity_sweep, lagged_reward_profile, HeterogeneityPoint};

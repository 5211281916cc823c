//! Peer-prediction rewards for federated learning.
//!
//! The crate implements the multi-task peer-prediction payment engine with two
//! scoring rules: correlated agreement (CA), which needs the delta matrix of
//! the report distribution, and knowledge-free correlated agreement (KFCA),
//! which pays exact agreement and needs nothing. Around it sit the tools used
//! to study both: synthetic signal worlds, delta-matrix estimation and the
//! categorical-world check, brute-force truthfulness verification,
//! closed-form and simulated robustness to malicious clients, Shapley-value
//! baselines, and a multi-round federated simulator.

pub mod attack;
pub mod commit;
pub mod delta;
pub mod enforce;
pub mod error;
pub mod matrix;
pub mod mechanism;
pub mod noniid;
pub mod reports;
pub mod rng;
pub mod robustness;
pub mod shapley;
pub mod sim;
pub mod stats;
pub mod strategy;
pub mod truthfulness;
pub mod world;

pub use attack::AttackSpec;
pub use delta::{CategoricalVerdict, DeltaMatrix};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use mechanism::{RewardRecord, ScoreMatrix, TaskPartition};
pub use reports::ReportMatrix;
pub use rng::Streams;
pub use strategy::ReportStrategy;
pub use world::{Label, LabelSpace, SignalWorld};

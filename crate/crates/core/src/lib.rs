//! Selfish mining versus insightful mining.
//!
//! The crate bundles the engines used to study a pool that spies on a selfish
//! miner and counter-attacks:
//!
//! * [`model`]: the two-dimensional lead state and its transition/reward table.
//! * [`simulator`]: a block-level Monte Carlo engine (branch trees, pool
//!   strategies) plus a walk over the transition table, and the classic
//!   two-player selfish-mining baseline.
//! * [`chain_solver`]: exact stationary analysis of the truncated chain.
//! * [`game`]: the n-pool RHonest/Insightful mining game and its pure Nash
//!   equilibria.
//! * [`mdp`]: the optimal-insightful-mining decision process solved as an
//!   average-reward-ratio problem.

pub mod chain_solver;
pub mod game;
mod linalg;
pub mod mdp;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use chain_solver::{ExpectedRewards, SolverError, StationaryResult};
pub use model::{Lead, LeadState, ModelError, PowerSplit, RewardTriple, Transition};
pub use simulator::{RevenueReport, SimConfig, StrategyProfile3};

/// Version string embedded in run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::grid::Grid;
use crate::output::Format;

/// Insightful mining versus selfish mining: simulation, exact analysis,
/// pool games and the optimal-strategy MDP.
#[derive(Debug, Parser)]
#[command(name = "insightful", version)]
pub struct Cli {
    /// Flat `key = value` file of default flags for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "INSIGHTFUL_WORKERS")]
    pub workers: Option<usize>,
    /// Output file; stdout when absent. A `.manifest.json` sidecar is written next to it.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo revenue of one power split.
    Simulate(SimulateArgs),
    /// Exact revenue shares from the stationary distribution.
    Analytic(AnalyticArgs),
    /// Equilibrium classification and Nash check of a mining game.
    Game(GameArgs),
    /// Optimal insightful strategy and its revenue share.
    Mdp(MdpArgs),
    /// Grid datasets.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// `rrev_IM - rrev_SM` along `alpha = beta`.
    Dominance(DominanceArgs),
    /// Smallest insightful power that beats the selfish pool, per alpha.
    Threshold(ThresholdArgs),
    /// Witness equilibrium and shares over a `(m1, m2)` grid.
    Equilibrium(EquilibriumArgs),
}

impl Command {
    pub fn path(&self) -> Vec<&'static str> {
        match self {
            Command::Simulate(_) => vec!["simulate"],
            Command::Analytic(_) => vec!["analytic"],
            Command::Game(_) => vec!["game"],
            Command::Mdp(_) => vec!["mdp"],
            Command::Sweep(SweepCommand::Dominance(_)) => vec!["sweep", "dominance"],
            Command::Sweep(SweepCommand::Threshold(_)) => vec!["sweep", "threshold"],
            Command::Sweep(SweepCommand::Equilibrium(_)) => vec!["sweep", "equilibrium"],
            Command::Replay(_) => vec!["replay"],
        }
    }

    pub fn params(&self) -> serde_json::Value {
        let v = match self {
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Analytic(a) => serde_json::to_value(a),
            Command::Game(a) => serde_json::to_value(a),
            Command::Mdp(a) => serde_json::to_value(a),
            Command::Sweep(SweepCommand::Dominance(a)) => serde_json::to_value(a),
            Command::Sweep(SweepCommand::Threshold(a)) => serde_json::to_value(a),
            Command::Sweep(SweepCommand::Equilibrium(a)) => serde_json::to_value(a),
            Command::Replay(a) => serde_json::to_value(a),
        };
        v.expect("flag structs serialize")
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Simulate(a) => Some(a.seed),
            Command::Mdp(a) if a.eval_steps > 0 => Some(a.seed),
            Command::Sweep(SweepCommand::Threshold(a)) if a.engine == ProbeArg::MonteCarlo => Some(a.seed),
            _ => None,
        }
    }
}

/// Accepts plain integers and integral floats such as `1e7`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Insightful,
    HonestVictim,
    BaselineSelfish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimEngine {
    /// Block-level engine with explicit branches.
    Block,
    /// Random walk over the transition table (insightful mode only).
    Walk,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Selfish pool power.
    #[arg(long)]
    pub alpha: f64,
    /// Insightful pool power.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 10_000_000, value_parser = parse_count)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Insightful)]
    pub mode: Mode,
    /// Tie-following share of honest power (baseline mode).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = SimEngine::Block)]
    pub engine: SimEngine,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyticArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Truncation cap on each lead.
    #[arg(long, default_value_t = 80)]
    pub cap: u32,
    /// Tail mass above which the chain counts as transient.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GameArgs {
    /// Comma-separated pool powers summing to 1.
    #[arg(long, required = true, value_delimiter = ',')]
    pub powers: Vec<f64>,
    /// Profile to check instead of the witness, e.g. `I,H,H` or `IHH`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// List every pure equilibrium instead.
    #[arg(long)]
    pub brute_force: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MdpArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 20)]
    pub max_len: u16,
    /// Width of the final bisection bracket.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Write the optimal policy table here.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_out: Option<PathBuf>,
    /// Roll the optimal policy forward this many decisions (0 skips).
    #[arg(long, default_value_t = 0, value_parser = parse_count)]
    pub eval_steps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DominanceArgs {
    /// Values of `alpha = beta`.
    #[arg(long, default_value = "0.26:0.48:0.02")]
    pub grid: Grid,
    #[arg(long, default_value_t = 80)]
    pub cap: u32,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityArg {
    Relative,
    UnitRelative,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeArg {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ThresholdArgs {
    /// Selfish pool powers, inside (0.25, 0.5).
    #[arg(long, default_value = "0.30:0.45:0.05")]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = ParityArg::Both)]
    pub parity: ParityArg,
    #[arg(long, value_enum, default_value_t = ProbeArg::Analytic)]
    pub engine: ProbeArg,
    #[arg(long, default_value_t = 80)]
    pub cap: u32,
    /// Steps per Monte Carlo probe.
    #[arg(long, default_value_t = 1_000_000, value_parser = parse_count)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EquilibriumArgs {
    /// Largest pool power.
    #[arg(long, default_value = "0.05:0.45:0.05")]
    pub m1: Grid,
    /// Second pool power (points with m2 > m1 are skipped).
    #[arg(long, default_value = "0.05:0.45:0.05")]
    pub m2: Grid,
    /// Equal honest pools sharing the remainder.
    #[arg(long, default_value_t = 3)]
    pub rest_pools: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

//! Monte Carlo engines.
//!
//! [`simulate_three_pool`] grows an explicit block tree: every step one pool
//! finds a block, then the withholding pools react to what became public
//! until nothing changes. When a single public tip remains and nobody holds
//! hidden blocks the round is over and the main chain is credited block by
//! block.
//!
//! [`simulate_markov_walk`] instead walks the lead-state chain of
//! [`crate::model`]; both engines estimate the same shares.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chain_solver::{self, SolverError};
use crate::model::{self, LeadState, ModelError, PowerSplit};
use crate::rng::{self, SimRng};
use crate::stats::RatioAccumulator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("gamma {0} must lie in [0, 1]")]
    InvalidGamma(f64),
    #[error("alpha {0} is outside the sweep domain (0.25, 0.5)")]
    SweepDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pool {
    Honest = 0,
    Selfish = 1,
    Insightful = 2,
}

/// How the third pool plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsightfulMode {
    /// Mines honestly and becomes a victim of the selfish pool.
    Honest,
    /// Spies on the selfish pool and counter-attacks.
    Insightful,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategyProfile3 {
    /// Whether the `alpha` pool mines selfishly (otherwise honestly).
    pub selfish_present: bool,
    pub insightful_mode: InsightfulMode,
}

impl StrategyProfile3 {
    pub const INSIGHTFUL: Self = Self {
        selfish_present: true,
        insightful_mode: InsightfulMode::Insightful,
    };
    pub const HONEST_VICTIM: Self = Self {
        selfish_present: true,
        insightful_mode: InsightfulMode::Honest,
    };
    pub const ALL_HONEST: Self = Self {
        selfish_present: false,
        insightful_mode: InsightfulMode::Honest,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub powers: PowerSplit,
    /// Number of block-generation events.
    pub steps: u64,
    pub seed: u64,
    /// Share of honest power that follows the attacker's branch on a tie.
    /// Only the two-pool baseline reads it.
    pub gamma: f64,
}

impl SimConfig {
    pub fn new(powers: PowerSplit, steps: u64, seed: u64) -> Self {
        Self {
            powers,
            steps,
            seed,
            gamma: 0.5,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.steps == 0 {
            return Err(SimError::NoSteps);
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(SimError::InvalidGamma(self.gamma));
        }
        Ok(())
    }
}

/// Revenue accounting of a run. The block engine closes a round still open
/// at the end by having every pool release its branch; the walk drops it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueReport {
    pub steps: u64,
    pub rounds: u64,
    pub blocks_main_chain: u64,
    /// Main-chain blocks credited to `(honest, selfish, insightful)`.
    pub credited: [u64; 3],
    pub rrev: [f64; 3],
    pub stderr_rrev: [f64; 3],
}

impl RevenueReport {
    fn new(steps: u64, acc: &RatioAccumulator, blocks_main_chain: u64) -> Self {
        Self {
            steps,
            rounds: acc.rounds,
            blocks_main_chain,
            credited: acc.blocks,
            rrev: acc.ratios(),
            stderr_rrev: acc.std_errors(),
        }
    }
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Block {
    parent: u32,
    owner: Pool,
    height: u32,
}

/// How each of the three pools behaves in one run.
#[derive(Debug, Clone, Copy)]
struct Roles {
    selfish: bool,
    insightful: bool,
    /// Honest tie-break toward a selfish-owned tip.
    gamma: f64,
}

/// One round's block tree plus the pools' private views.
struct Engine {
    roles: Roles,
    alpha: f64,
    alpha_beta: f64,
    blocks: Vec<Block>,
    /// Public blocks of maximal height.
    tips: Vec<u32>,
    public_height: u32,
    selfish_hidden: VecDeque<u32>,
    selfish_seen: u32,
    insightful_hidden: Vec<u32>,
    insightful_seen: u32,
}

impl Engine {
    fn new(powers: &PowerSplit, roles: Roles) -> Self {
        let mut e = Self {
            roles,
            alpha: powers.alpha(),
            alpha_beta: powers.alpha() + powers.beta(),
            blocks: Vec::with_capacity(64),
            tips: Vec::with_capacity(4),
            public_height: 0,
            selfish_hidden: VecDeque::new(),
            selfish_seen: 0,
            insightful_hidden: Vec::new(),
            insightful_seen: 0,
        };
        e.reset();
        e
    }

    fn reset(&mut self) {
        self.blocks.clear();
        self.blocks.push(Block {
            parent: NO_PARENT,
            owner: Pool::Honest,
            height: 0,
        });
        self.tips.clear();
        self.tips.push(0);
        self.public_height = 0;
        self.selfish_hidden.clear();
        self.selfish_seen = 0;
        self.insightful_hidden.clear();
        self.insightful_seen = 0;
    }

    fn height(&self, id: u32) -> u32 {
        self.blocks[id as usize].height
    }

    fn owner(&self, id: u32) -> Pool {
        self.blocks[id as usize].owner
    }

    fn mint(&mut self, parent: u32, owner: Pool) -> u32 {
        let id = self.blocks.len() as u32;
        let height = self.height(parent) + 1;
        self.blocks.push(Block {
            parent,
            owner,
            height,
        });
        id
    }

    fn publish(&mut self, id: u32) {
        let h = self.height(id);
        if h > self.public_height {
            self.public_height = h;
            self.tips.clear();
            self.tips.push(id);
        } else if h == self.public_height && !self.tips.contains(&id) {
            self.tips.push(id);
        }
    }

    fn selfish_height(&self) -> u32 {
        match self.selfish_hidden.back() {
            Some(&id) => self.height(id),
            None => self.public_height,
        }
    }

    fn pick_uniform(&self, rng: &mut SimRng, from: &[u32]) -> u32 {
        if from.len() == 1 {
            from[0]
        } else {
            from[rng.gen_range(0..from.len())]
        }
    }

    /// Tip chosen by an honest miner: a selfish-owned tip with probability
    /// gamma when there is one, otherwise uniform over the rest.
    fn honest_tip(&self, rng: &mut SimRng) -> u32 {
        if self.tips.len() == 1 {
            return self.tips[0];
        }
        let (attacker, others): (Vec<u32>, Vec<u32>) = self
            .tips
            .iter()
            .partition(|&&t| self.owner(t) == Pool::Selfish);
        if attacker.is_empty() || others.is_empty() {
            return self.pick_uniform(rng, &self.tips);
        }
        if rng.gen::<f64>() < self.roles.gamma {
            self.pick_uniform(rng, &attacker)
        } else {
            self.pick_uniform(rng, &others)
        }
    }

    fn mine_honestly(&mut self, rng: &mut SimRng, owner: Pool) {
        let parent = self.honest_tip(rng);
        let id = self.mint(parent, owner);
        self.publish(id);
    }

    fn mine_selfish(&mut self, rng: &mut SimRng) {
        let parent = match self.selfish_hidden.back() {
            Some(&id) => id,
            None => match self.tips.iter().find(|&&t| self.owner(t) == Pool::Selfish) {
                Some(&own) => own,
                None => self.pick_uniform(rng, &self.tips.clone()),
            },
        };
        let was_even = self.height(parent) == self.public_height;
        let id = self.mint(parent, Pool::Selfish);
        self.selfish_hidden.push_back(id);
        if was_even && self.tips.len() >= 2 {
            self.selfish_publish_up_to(u32::MAX);
        }
    }

    fn mine_insightful(&mut self, rng: &mut SimRng) {
        if let Some(&tip) = self.insightful_hidden.last() {
            let id = self.mint(tip, Pool::Insightful);
            self.insightful_hidden.push(id);
        } else if self.selfish_hidden.is_empty() && self.tips.len() == 1 {
            let id = self.mint(self.tips[0], Pool::Insightful);
            self.insightful_hidden.push(id);
        } else {
            let own = self.tips.iter().find(|&&t| self.owner(t) == Pool::Insightful);
            let away = self.tips.iter().find(|&&t| self.owner(t) != Pool::Selfish);
            let parent = match (own, away) {
                (Some(&t), _) | (None, Some(&t)) => t,
                (None, None) => self.pick_uniform(rng, &self.tips.clone()),
            };
            let id = self.mint(parent, Pool::Insightful);
            self.publish(id);
        }
    }

    fn selfish_publish_up_to(&mut self, max_height: u32) {
        let cut = self
            .selfish_hidden
            .iter()
            .position(|&id| self.height(id) > max_height)
            .unwrap_or(self.selfish_hidden.len());
        for _ in 0..cut {
            if let Some(id) = self.selfish_hidden.pop_front() {
                self.publish(id);
            }
        }
    }

    /// Reactions to the latest block, repeated until stable.
    fn settle(&mut self) {
        loop {
            let mut changed = false;
            let rival = self.public_height.max(self.selfish_height());
            if rival > self.insightful_seen {
                self.insightful_seen = rival;
                if let Some(&tip) = self.insightful_hidden.last() {
                    if self.height(tip) <= rival + 1 {
                        for id in std::mem::take(&mut self.insightful_hidden) {
                            self.publish(id);
                        }
                    }
                }
                changed = true;
            }
            if self.roles.selfish && self.public_height > self.selfish_seen {
                self.selfish_seen = self.public_height;
                if let Some(&tip) = self.selfish_hidden.back() {
                    let s = self.height(tip);
                    let p = self.public_height;
                    if s < p {
                        self.selfish_hidden.clear();
                    } else if s <= p + 1 {
                        self.selfish_publish_up_to(u32::MAX);
                    } else {
                        self.selfish_publish_up_to(p);
                    }
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }
    }

    fn step(&mut self, rng: &mut SimRng) {
        let u: f64 = rng.gen();
        if u < self.alpha {
            if self.roles.selfish {
                self.mine_selfish(rng);
            } else {
                self.mine_honestly(rng, Pool::Selfish);
            }
        } else if u < self.alpha_beta {
            if self.roles.insightful {
                self.mine_insightful(rng);
            } else {
                self.mine_honestly(rng, Pool::Insightful);
            }
        } else {
            self.mine_honestly(rng, Pool::Honest);
        }
        self.settle();
    }

    /// Main-chain credit if the round has reached consensus.
    fn consensus(&self) -> Option<[u64; 3]> {
        if self.tips.len() != 1 || !self.selfish_hidden.is_empty() || !self.insightful_hidden.is_empty() {
            return None;
        }
        Some(self.public_credit())
    }

    fn release_all(&mut self) {
        while let Some(id) = self.selfish_hidden.pop_front() {
            self.publish(id);
        }
        for id in std::mem::take(&mut self.insightful_hidden) {
            self.publish(id);
        }
    }

    /// Credit along the first public tip, ignoring hidden blocks.
    fn public_credit(&self) -> [u64; 3] {
        let mut credit = [0u64; 3];
        let mut id = self.tips[0];
        while id != 0 {
            let b = self.blocks[id as usize];
            credit[b.owner as usize] += 1;
            id = b.parent;
        }
        debug_assert_eq!(credit.iter().sum::<u64>(), self.public_height as u64);
        credit
    }
}

fn run_engine(powers: &PowerSplit, roles: Roles, steps: u64, rng: &mut SimRng) -> RevenueReport {
    let mut engine = Engine::new(powers, roles);
    let mut acc = RatioAccumulator::new();
    let mut chain = 0u64;
    for _ in 0..steps {
        engine.step(rng);
        if let Some(credit) = engine.consensus() {
            chain += engine.public_height as u64;
            acc.push(credit);
            engine.reset();
        }
    }
    // An unfinished round ends with every pool releasing its branch.
    engine.release_all();
    if engine.public_height > 0 {
        chain += engine.public_height as u64;
        acc.push(engine.public_credit());
    }
    RevenueReport::new(steps, &acc, chain)
}

fn three_pool_on_stream(
    config: &SimConfig,
    profile: StrategyProfile3,
    stream: u64,
) -> Result<RevenueReport, SimError> {
    config.validate()?;
    let roles = Roles {
        selfish: profile.selfish_present,
        insightful: profile.insightful_mode == InsightfulMode::Insightful,
        gamma: 0.5,
    };
    let mut rng = rng::stream(config.seed, stream);
    Ok(run_engine(&config.powers, roles, config.steps, &mut rng))
}

/// Block-level simulation of the honest, selfish and insightful pools.
///
/// Honest miners split ties uniformly. `config.gamma` is ignored here.
pub fn simulate_three_pool(config: &SimConfig, profile: StrategyProfile3) -> Result<RevenueReport, SimError> {
    three_pool_on_stream(config, profile, 0)
}

/// Classic selfish mining of the `alpha` pool against everyone else, who mine
/// honestly and side with the attacker on ties with probability `gamma`.
/// The `beta` pool counts as honest; the report's third share is zero.
pub fn simulate_selfish_baseline(config: &SimConfig) -> Result<RevenueReport, SimError> {
    config.validate()?;
    let powers = PowerSplit::new(config.powers.alpha(), 0.0)?;
    let roles = Roles {
        selfish: true,
        insightful: false,
        gamma: config.gamma,
    };
    let mut rng = rng::stream(config.seed, 0);
    Ok(run_engine(&powers, roles, config.steps, &mut rng))
}

/// Rows after which the longest chain is one block taller.
pub fn raises_chain_height(row: u8) -> bool {
    matches!(row, 1 | 2 | 4 | 6 | 7 | 10 | 13 | 14 | 16)
}

/// Walk over the lead-state chain with whole-block credits.
pub fn simulate_markov_walk(config: &SimConfig) -> Result<RevenueReport, SimError> {
    config.validate()?;
    let powers = config.powers;
    let mut rng = rng::stream(config.seed, 0);
    let mut acc = RatioAccumulator::new();
    let mut chain = 0u64;
    let mut state = LeadState::ORIGIN;
    let mut credit = [0u64; 3];
    let mut height = 0u64;
    for _ in 0..config.steps {
        let step = model::sample_transition(state, &powers, rng.gen())?;
        for (c, d) in credit.iter_mut().zip(step.credit) {
            *c += d as u64;
        }
        height += raises_chain_height(step.row) as u64;
        state = step.to;
        if state == LeadState::ORIGIN {
            acc.push(credit);
            chain += height;
            credit = [0; 3];
            height = 0;
        }
    }
    Ok(RevenueReport::new(config.steps, &acc, chain))
}

/// Which comparison defines the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// `rrev_IM > rrev_SM`.
    Relative,
    /// `rrev_IM / beta > rrev_SM / alpha`.
    UnitRelative,
}

/// How each probe of a threshold search is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeEngine {
    Analytic { cap: u32 },
    MonteCarlo { steps: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub alpha: f64,
    /// `None` when the search could not bracket a crossing.
    pub beta_star: Option<f64>,
}

/// Bisection stops once the bracket is this narrow.
pub const THRESHOLD_TOL: f64 = 1e-4;
const BETA_FLOOR: f64 = 1e-3;

fn probe(
    alpha: f64,
    beta: f64,
    engine: ProbeEngine,
    stream: u64,
) -> Result<[f64; 3], SimError> {
    let powers = PowerSplit::new(alpha, beta)?;
    match engine {
        ProbeEngine::Analytic { cap } => {
            Ok(chain_solver::revenue_shares(&powers, cap, chain_solver::DEFAULT_TOL)?.rrev)
        }
        ProbeEngine::MonteCarlo { steps, seed } => {
            let config = SimConfig::new(powers, steps, seed);
            Ok(three_pool_on_stream(&config, StrategyProfile3::INSIGHTFUL, stream)?.rrev)
        }
    }
}

fn advantage(alpha: f64, beta: f64, parity: Parity, rrev: [f64; 3]) -> f64 {
    match parity {
        Parity::Relative => rrev[2] - rrev[1],
        Parity::UnitRelative => rrev[2] / beta - rrev[1] / alpha,
    }
}

fn beta_star(alpha: f64, parity: Parity, engine: ProbeEngine, index: u64) -> Result<Option<f64>, SimError> {
    let mut probes = 0u64;
    let mut eval = |beta: f64| -> Result<f64, SimError> {
        let stream = (index << 16) | probes;
        probes += 1;
        Ok(advantage(alpha, beta, parity, probe(alpha, beta, engine, stream)?))
    };
    let (mut lo, mut hi) = (BETA_FLOOR, alpha);
    if eval(lo)? > 0.0 || eval(hi)? <= 0.0 {
        return Ok(None);
    }
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// For each `alpha`, the smallest insightful power at which the insightful
/// pool out-earns the selfish pool under `parity`. Grid points run in
/// parallel; Monte Carlo probes use per-point streams.
pub fn threshold_sweep(
    alpha_grid: &[f64],
    parity: Parity,
    engine: ProbeEngine,
) -> Result<Vec<ThresholdPoint>, SimError> {
    for &a in alpha_grid {
        if !(a > 0.25 && a < 0.5) {
            return Err(SimError::SweepDomain(a));
        }
    }
    alpha_grid
        .par_iter()
        .enumerate()
        .map(|(k, &alpha)| {
            Ok(ThresholdPoint {
                alpha,
                beta_star: beta_star(alpha, parity, engine, k as u64)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(a: f64, b: f64, steps: u64) -> SimConfig {
        SimConfig::new(PowerSplit::new(a, b).unwrap(), steps, 11)
    }

    #[test]
    fn honest_only_world() {
        let r = simulate_three_pool(&config(0.0, 0.0, 1000), StrategyProfile3::INSIGHTFUL).unwrap();
        assert_eq!(r.rrev, [1.0, 0.0, 0.0]);
        assert_eq!(r.blocks_main_chain, 1000);
        assert_eq!(r.rounds, 1000);
    }

    #[test]
    fn first_honest_event_is_a_round() {
        // With alpha = beta = 0 every step is an honest block.
        let r = simulate_markov_walk(&config(0.0, 0.0, 1)).unwrap();
        assert_eq!(r.credited, [1, 0, 0]);
    }

    #[test]
    fn rejects_bad_config() {
        assert_eq!(
            simulate_three_pool(&config(0.1, 0.1, 0), StrategyProfile3::INSIGHTFUL),
            Err(SimError::NoSteps)
        );
        let c = config(0.1, 0.1, 10).with_gamma(1.5);
        assert_eq!(simulate_selfish_baseline(&c), Err(SimError::InvalidGamma(1.5)));
        assert!(matches!(
            threshold_sweep(&[0.2], Parity::Relative, ProbeEngine::Analytic { cap: 40 }),
            Err(SimError::SweepDomain(_))
        ));
    }

    #[test]
    fn seeded_runs_repeat() {
        let c = config(0.3, 0.3, 20_000);
        let a = simulate_three_pool(&c, StrategyProfile3::INSIGHTFUL).unwrap();
        let b = simulate_three_pool(&c, StrategyProfile3::INSIGHTFUL).unwrap();
        assert_eq!(a, b);
        let a = simulate_markov_walk(&c).unwrap();
        let b = simulate_markov_walk(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shares_sum_to_one() {
        for profile in [
            StrategyProfile3::INSIGHTFUL,
            StrategyProfile3::HONEST_VICTIM,
            StrategyProfile3::ALL_HONEST,
        ] {
            let r = simulate_three_pool(&config(0.3, 0.2, 50_000), profile).unwrap();
            assert!((r.rrev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(r.credited.iter().sum::<u64>(), r.blocks_main_chain);
        }
    }
}

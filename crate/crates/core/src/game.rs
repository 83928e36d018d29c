//! The n-pool mining game between refined-honest and insightful pools.
//!
//! Every pool either mines honestly (following the honest branch on a
//! detected tie) or mines insightfully. Expected rewards have a closed form
//! up to a common factor, so relative revenues, best responses and pure Nash
//! equilibria can be computed exactly.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

/// Absolute tolerance on relative-revenue comparisons; smaller gains count
/// as indifference.
pub const RREV_TOL: f64 = 1e-12;
/// Largest game that [`brute_force_nash`] enumerates.
pub const MAX_BRUTE_FORCE_POOLS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("{name} is undefined at {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("powers must be positive and sum to 1 (sum = {sum})")]
    InvalidPowers { sum: f64 },
    #[error("profile has {profile} entries for {pools} pools")]
    ProfileLength { pools: usize, profile: usize },
    #[error("pool {pool} with power {power} cannot mine insightfully (need < 1/2)")]
    InsightfulTooLarge { pool: usize, power: f64 },
    #[error("largest pool {0} exceeds 1/2, outside the equilibrium characterization")]
    OutsideCharacterization(f64),
    #[error("{0} pools is too many to enumerate (max {MAX_BRUTE_FORCE_POOLS})")]
    TooManyPools(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    RHonest,
    Insightful,
}

impl Strategy {
    pub fn flipped(self) -> Self {
        match self {
            Strategy::RHonest => Strategy::Insightful,
            Strategy::Insightful => Strategy::RHonest,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::RHonest => "RHonest",
            Strategy::Insightful => "Insightful",
        })
    }
}

/// `f(y) = y^2 (2 - 3y) / (1 - 2y)` on `[0, 1/2)`.
pub fn f(y: f64) -> Result<f64, GameError> {
    if !(0.0..0.5).contains(&y) {
        return Err(GameError::Domain {
            name: "f",
            value: y,
            reason: "need 0 <= y < 1/2",
        });
    }
    Ok(y * y * (2.0 - 3.0 * y) / (1.0 - 2.0 * y))
}

/// `g(y) = (-y^3 + 2y^2 + y - 1) / (2y^2 + 4y - 3)` on `[0, 1/2]`.
pub fn g(y: f64) -> Result<f64, GameError> {
    if !(0.0..=0.5).contains(&y) {
        return Err(GameError::Domain {
            name: "g",
            value: y,
            reason: "need 0 <= y <= 1/2",
        });
    }
    Ok((-y.powi(3) + 2.0 * y * y + y - 1.0) / (2.0 * y * y + 4.0 * y - 3.0))
}

/// Largest third-pool power for which joining two insightful pools of powers
/// `m1 >= m2` does not pay.
pub fn h(m1: f64, m2: f64) -> Result<f64, GameError> {
    if !(m2 > 0.0 && m2 <= m1 && m1 <= 0.5) {
        return Err(GameError::Domain {
            name: "h",
            value: m1,
            reason: "need 0 < m2 <= m1 <= 1/2",
        });
    }
    let (a, b) = (m1, m2);
    let (a2, a3, b2, b3) = (a * a, a * a * a, b * b, b * b * b);
    let num = 1.0 - a - 2.0 * a2 + a3 - b + 4.0 * a2 * b - 2.0 * a3 * b - 2.0 * b2 + 4.0 * a * b2
        + b3
        - 2.0 * a * b3;
    let den = 3.0 - 4.0 * a - 2.0 * a2 - 4.0 * b + 4.0 * a * b + 4.0 * a2 * b - 2.0 * b2
        + 4.0 * a * b2;
    if den == 0.0 {
        return Err(GameError::Domain {
            name: "h",
            value: m1,
            reason: "zero denominator",
        });
    }
    Ok(num / den)
}

/// Pool powers plus a pure strategy profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    powers: Vec<f64>,
    profile: Vec<Strategy>,
}

fn check_powers(powers: &[f64]) -> Result<(), GameError> {
    let sum: f64 = powers.iter().sum();
    if powers.is_empty() || powers.iter().any(|&m| !(m > 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(GameError::InvalidPowers { sum });
    }
    Ok(())
}

impl GameInstance {
    /// Powers may come in any order.
    pub fn new(powers: Vec<f64>, profile: Vec<Strategy>) -> Result<Self, GameError> {
        check_powers(&powers)?;
        if powers.len() != profile.len() {
            return Err(GameError::ProfileLength {
                pools: powers.len(),
                profile: profile.len(),
            });
        }
        Ok(Self { powers, profile })
    }

    pub fn all_honest(powers: Vec<f64>) -> Result<Self, GameError> {
        let n = powers.len();
        Self::new(powers, vec![Strategy::RHonest; n])
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn profile(&self) -> &[Strategy] {
        &self.profile
    }

    pub fn insightful_count(&self) -> usize {
        self.profile.iter().filter(|s| **s == Strategy::Insightful).count()
    }

    fn with_flip(&self, pool: usize) -> Self {
        let mut profile = self.profile.clone();
        profile[pool] = profile[pool].flipped();
        Self {
            powers: self.powers.clone(),
            profile,
        }
    }
}

/// Rewards up to the common factor, and the shares they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRewards {
    pub er: Vec<f64>,
    pub rrev: Vec<f64>,
}

/// `ER_i = f(m_i) + m_i S` for insightful pools and `m_i + m_i S` otherwise,
/// with `S = sum over insightful j of 2 m_j (1 - m_j)`.
pub fn expected_rewards_profile(instance: &GameInstance) -> Result<ProfileRewards, GameError> {
    let mut spread = 0.0;
    for (i, (&m, &s)) in instance.powers.iter().zip(&instance.profile).enumerate() {
        if s == Strategy::Insightful {
            if m >= 0.5 {
                return Err(GameError::InsightfulTooLarge { pool: i, power: m });
            }
            spread += 2.0 * m * (1.0 - m);
        }
    }
    let er: Vec<f64> = instance
        .powers
        .iter()
        .zip(&instance.profile)
        .map(|(&m, &s)| {
            let own = match s {
                Strategy::Insightful => f(m)?,
                Strategy::RHonest => m,
            };
            Ok(own + m * spread)
        })
        .collect::<Result<_, GameError>>()?;
    let total: f64 = er.iter().sum();
    let rrev = er.iter().map(|e| e / total).collect();
    Ok(ProfileRewards { er, rrev })
}

/// Outcome of one pool's unilateral flip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub pool: usize,
    pub from: Strategy,
    pub to: Strategy,
    pub rrev_before: f64,
    /// `None` when the flip is unavailable (a pool of power >= 1/2 cannot
    /// mine insightfully).
    pub rrev_after: Option<f64>,
}

impl Deviation {
    pub fn gain(&self) -> Option<f64> {
        self.rrev_after.map(|a| a - self.rrev_before)
    }

    pub fn improves(&self) -> bool {
        self.gain().is_some_and(|g| g > RREV_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub is_nash: bool,
    /// One entry per pool, in instance order.
    pub deviations: Vec<Deviation>,
}

/// Checks whether any pool strictly gains by flipping its strategy.
pub fn is_nash(instance: &GameInstance) -> Result<NashReport, GameError> {
    let base = expected_rewards_profile(instance)?;
    let mut deviations = Vec::with_capacity(instance.powers.len());
    for pool in 0..instance.powers.len() {
        let from = instance.profile[pool];
        let flipped = instance.with_flip(pool);
        let rrev_after = match expected_rewards_profile(&flipped) {
            Ok(r) => Some(r.rrev[pool]),
            Err(GameError::InsightfulTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        deviations.push(Deviation {
            pool,
            from,
            to: from.flipped(),
            rrev_before: base.rrev[pool],
            rrev_after,
        });
    }
    Ok(NashReport {
        is_nash: deviations.iter().all(|d| !d.improves()),
        deviations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    AllHonest,
    OneInsightful,
    TwoInsightful,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::AllHonest => "AllHonest",
            EquilibriumKind::OneInsightful => "OneInsightful",
            EquilibriumKind::TwoInsightful => "TwoInsightful",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: EquilibriumKind,
    /// Witness profile, indexed like the caller's powers.
    pub witness: Vec<Strategy>,
    /// The powers sit on a boundary where the next type is an equilibrium
    /// too.
    pub boundary_tie: bool,
}

/// Pool indices ordered by decreasing power (stable for equal powers).
fn by_power(powers: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]));
    order
}

/// Equilibrium type from the two largest powers: all honest when
/// `m1 <= 1/3`, otherwise the largest pool alone when `m2 <= g(m1)`, and
/// the two largest otherwise.
pub fn classify_equilibrium(powers: &[f64]) -> Result<Classification, GameError> {
    check_powers(powers)?;
    let order = by_power(powers);
    let m1 = powers[order[0]];
    if m1 > 0.5 {
        return Err(GameError::OutsideCharacterization(m1));
    }
    let m2 = order.get(1).map_or(0.0, |&k| powers[k]);
    let mut witness = vec![Strategy::RHonest; powers.len()];
    let third = 1.0 / 3.0;
    if m1 <= third + RREV_TOL {
        return Ok(Classification {
            kind: EquilibriumKind::AllHonest,
            witness,
            boundary_tie: (m1 - third).abs() <= RREV_TOL,
        });
    }
    witness[order[0]] = Strategy::Insightful;
    let gm1 = g(m1)?;
    if m2 <= gm1 + RREV_TOL {
        return Ok(Classification {
            kind: EquilibriumKind::OneInsightful,
            witness,
            boundary_tie: (m2 - gm1).abs() <= RREV_TOL,
        });
    }
    witness[order[1]] = Strategy::Insightful;
    Ok(Classification {
        kind: EquilibriumKind::TwoInsightful,
        witness,
        boundary_tie: false,
    })
}

/// Every pure-strategy Nash profile, ordered by the binary encoding of the
/// profile (pool 0 is the lowest bit). Profiles that would make a pool of
/// power >= 1/2 insightful are skipped.
pub fn brute_force_nash(powers: &[f64]) -> Result<Vec<Vec<Strategy>>, GameError> {
    check_powers(powers)?;
    let n = powers.len();
    if n > MAX_BRUTE_FORCE_POOLS {
        return Err(GameError::TooManyPools(n));
    }
    let found: Vec<Option<Vec<Strategy>>> = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let profile: Vec<Strategy> = (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        Strategy::Insightful
                    } else {
                        Strategy::RHonest
                    }
                })
                .collect();
            if profile
                .iter()
                .zip(powers)
                .any(|(s, &m)| *s == Strategy::Insightful && m >= 0.5)
            {
                return Ok(None);
            }
            let instance = GameInstance::new(powers.to_vec(), profile)?;
            Ok(is_nash(&instance)?.is_nash.then_some(instance.profile))
        })
        .collect::<Result<_, GameError>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Stationary ratios of the single-fork chain of one insightful pool with
/// power `m` against everyone else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForkChain {
    m: f64,
}

impl ForkChain {
    /// `pi_{0'} / pi_0`.
    pub fn tie(&self) -> f64 {
        self.m * (1.0 - self.m)
    }

    /// `pi_i / pi_0` for a private lead of `i >= 1` blocks.
    pub fn lead(&self, i: u32) -> f64 {
        assert!(i >= 1, "lead index starts at 1");
        self.m * (self.m / (1.0 - self.m)).powi(i as i32 - 1)
    }

    /// Expected blocks the insightful pool wins per unit of `pi_0`, summed
    /// state by state until the terms vanish.
    pub fn branch_revenue(&self) -> f64 {
        let m = self.m;
        let mut total = self.tie() * m * 2.0 + self.lead(2) * (1.0 - m) * 2.0;
        let mut i = 3;
        loop {
            let term = self.lead(i) * (1.0 - m);
            total += term;
            if term < 1e-18 * total {
                break;
            }
            i += 1;
        }
        total
    }
}

pub fn fork_chain_stationary(m: f64) -> Result<ForkChain, GameError> {
    if !(m > 0.0 && m < 0.5) {
        return Err(GameError::Domain {
            name: "fork_chain_stationary",
            value: m,
            reason: "need 0 < m < 1/2",
        });
    }
    Ok(ForkChain { m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_values() {
        assert_eq!(f(0.0).unwrap(), 0.0);
        assert!((f(1.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((f(0.4).unwrap() - 0.64).abs() < 1e-12);
        assert!(f(0.5).is_err());
    }

    #[test]
    fn g_values() {
        assert!((g(1.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((g(0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((g(0.35).unwrap() - 0.330535).abs() < 1e-6);
        assert!(g(0.6).is_err());
    }

    #[test]
    fn h_value() {
        assert!((h(0.4, 0.4).unwrap() - 0.312821).abs() < 1e-6);
        assert!(h(0.3, 0.4).is_err());
    }

    #[test]
    fn two_pool_reward_example() {
        let inst = GameInstance::new(vec![0.4, 0.6], vec![Strategy::Insightful, Strategy::RHonest]).unwrap();
        let r = expected_rewards_profile(&inst).unwrap();
        let expected = (0.64 + 0.192) / (0.6 + 0.64 + 0.48);
        assert!((r.rrev[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let c = classify_equilibrium(&[0.3, 0.3, 0.2, 0.2]).unwrap();
        assert_eq!(c.kind, EquilibriumKind::AllHonest);
        let c = classify_equilibrium(&[0.2, 0.4, 0.2, 0.2]).unwrap();
        assert_eq!(c.kind, EquilibriumKind::OneInsightful);
        assert_eq!(c.witness[1], Strategy::Insightful);
        let c = classify_equilibrium(&[0.45, 0.35, 0.2]).unwrap();
        assert_eq!(c.kind, EquilibriumKind::TwoInsightful);
        assert!(classify_equilibrium(&[0.6, 0.4]).is_err());
    }

    #[test]
    fn fork_chain_ratios() {
        let fc = fork_chain_stationary(0.3).unwrap();
        assert!((fc.tie() - 0.21).abs() < 1e-15);
        assert!((fc.lead(2) - 0.3 * 3.0 / 7.0).abs() < 1e-15);
        assert!((fc.branch_revenue() - 0.3735).abs() < 1e-12);
        assert!(fork_chain_stationary(0.5).is_err());
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(GameInstance::all_honest(vec![0.5, 0.4]).is_err());
        assert!(GameInstance::new(vec![0.5, 0.5], vec![Strategy::RHonest]).is_err());
        let big = vec![1.0 / 17.0; 17];
        assert!(matches!(brute_force_nash(&big), Err(GameError::TooManyPools(17))));
    }
}

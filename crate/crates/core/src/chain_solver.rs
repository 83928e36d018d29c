//! Exact stationary analysis of the truncated lead-state chain.
//!
//! The chain regenerates at `(0, 0)`. Expected visits per regeneration cycle
//! solve a banded linear system; normalizing them gives the stationary
//! distribution of the truncated chain.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::BandMatrix;
use crate::model::{self, Lead, LeadState, ModelError, PowerSplit, RewardTriple};

/// Default truncation cap for both coordinates.
pub const DEFAULT_CAP: u32 = 80;
/// Default tail-mass tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest accepted balance residual `max |pi P - pi|`.
pub const RESIDUAL_BOUND: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cap {cap} is below the minimum {min}")]
    InvalidCap { cap: u32, min: u32 },
    #[error("tail tolerance {0} must lie in (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("singular system at cap {cap}: pivot {value:e} in row {row}")]
    Singular { cap: u32, row: usize, value: f64 },
    #[error("balance residual {residual:e} exceeds {bound:e} at cap {cap}")]
    Residual { cap: u32, residual: f64, bound: f64 },
    #[error("chain looks transient (tail mass {tail_mass:e} at cap {cap}); the insightful share tends to 1")]
    Transient { cap: u32, tail_mass: f64 },
    #[error("{name} has a pole at {value} (need < 1/2)")]
    Pole { name: &'static str, value: f64 },
}

/// Stationary distribution of the truncated chain.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    powers: PowerSplit,
    cap: u32,
    pi: Vec<f64>,
    /// Mass on states with a coordinate at the cap.
    pub tail_mass: f64,
    /// Tail mass stayed above tolerance at both `cap` and `2 * cap`.
    pub transient: bool,
    /// `max |pi P - pi|` of the final solve.
    pub residual: f64,
}

impl StationaryResult {
    pub fn powers(&self) -> PowerSplit {
        self.powers
    }

    /// The cap of the final solve (the requested cap or its double).
    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Probability of `state`; zero beyond the cap.
    pub fn pi(&self, state: LeadState) -> f64 {
        slot(state, self.cap).map_or(0.0, |k| self.pi[k])
    }

    pub fn pi00(&self) -> f64 {
        self.pi(LeadState::ORIGIN)
    }

    /// Reachable states within the cap with their probabilities.
    pub fn iter(&self) -> impl Iterator<Item = (LeadState, f64)> + '_ {
        model::truncated_states(self.cap)
            .into_iter()
            .map(move |s| (s, self.pi(s)))
    }

    pub fn total_mass(&self) -> f64 {
        self.pi.iter().sum()
    }
}

/// Per-step expected rewards and the relative revenues they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRewards {
    pub er: RewardTriple,
    /// `(honest, selfish, insightful)` shares.
    pub rrev: [f64; 3],
}

fn width(cap: u32) -> usize {
    cap as usize + 2
}

fn lead_slot(l: Lead, tie_first: bool) -> usize {
    match (l, tie_first) {
        (Lead::Tie, true) | (Lead::Zero, false) => 0,
        (Lead::Zero, true) | (Lead::Tie, false) => 1,
        (Lead::Ahead(k), _) => k as usize + 1,
    }
}

// y-major layout: every transition moves at most one row of width `cap + 2`
// plus one column, which keeps the system banded.
fn slot(state: LeadState, cap: u32) -> Option<usize> {
    if state.x().depth() > cap || state.y().depth() > cap {
        return None;
    }
    Some(lead_slot(state.y(), false) * width(cap) + lead_slot(state.x(), true))
}

fn on_boundary(state: LeadState, cap: u32) -> bool {
    state.x().depth() == cap || state.y().depth() == cap
}

fn solve_at(powers: &PowerSplit, cap: u32) -> Result<StationaryResult, SolverError> {
    let transitions = model::enumerate_transitions(powers, cap)?;
    let w = width(cap);
    let n = w * w;
    let band = w + 1;
    let origin = slot(LeadState::ORIGIN, cap).expect("origin within cap");

    let mut a = BandMatrix::zeros(n, band, band);
    // Columns without outgoing rows (origin, unreachable slots) stay identity.
    let mut leak = vec![1.0; n];
    let mut visits = vec![0.0; n];
    let mut idx = Vec::with_capacity(transitions.len());
    for t in &transitions {
        let from = slot(t.from, cap).expect("source within cap");
        let to = slot(t.to, cap).expect("target within cap");
        idx.push((from, to));
        if from != origin {
            leak[from] = 0.0;
        }
    }
    for (t, &(from, to)) in transitions.iter().zip(&idx) {
        if from == origin {
            if to != origin {
                visits[to] += t.prob;
            }
        } else if to == origin {
            leak[from] += t.prob;
        } else if to != from {
            a.add(to, from, -t.prob);
        }
    }
    a.factorize_m_matrix(&mut leak).map_err(|z| SolverError::Singular {
        cap,
        row: z.row,
        value: z.value,
    })?;
    a.solve_factored(&mut visits);
    visits[origin] = 1.0;
    let total: f64 = visits.iter().sum();
    let pi: Vec<f64> = visits.iter().map(|v| v / total).collect();

    let mut flow = vec![0.0; n];
    for (t, &(from, to)) in transitions.iter().zip(&idx) {
        flow[to] += pi[from] * t.prob;
    }
    let residual = flow
        .iter()
        .zip(&pi)
        .map(|(f, p)| (f - p).abs())
        .fold(0.0, f64::max);
    if !(residual <= RESIDUAL_BOUND) {
        return Err(SolverError::Residual {
            cap,
            residual,
            bound: RESIDUAL_BOUND,
        });
    }
    let tail_mass = model::truncated_states(cap)
        .into_iter()
        .filter(|s| on_boundary(*s, cap))
        .map(|s| pi[slot(s, cap).unwrap()])
        .sum();
    Ok(StationaryResult {
        powers: *powers,
        cap,
        pi,
        tail_mass,
        transient: false,
        residual,
    })
}

/// Solves `pi P = pi` on the chain truncated at `cap`.
///
/// When the tail mass exceeds `tol` the solve is repeated at `2 * cap`; if the
/// tail is still heavy there the result is flagged transient.
pub fn stationary(powers: &PowerSplit, cap: u32, tol: f64) -> Result<StationaryResult, SolverError> {
    if cap < 10 {
        return Err(SolverError::InvalidCap { cap, min: 10 });
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(SolverError::InvalidTolerance(tol));
    }
    let first = solve_at(powers, cap)?;
    if first.tail_mass <= tol {
        return Ok(first);
    }
    let mut second = solve_at(powers, cap * 2)?;
    second.transient = second.tail_mass > tol;
    Ok(second)
}

/// Expected per-step rewards `ER_i = sum_s pi_s sum_t P(s, t) r_i(s, t)`.
pub fn expected_rewards(
    stationary: &StationaryResult,
    powers: &PowerSplit,
) -> Result<ExpectedRewards, SolverError> {
    if stationary.transient {
        return Err(SolverError::Transient {
            cap: stationary.cap,
            tail_mass: stationary.tail_mass,
        });
    }
    let mut er = [0.0; 3];
    for t in model::enumerate_transitions(powers, stationary.cap)? {
        let w = stationary.pi(t.from) * t.prob;
        for (acc, r) in er.iter_mut().zip(t.reward.as_array()) {
            *acc += w * r;
        }
    }
    let total: f64 = er.iter().sum();
    Ok(ExpectedRewards {
        er: RewardTriple::new(er[0], er[1], er[2]),
        rrev: [er[0] / total, er[1] / total, er[2] / total],
    })
}

/// Relative revenues with the transient case folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueShares {
    /// `(honest, selfish, insightful)`; `(0, 0, 1)` when transient.
    pub rrev: [f64; 3],
    pub transient: bool,
    pub tail_mass: f64,
    pub cap: u32,
}

/// Stationary solve followed by [`expected_rewards`]. A transient chain
/// reports the limiting shares `(0, 0, 1)`.
pub fn revenue_shares(powers: &PowerSplit, cap: u32, tol: f64) -> Result<RevenueShares, SolverError> {
    let st = stationary(powers, cap, tol)?;
    let rrev = if st.transient {
        [0.0, 0.0, 1.0]
    } else {
        expected_rewards(&st, powers)?.rrev
    };
    Ok(RevenueShares {
        rrev,
        transient: st.transient,
        tail_mass: st.tail_mass,
        cap: st.cap,
    })
}

/// Closed-form lower bound `ER_SM / pi_00` of the selfish pool's reward.
pub fn h1(alpha: f64, beta: f64) -> Result<f64, SolverError> {
    if !(alpha < 0.5) {
        return Err(SolverError::Pole {
            name: "h1",
            value: alpha,
        });
    }
    let a = alpha;
    let b = beta;
    Ok(a * (1.0 - a + b) * (1.0 + 3.0 * a - b) / 2.0
        + a * a * (1.0 - a - b)
        + 2.0 * a * a
        + a.powi(3) / (1.0 - 2.0 * a))
}

/// Closed-form lower bound `ER*_IM / pi_00` of the insightful pool's reward.
pub fn h2(alpha: f64, beta: f64) -> Result<f64, SolverError> {
    if !(beta < 0.5) {
        return Err(SolverError::Pole {
            name: "h2",
            value: beta,
        });
    }
    let a = alpha;
    let b = beta;
    Ok(a * b * (1.0 - a - b)
        + a * b * (1.0 - a + 3.0 * b)
        + b * (1.0 - a - b) * (1.0 + 3.0 * b) / 2.0
        + 2.0 * b * b
        + b.powi(3) / (1.0 - 2.0 * b))
}

/// One grid point of a dominance comparison at `alpha = beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceRow {
    pub alpha: f64,
    pub rrev_sm: f64,
    pub rrev_im: f64,
    /// `rrev_im - rrev_sm`.
    pub gap: f64,
    pub transient: bool,
    pub tail_mass: f64,
}

/// [`dominance_report_with`] at the default cap and tolerance.
pub fn dominance_report(alpha_grid: &[f64]) -> Result<Vec<DominanceRow>, SolverError> {
    dominance_report_with(alpha_grid, DEFAULT_CAP, DEFAULT_TOL)
}

/// Compares the selfish and insightful shares along `alpha = beta`.
pub fn dominance_report_with(
    alpha_grid: &[f64],
    cap: u32,
    tol: f64,
) -> Result<Vec<DominanceRow>, SolverError> {
    alpha_grid
        .par_iter()
        .map(|&alpha| {
            let powers = PowerSplit::new(alpha, alpha)?;
            powers.check_dominance_domain()?;
            let shares = revenue_shares(&powers, cap, tol)?;
            Ok(DominanceRow {
                alpha,
                rrev_sm: shares.rrev[1],
                rrev_im: shares.rrev[2],
                gap: shares.rrev[2] - shares.rrev[1],
                transient: shares.transient,
                tail_mass: shares.tail_mass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> PowerSplit {
        PowerSplit::new(a, b).unwrap()
    }

    #[test]
    fn closed_forms_at_point_three() {
        assert!((h1(0.3, 0.3).unwrap() - 0.5235).abs() < 1e-12);
        assert!((h2(0.3, 0.3).unwrap() - 0.5415).abs() < 1e-12);
        assert!(h1(0.5, 0.1).is_err());
        assert!(h2(0.1, 0.5).is_err());
    }

    #[test]
    fn slots_are_unique() {
        let cap = 12;
        let mut seen = std::collections::HashSet::new();
        for s in model::truncated_states(cap) {
            assert!(seen.insert(slot(s, cap).unwrap()));
        }
    }

    #[test]
    fn origin_ratios() {
        let powers = p(0.3, 0.3);
        let st = stationary(&powers, 80, DEFAULT_TOL).unwrap();
        assert!(!st.transient);
        assert!((st.total_mass() - 1.0).abs() < 1e-12);
        let r = |x, y| st.pi(LeadState::at(x, y).unwrap()) / st.pi00();
        assert!((r(1, 0) - 0.3).abs() < 1e-10);
        let s10p = LeadState::new(Lead::Ahead(1), Lead::Tie).unwrap();
        assert!((st.pi(s10p) / st.pi00() - 0.18).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_arguments() {
        let powers = p(0.3, 0.3);
        assert!(matches!(stationary(&powers, 5, 1e-9), Err(SolverError::InvalidCap { .. })));
        assert!(matches!(stationary(&powers, 20, 0.0), Err(SolverError::InvalidTolerance(_))));
        assert!(matches!(stationary(&powers, 20, 0.1), Err(SolverError::InvalidTolerance(_))));
    }
}

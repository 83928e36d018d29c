//! Lead states and the transition/reward table of the three-pool process.
//!
//! A state `(x, y)` records the selfish pool's hidden lead over the honest
//! pool (`x`) and the insightful pool's hidden lead over the selfish pool
//! (`y`). The value `0'` on either coordinate marks a tie between two public
//! branches of equal length that the next block decides.
//!
//! Rewards are expected block counts per transition, as `(honest, selfish,
//! insightful)`. Every block of a winning branch is credited exactly once.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid power split: alpha={alpha}, beta={beta} (need alpha, beta >= 0 and alpha + beta < 1)")]
    InvalidPowers { alpha: f64, beta: f64 },
    #[error("power split alpha={alpha}, beta={beta} is outside the dominance domain (both below 1/2)")]
    OutsideDominanceDomain { alpha: f64, beta: f64 },
    #[error("truncation cap {cap} is too small (minimum {min})")]
    InvalidTruncation { cap: u32, min: u32 },
    #[error("state {0} is not reachable")]
    Unreachable(LeadState),
    #[error("uniform draw {0} is outside [0, 1)")]
    InvalidDraw(f64),
}

/// Hashing-power fractions of the selfish (`alpha`) and insightful (`beta`)
/// pools. The honest pool holds the remainder, which must stay positive.
///
/// Zero powers are accepted so degenerate single-pool worlds can be run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    alpha: f64,
    beta: f64,
}

impl PowerSplit {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        let ok = alpha.is_finite()
            && beta.is_finite()
            && alpha >= 0.0
            && beta >= 0.0
            && alpha + beta < 1.0;
        if ok {
            Ok(Self { alpha, beta })
        } else {
            Err(ModelError::InvalidPowers { alpha, beta })
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn honest(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }

    /// Checks `alpha < 1/2` and `beta < 1/2`, the hypothesis of the dominance
    /// result.
    pub fn check_dominance_domain(&self) -> Result<(), ModelError> {
        if self.alpha < 0.5 && self.beta < 0.5 {
            Ok(())
        } else {
            Err(ModelError::OutsideDominanceDomain {
                alpha: self.alpha,
                beta: self.beta,
            })
        }
    }
}

/// One coordinate of a [`LeadState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lead {
    /// `0`: no hidden blocks, the two parties agree.
    Zero,
    /// `0'`: two public branches of equal length.
    Tie,
    /// `k >= 1` hidden blocks.
    Ahead(u32),
}

impl Lead {
    /// Builds `Ahead(k)`, mapping `k = 0` to [`Lead::Zero`].
    pub fn ahead(k: u32) -> Self {
        if k == 0 {
            Lead::Zero
        } else {
            Lead::Ahead(k)
        }
    }

    /// Number of hidden blocks (`0` and `0'` both count as zero).
    pub fn depth(self) -> u32 {
        match self {
            Lead::Ahead(k) => k,
            _ => 0,
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lead::Zero => write!(f, "0"),
            Lead::Tie => write!(f, "0'"),
            Lead::Ahead(k) => write!(f, "{k}"),
        }
    }
}

/// The pair `(x, y)`; only states the transition table can produce are
/// constructible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeadState {
    x: Lead,
    y: Lead,
}

impl LeadState {
    /// The consensus state `(0, 0)`.
    pub const ORIGIN: LeadState = LeadState {
        x: Lead::Zero,
        y: Lead::Zero,
    };

    pub fn new(x: Lead, y: Lead) -> Result<Self, ModelError> {
        let state = LeadState { x, y };
        if is_reachable(x, y) {
            Ok(state)
        } else {
            Err(ModelError::Unreachable(state))
        }
    }

    /// Shorthand for integer coordinates, both interpreted via [`Lead::ahead`].
    pub fn at(x: u32, y: u32) -> Result<Self, ModelError> {
        Self::new(Lead::ahead(x), Lead::ahead(y))
    }

    pub fn x(&self) -> Lead {
        self.x
    }

    pub fn y(&self) -> Lead {
        self.y
    }

    // Table rows only ever produce reachable states.
    fn raw(x: Lead, y: Lead) -> Self {
        debug_assert!(is_reachable(x, y), "({x}, {y})");
        LeadState { x, y }
    }
}

impl fmt::Display for LeadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn is_reachable(x: Lead, y: Lead) -> bool {
    use Lead::*;
    match y {
        Zero => !matches!(x, Ahead(0)),
        Tie => matches!(x, Zero | Ahead(1)),
        Ahead(1) => x == Zero,
        Ahead(k) if k >= 2 => !matches!(x, Ahead(0)),
        Ahead(_) => false,
    }
}

/// Expected block rewards `(honest, selfish, insightful)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardTriple {
    pub honest: f64,
    pub selfish: f64,
    pub insightful: f64,
}

impl RewardTriple {
    pub const ZERO: RewardTriple = RewardTriple {
        honest: 0.0,
        selfish: 0.0,
        insightful: 0.0,
    };

    pub fn new(honest: f64, selfish: f64, insightful: f64) -> Self {
        Self {
            honest,
            selfish,
            insightful,
        }
    }

    pub fn total(&self) -> f64 {
        self.honest + self.selfish + self.insightful
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.honest, self.selfish, self.insightful]
    }
}

/// Symbolic transition probability, one of `alpha`, `beta`, `1 - alpha`,
/// `1 - beta`, `1 - alpha - beta` or `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Alpha,
    Beta,
    NotAlpha,
    NotBeta,
    Honest,
    One,
}

impl Weight {
    pub fn eval(self, powers: &PowerSplit) -> f64 {
        let (a, b) = (powers.alpha, powers.beta);
        match self {
            Weight::Alpha => a,
            Weight::Beta => b,
            Weight::NotAlpha => 1.0 - a,
            Weight::NotBeta => 1.0 - b,
            Weight::Honest => 1.0 - a - b,
            Weight::One => 1.0,
        }
    }

    /// Integer coefficients `(c0, ca, cb)` with `p = c0 + ca*alpha + cb*beta`.
    pub fn coefficients(self) -> (i32, i32, i32) {
        match self {
            Weight::Alpha => (0, 1, 0),
            Weight::Beta => (0, 0, 1),
            Weight::NotAlpha => (1, -1, 0),
            Weight::NotBeta => (1, 0, -1),
            Weight::Honest => (1, -1, -1),
            Weight::One => (1, 0, 0),
        }
    }
}

/// One row of the transition table instantiated at a source state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Table row number, 1 to 24.
    pub row: u8,
    pub from: LeadState,
    pub to: LeadState,
    pub weight: Weight,
    pub prob: f64,
    pub reward: RewardTriple,
}

/// Row template before instantiation: destination, probability, reward.
#[derive(Debug, Clone, Copy)]
struct Row {
    row: u8,
    to: LeadState,
    weight: Weight,
}

// Rows that add a hidden block. They are placed after the other rows of a
// state when partitioning a uniform draw, so that `u < p` selects the release
// or tie outcome of weight `p` first.
fn extends_private_lead(row: u8) -> bool {
    matches!(row, 2 | 7 | 10 | 14 | 16)
}

/// Untruncated outgoing rows of `state`, in sampling order.
fn rows_from(state: LeadState) -> Vec<Row> {
    use Lead::*;
    let s = LeadState::raw;
    let mut rows = Vec::with_capacity(3);
    let mut push = |row: u8, to: LeadState, weight: Weight| rows.push(Row { row, to, weight });
    match (state.x, state.y) {
        (Zero, Zero) => {
            push(1, s(Zero, Zero), Weight::Honest);
            push(2, s(Ahead(1), Zero), Weight::Alpha);
            push(10, s(Zero, Ahead(1)), Weight::Beta);
        }
        (Ahead(1), Zero) => {
            push(3, s(Tie, Zero), Weight::Honest);
            push(5, s(Ahead(1), Tie), Weight::Beta);
            push(7, s(Ahead(2), Zero), Weight::Alpha);
        }
        (Tie, Zero) => push(4, LeadState::ORIGIN, Weight::One),
        (Ahead(1), Tie) => push(6, LeadState::ORIGIN, Weight::One),
        (Ahead(2), Zero) => {
            push(8, LeadState::ORIGIN, Weight::NotAlpha);
            push(7, s(Ahead(3), Zero), Weight::Alpha);
        }
        (Ahead(k), Zero) => {
            push(9, s(Ahead(k - 1), Zero), Weight::NotAlpha);
            push(7, s(Ahead(k + 1), Zero), Weight::Alpha);
        }
        (Zero, Ahead(1)) => {
            push(11, s(Ahead(1), Tie), Weight::Alpha);
            push(12, s(Zero, Tie), Weight::Honest);
            push(14, s(Zero, Ahead(2)), Weight::Beta);
        }
        (Zero, Tie) => push(13, LeadState::ORIGIN, Weight::One),
        (Zero, Ahead(2)) => {
            push(15, LeadState::ORIGIN, Weight::NotBeta);
            push(16, s(Zero, Ahead(3)), Weight::Beta);
        }
        (Zero, Ahead(y)) => {
            push(17, s(Zero, Ahead(y - 1)), Weight::Honest);
            push(18, s(Ahead(1), Ahead(y - 1)), Weight::Alpha);
            push(16, s(Zero, Ahead(y + 1)), Weight::Beta);
        }
        (Ahead(k), Ahead(y)) if y >= 2 => {
            let honest_to = match k {
                1 => (19, s(Tie, Ahead(y))),
                2 => (20, s(Zero, Ahead(y))),
                _ => (21, s(Ahead(k - 1), Ahead(y))),
            };
            push(honest_to.0, honest_to.1, Weight::Honest);
            if y == 2 {
                push(22, LeadState::ORIGIN, Weight::Alpha);
            } else {
                push(18, s(Ahead(k + 1), Ahead(y - 1)), Weight::Alpha);
            }
            push(16, s(Ahead(k), Ahead(y + 1)), Weight::Beta);
        }
        (Tie, Ahead(2)) => {
            push(23, LeadState::ORIGIN, Weight::NotBeta);
            push(16, s(Tie, Ahead(3)), Weight::Beta);
        }
        (Tie, Ahead(y)) if y >= 3 => {
            push(24, s(Zero, Ahead(y - 1)), Weight::NotBeta);
            push(16, s(Tie, Ahead(y + 1)), Weight::Beta);
        }
        _ => {}
    }
    debug_assert!(rows
        .windows(2)
        .all(|w| extends_private_lead(w[0].row) <= extends_private_lead(w[1].row)));
    rows
}

/// Expected reward of a row at the given powers.
fn row_reward(row: u8, powers: &PowerSplit) -> RewardTriple {
    let (a, b) = (powers.alpha, powers.beta);
    match row {
        1 => RewardTriple::new(1.0, 0.0, 0.0),
        4 => RewardTriple::new(
            (3.0 - 3.0 * a - b) / 2.0,
            (1.0 + 3.0 * a - b) / 2.0,
            b,
        ),
        6 => RewardTriple::new(
            1.0 - a - b,
            (1.0 + 3.0 * a - b) / 2.0,
            (1.0 - a + 3.0 * b) / 2.0,
        ),
        8 => RewardTriple::new(0.0, 2.0, 0.0),
        9 => RewardTriple::new(0.0, 1.0, 0.0),
        13 => RewardTriple::new((3.0 - 2.0 * a - 3.0 * b) / 2.0, a, (1.0 + 3.0 * b) / 2.0),
        15 | 22 | 23 => RewardTriple::new(0.0, 0.0, 2.0),
        17 | 18 | 24 => RewardTriple::new(0.0, 0.0, 1.0),
        _ => RewardTriple::ZERO,
    }
}

/// Realized outcomes of the three tie-breaking rows, as `(weight, credit)`
/// where the weights partition the row and `credit` counts blocks per pool.
/// Their weighted mean is the row's expected reward.
fn tie_outcomes(row: u8, powers: &PowerSplit) -> Option<Vec<(f64, [u32; 3])>> {
    let (a, b) = (powers.alpha, powers.beta);
    let h = 1.0 - a - b;
    let outcomes = match row {
        // honest vs selfish; the insightful pool mines on the honest branch
        4 => vec![
            (h / 2.0, [2, 0, 0]),
            (b, [1, 0, 1]),
            (h / 2.0, [1, 1, 0]),
            (a, [0, 2, 0]),
        ],
        // selfish vs insightful; honest splits uniformly
        6 => vec![
            (h / 2.0, [1, 1, 0]),
            (a, [0, 2, 0]),
            (h / 2.0, [1, 0, 1]),
            (b, [0, 0, 2]),
        ],
        // honest vs insightful; honest and selfish split uniformly
        13 => vec![
            (h / 2.0, [2, 0, 0]),
            (a / 2.0, [1, 1, 0]),
            (h / 2.0, [1, 0, 1]),
            (a / 2.0, [0, 1, 1]),
            (b, [0, 0, 2]),
        ],
        _ => return None,
    };
    Some(outcomes)
}

fn deterministic_credit(row: u8) -> [u32; 3] {
    match row {
        1 => [1, 0, 0],
        8 => [0, 2, 0],
        9 => [0, 1, 0],
        15 | 22 | 23 => [0, 0, 2],
        17 | 18 | 24 => [0, 0, 1],
        _ => [0, 0, 0],
    }
}

/// Outgoing transitions of a single state on the untruncated chain, in
/// sampling order.
pub fn outgoing(state: LeadState, powers: &PowerSplit) -> Vec<Transition> {
    rows_from(state)
        .into_iter()
        .map(|r| Transition {
            row: r.row,
            from: state,
            to: r.to,
            weight: r.weight,
            prob: r.weight.eval(powers),
            reward: row_reward(r.row, powers),
        })
        .collect()
}

/// All reachable states with both lead depths at most `cap`.
pub fn truncated_states(cap: u32) -> Vec<LeadState> {
    let mut states = Vec::new();
    let xs: Vec<Lead> = [Lead::Zero, Lead::Tie]
        .into_iter()
        .chain((1..=cap).map(Lead::Ahead))
        .collect();
    for &y in &xs {
        for &x in &xs {
            if is_reachable(x, y) {
                states.push(LeadState { x, y });
            }
        }
    }
    states
}

fn exceeds(state: LeadState, cap: u32) -> bool {
    state.x.depth() > cap || state.y.depth() > cap
}

fn clamp_lead(l: Lead, cap: u32) -> Lead {
    match l {
        Lead::Ahead(k) if k > cap => Lead::Ahead(cap),
        other => other,
    }
}

/// Every table transition whose source has both coordinates at most `cap`.
///
/// A coordinate that would be pushed past the cap is held at the cap; the
/// other coordinate moves as usual and the reward is kept. For every row but
/// one this is a self-loop. The exception is the selfish pool mining while
/// the insightful pool leads by three or more, which still shortens the
/// insightful lead at `x = cap`.
pub fn enumerate_transitions(powers: &PowerSplit, cap: u32) -> Result<Vec<Transition>, ModelError> {
    if cap < 3 {
        return Err(ModelError::InvalidTruncation { cap, min: 3 });
    }
    let mut out = Vec::new();
    for state in truncated_states(cap) {
        for mut t in outgoing(state, powers) {
            if exceeds(t.to, cap) {
                t.to = LeadState::raw(clamp_lead(t.to.x, cap), clamp_lead(t.to.y, cap));
            }
            out.push(t);
        }
    }
    Ok(out)
}

/// A sampled step: the table row taken, the successor and the realized
/// per-pool block credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub row: u8,
    pub to: LeadState,
    pub credit: [u32; 3],
}

/// Samples one step of the untruncated chain from a uniform draw `u`.
///
/// The draw selects a row by partitioning `[0, 1)` in sampling order. For the
/// three tie-breaking rows the rescaled remainder of the draw picks which
/// branch wins, so the credit is always a whole number of blocks whose mean
/// equals the row's expected reward.
pub fn sample_transition(state: LeadState, powers: &PowerSplit, u: f64) -> Result<Step, ModelError> {
    if !(0.0..1.0).contains(&u) {
        return Err(ModelError::InvalidDraw(u));
    }
    let rows = rows_from(state);
    if rows.is_empty() {
        return Err(ModelError::Unreachable(state));
    }
    let mut acc = 0.0;
    let mut chosen = (rows[rows.len() - 1], 0.0, 1.0);
    for r in &rows {
        let p = r.weight.eval(powers);
        if u < acc + p {
            chosen = (*r, acc, p);
            break;
        }
        acc += p;
    }
    let (row, start, width) = chosen;
    let credit = match tie_outcomes(row.row, powers) {
        Some(outcomes) => {
            let v = if width > 0.0 { (u - start) / width } else { 0.0 };
            let mut acc = 0.0;
            let mut credit = outcomes[outcomes.len() - 1].1;
            for (w, c) in outcomes {
                acc += w;
                if v < acc {
                    credit = c;
                    break;
                }
            }
            credit
        }
        None => deterministic_credit(row.row),
    };
    Ok(Step {
        row: row.row,
        to: row.to,
        credit,
    })
}

/// Samples a successor and its (realized) reward.
pub fn sample_step(
    state: LeadState,
    powers: &PowerSplit,
    u: f64,
) -> Result<(LeadState, RewardTriple), ModelError> {
    let step = sample_transition(state, powers, u)?;
    let [h, s, i] = step.credit;
    Ok((step.to, RewardTriple::new(h as f64, s as f64, i as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> PowerSplit {
        PowerSplit::new(a, b).unwrap()
    }

    #[test]
    fn rejects_bad_powers() {
        assert!(PowerSplit::new(0.6, 0.4).is_err());
        assert!(PowerSplit::new(-0.1, 0.2).is_err());
        assert!(PowerSplit::new(f64::NAN, 0.2).is_err());
        assert!(p(0.5, 0.2).check_dominance_domain().is_err());
        assert!(p(0.3, 0.3).check_dominance_domain().is_ok());
    }

    #[test]
    fn reachability() {
        use Lead::*;
        assert!(LeadState::new(Tie, Zero).is_ok());
        assert!(LeadState::new(Ahead(1), Tie).is_ok());
        assert!(LeadState::new(Zero, Tie).is_ok());
        assert!(LeadState::new(Tie, Ahead(2)).is_ok());
        assert!(LeadState::new(Tie, Tie).is_err());
        assert!(LeadState::new(Ahead(2), Tie).is_err());
        assert!(LeadState::new(Ahead(1), Ahead(1)).is_err());
        assert!(LeadState::new(Tie, Ahead(1)).is_err());
        assert!(LeadState::new(Ahead(0), Zero).is_err());
    }

    #[test]
    fn origin_rows() {
        let t = outgoing(LeadState::ORIGIN, &p(0.3, 0.3));
        let got: Vec<_> = t.iter().map(|t| (t.row, t.to, t.prob)).collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].0, 1);
        assert_eq!(got[0].1, LeadState::ORIGIN);
        assert!((got[0].2 - 0.4).abs() < 1e-15);
        assert_eq!(t[0].reward, RewardTriple::new(1.0, 0.0, 0.0));
        assert_eq!((got[1].0, got[1].1), (2, LeadState::at(1, 0).unwrap()));
        assert_eq!((got[2].0, got[2].1), (10, LeadState::at(0, 1).unwrap()));
        assert!((got[1].2 - 0.3).abs() < 1e-15 && (got[2].2 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tie_row_reward() {
        let (a, b) = (0.3, 0.3);
        let s = LeadState::new(Lead::Tie, Lead::Zero).unwrap();
        let t = outgoing(s, &p(a, b));
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].to, LeadState::ORIGIN);
        assert_eq!(t[0].prob, 1.0);
        let r = t[0].reward;
        assert!((r.honest - (3.0 - 3.0 * a - b) / 2.0).abs() < 1e-15);
        assert!((r.selfish - (1.0 + 3.0 * a - b) / 2.0).abs() < 1e-15);
        assert!((r.insightful - b).abs() < 1e-15);
    }

    #[test]
    fn tie_outcomes_average_to_row_reward() {
        for &(a, b) in &[(0.3, 0.3), (0.1, 0.4), (0.45, 0.05)] {
            let powers = p(a, b);
            for row in [4u8, 6, 13] {
                let outcomes = tie_outcomes(row, &powers).unwrap();
                let total: f64 = outcomes.iter().map(|o| o.0).sum();
                assert!((total - 1.0).abs() < 1e-12);
                let mut mean = [0.0; 3];
                for (w, c) in &outcomes {
                    for k in 0..3 {
                        mean[k] += w * c[k] as f64;
                    }
                }
                let expected = row_reward(row, &powers).as_array();
                for k in 0..3 {
                    assert!((mean[k] - expected[k]).abs() < 1e-12, "row {row}");
                }
            }
        }
    }

    #[test]
    fn sample_step_examples() {
        let powers = p(0.3, 0.3);
        let (to, r) = sample_step(LeadState::at(2, 0).unwrap(), &powers, 0.69).unwrap();
        assert_eq!(to, LeadState::ORIGIN);
        assert_eq!(r, RewardTriple::new(0.0, 2.0, 0.0));
        let (to, r) = sample_step(LeadState::at(0, 2).unwrap(), &powers, 0.0).unwrap();
        assert_eq!(to, LeadState::ORIGIN);
        assert_eq!(r, RewardTriple::new(0.0, 0.0, 2.0));
        let (to, r) = sample_step(LeadState::ORIGIN, &powers, 0.39).unwrap();
        assert_eq!(to, LeadState::ORIGIN);
        assert_eq!(r, RewardTriple::new(1.0, 0.0, 0.0));
        let (to, _) = sample_step(LeadState::at(2, 0).unwrap(), &powers, 0.71).unwrap();
        assert_eq!(to, LeadState::at(3, 0).unwrap());
    }

    #[test]
    fn sample_step_rejects_bad_input() {
        let powers = p(0.3, 0.3);
        assert!(matches!(
            sample_step(LeadState::ORIGIN, &powers, 1.0),
            Err(ModelError::InvalidDraw(_))
        ));
        let bogus = LeadState {
            x: Lead::Tie,
            y: Lead::Tie,
        };
        assert!(matches!(
            sample_step(bogus, &powers, 0.5),
            Err(ModelError::Unreachable(_))
        ));
    }

    #[test]
    fn truncation_clamps_at_cap() {
        let powers = p(0.3, 0.3);
        let cap = 5;
        let ts = enumerate_transitions(&powers, cap).unwrap();
        let top = LeadState::at(5, 0).unwrap();
        let ext = ts.iter().find(|t| t.from == top && t.row == 7).unwrap();
        assert_eq!(ext.to, top);
        let corner = LeadState::at(5, 4).unwrap();
        let down = ts.iter().find(|t| t.from == corner && t.row == 18).unwrap();
        assert_eq!(down.to, LeadState::at(5, 3).unwrap());
        assert_eq!(down.reward, RewardTriple::new(0.0, 0.0, 1.0));
        let up = ts.iter().find(|t| t.from == corner && t.row == 16).unwrap();
        assert_eq!(up.to, LeadState::at(5, 5).unwrap());
        let roof = ts
            .iter()
            .find(|t| t.from == LeadState::at(5, 5).unwrap() && t.row == 16)
            .unwrap();
        assert_eq!(roof.to, roof.from);
        assert!(ts.iter().all(|t| !exceeds(t.to, cap)));
        assert!(matches!(
            enumerate_transitions(&powers, 2),
            Err(ModelError::InvalidTruncation { .. })
        ));
    }
}

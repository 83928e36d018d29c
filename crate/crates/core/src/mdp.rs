//! Optimal insightful mining as an average-reward-ratio MDP.
//!
//! States are `(l_h, l_s, l_i, fork)`: the honest, selfish and insightful
//! branch lengths since the insightful pool's fork point and a label for the
//! last event. `l_s = -1` marks the selfish pool mining on the honest
//! branch. Rewards come in pairs `(others, insightful)`.
//!
//! The objective `E[r_i] / E[r_i + r_other]` is maximized by bisection on
//! `rho`: the optimal average of `(1 - rho) r_i - rho r_other` is positive
//! exactly when `rho` is below the optimum.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::PowerSplit;
use crate::rng;

/// Default branch-length cap.
pub const DEFAULT_MAX_LEN: u16 = 20;
/// Value-iteration sweep limit per solve.
pub const MAX_ITERATIONS: usize = 200_000;
/// Self-loop weight of the aperiodicity transform.
const TAU: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("max_len {0} is too small (minimum 3)")]
    InvalidTruncation(u16),
    #[error("tolerance {0} must lie in (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("epsilon {0} must be positive")]
    InvalidEpsilon(f64),
    #[error("value iteration did not converge in {iterations} sweeps (span {span:e})")]
    NoConvergence { iterations: usize, span: f64 },
    #[error("bisection failed to bracket: optimal average reward {gain:e} at rho = {rho}")]
    Bracket { rho: f64, gain: f64 },
    #[error("policy has no action for state {0}")]
    MissingState(MdpState),
    #[error("action {action} is infeasible in state {state}")]
    Infeasible { state: MdpState, action: MdpAction },
    #[error("policy was built for max_len {policy}, MDP has {mdp}")]
    MaxLenMismatch { policy: u16, mdp: u16 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("steps must be at least 1")]
    NoSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fork {
    Irrelevant,
    Relevant,
    Active,
}

impl fmt::Display for Fork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fork::Irrelevant => "irrelevant",
            Fork::Relevant => "relevant",
            Fork::Active => "active",
        })
    }
}

impl FromStr for Fork {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "irrelevant" => Ok(Fork::Irrelevant),
            "relevant" => Ok(Fork::Relevant),
            "active" => Ok(Fork::Active),
            other => Err(format!("unknown fork label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MdpAction {
    Adopt,
    OverrideSelfish,
    Wait,
    Match,
}

impl MdpAction {
    /// Tie-breaking order.
    pub const ALL: [MdpAction; 4] = [
        MdpAction::Adopt,
        MdpAction::OverrideSelfish,
        MdpAction::Wait,
        MdpAction::Match,
    ];
}

impl fmt::Display for MdpAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MdpAction::Adopt => "adopt",
            MdpAction::OverrideSelfish => "override",
            MdpAction::Wait => "wait",
            MdpAction::Match => "match",
        })
    }
}

impl FromStr for MdpAction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adopt" => Ok(MdpAction::Adopt),
            "override" => Ok(MdpAction::OverrideSelfish),
            "wait" => Ok(MdpAction::Wait),
            "match" => Ok(MdpAction::Match),
            other => Err(format!("unknown action `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MdpState {
    pub l_h: u16,
    /// `-1` while the selfish pool mines on the honest branch.
    pub l_s: i16,
    pub l_i: u16,
    pub fork: Fork,
}

impl MdpState {
    /// Consensus with the selfish pool merged into the honest branch.
    pub const INITIAL: MdpState = MdpState {
        l_h: 0,
        l_s: -1,
        l_i: 0,
        fork: Fork::Irrelevant,
    };

    pub fn new(l_h: u16, l_s: i16, l_i: u16, fork: Fork) -> Self {
        Self { l_h, l_s, l_i, fork }
    }

    /// `l_s*`: the selfish length with the merged case read as `l_h`.
    pub fn l_s_star(&self) -> i32 {
        if self.l_s == -1 {
            self.l_h as i32
        } else {
            self.l_s as i32
        }
    }

    fn at_boundary(&self, max_len: u16) -> bool {
        self.l_h >= max_len || self.l_s >= max_len as i16 || self.l_i >= max_len
    }

    fn same_lengths(&self, other: &MdpState) -> bool {
        (self.l_h, self.l_s, self.l_i) == (other.l_h, other.l_s, other.l_i)
    }
}

impl fmt::Display for MdpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.l_h, self.l_s, self.l_i, self.fork)
    }
}

/// `(others, insightful)` block rewards.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MdpReward {
    pub r_other: f64,
    pub r_i: f64,
}

impl MdpReward {
    fn new(r_other: f64, r_i: f64) -> Self {
        Self { r_other, r_i }
    }

    fn is_zero(&self) -> bool {
        self.r_other == 0.0 && self.r_i == 0.0
    }
}

/// Symbolic transition probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prob {
    One,
    Alpha,
    Beta,
    Honest,
    HalfHonest,
}

impl Prob {
    pub fn eval(self, powers: &PowerSplit) -> f64 {
        let h = powers.honest();
        match self {
            Prob::One => 1.0,
            Prob::Alpha => powers.alpha(),
            Prob::Beta => powers.beta(),
            Prob::Honest => h,
            Prob::HalfHonest => h / 2.0,
        }
    }

    /// Doubled integer coefficients `(c0, ca, cb)` with
    /// `2p = c0 + ca*alpha + cb*beta`.
    pub fn doubled_coefficients(self) -> (i32, i32, i32) {
        match self {
            Prob::One => (2, 0, 0),
            Prob::Alpha => (0, 2, 0),
            Prob::Beta => (0, 0, 2),
            Prob::Honest => (2, -2, -2),
            Prob::HalfHonest => (1, -1, -1),
        }
    }
}

/// One outcome of taking an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub to: MdpState,
    pub prob: Prob,
    pub reward: MdpReward,
}

fn state(l_h: i32, l_s: i32, l_i: i32, fork: Fork) -> MdpState {
    debug_assert!(l_h >= 0 && l_s >= -1 && l_i >= 0, "({l_h}, {l_s}, {l_i})");
    MdpState::new(l_h as u16, l_s as i16, l_i as u16, fork)
}

fn adopt(s: MdpState, max_len: u16) -> Option<Vec<Outcome>> {
    let (l_h, l_s, l_i) = (s.l_h as i32, s.l_s as i32, s.l_i as i32);
    let l_s_star = s.l_s_star();
    let to_honest = (
        state(0, l_s_star - l_h, 0, Fork::Irrelevant),
        MdpReward::new(l_h as f64, 0.0),
    );
    let (to, reward) = if l_i < l_h {
        to_honest
    } else if l_s == l_i + 1 && l_s >= 2 {
        (state(0, 0, 0, Fork::Irrelevant), MdpReward::new(l_s as f64, 0.0))
    } else if l_s >= l_i + 2 {
        (
            state(0, l_s - l_i, 0, Fork::Irrelevant),
            MdpReward::new(l_i as f64, 0.0),
        )
    } else {
        to_honest
    };
    let (to, reward) = if to.same_lengths(&s) && reward.is_zero() {
        if !s.at_boundary(max_len) {
            return None;
        }
        // Forced out of a full state: give up to the selfish branch.
        (
            state(0, 0, 0, Fork::Irrelevant),
            MdpReward::new(l_s.max(0) as f64, 0.0),
        )
    } else {
        (to, reward)
    };
    Some(vec![Outcome {
        to,
        prob: Prob::One,
        reward,
    }])
}

fn override_selfish(s: MdpState) -> Option<Vec<Outcome>> {
    let l_s_star = s.l_s_star();
    let l_i = s.l_i as i32;
    if l_i <= l_s_star {
        return None;
    }
    Some(vec![Outcome {
        to: state(0, 0, l_i - l_s_star - 1, Fork::Irrelevant),
        prob: Prob::One,
        reward: MdpReward::new(0.0, (l_s_star + 1) as f64),
    }])
}

fn mine(s: MdpState, matching: bool) -> Vec<Outcome> {
    let (l_h, l_s, l_i) = (s.l_h as i32, s.l_s as i32, s.l_i as i32);
    let zero = MdpReward::default();
    let mut out = Vec::with_capacity(4);
    let selfish = if l_s == -1 {
        state(l_h + 1, l_h + 1, l_i, Fork::Relevant)
    } else {
        state(l_h, l_s + 1, l_i, Fork::Relevant)
    };
    out.push(Outcome {
        to: selfish,
        prob: Prob::Alpha,
        reward: zero,
    });
    let fork = if s.fork == Fork::Active {
        Fork::Active
    } else {
        Fork::Irrelevant
    };
    out.push(Outcome {
        to: state(l_h, l_s, l_i + 1, fork),
        prob: Prob::Beta,
        reward: zero,
    });
    if s.l_s_star() <= l_h {
        let extend = state(l_h + 1, l_h + 1, l_i, Fork::Relevant);
        if matching {
            out.push(Outcome {
                to: state(1, 1, l_i - l_h, Fork::Relevant),
                prob: Prob::HalfHonest,
                reward: MdpReward::new(0.0, l_h as f64),
            });
            out.push(Outcome {
                to: extend,
                prob: Prob::HalfHonest,
                reward: zero,
            });
        } else {
            out.push(Outcome {
                to: extend,
                prob: Prob::Honest,
                reward: zero,
            });
        }
    } else {
        let to = if l_s == l_h + 2 {
            state(l_s, l_s, l_i, Fork::Relevant)
        } else if l_s == l_h + 1 {
            state(l_h + 1, -1, l_i, Fork::Relevant)
        } else {
            state(l_h + 1, l_s, l_i, Fork::Relevant)
        };
        out.push(Outcome {
            to,
            prob: Prob::Honest,
            reward: zero,
        });
    }
    out
}

/// Outcomes of `action` in `s`, or `None` when it is infeasible.
///
/// Wait and Match are unavailable once any branch reaches `max_len`; Adopt
/// is unavailable when it would change nothing.
pub fn outcomes(s: MdpState, action: MdpAction, max_len: u16) -> Option<Vec<Outcome>> {
    match action {
        MdpAction::Adopt => adopt(s, max_len),
        MdpAction::OverrideSelfish => override_selfish(s),
        MdpAction::Wait => (!s.at_boundary(max_len)).then(|| mine(s, false)),
        MdpAction::Match => {
            let ok = !s.at_boundary(max_len) && s.fork != Fork::Irrelevant && s.l_i >= s.l_h;
            ok.then(|| mine(s, true))
        }
    }
}

/// A state-action pair with its expected rewards and a slice of
/// transitions.
#[derive(Debug, Clone, Copy)]
struct Choice {
    action: MdpAction,
    start: u32,
    end: u32,
    r_other: f64,
    r_i: f64,
}

/// Explicit MDP over the states reachable from [`MdpState::INITIAL`].
#[derive(Debug, Clone)]
pub struct Mdp {
    powers: PowerSplit,
    max_len: u16,
    states: Vec<MdpState>,
    index: HashMap<MdpState, usize>,
    /// `choices[choice_start[s]..choice_start[s + 1]]` belong to state `s`.
    choice_start: Vec<u32>,
    choices: Vec<Choice>,
    targets: Vec<u32>,
    probs: Vec<f64>,
    initial: usize,
}

impl Mdp {
    pub fn powers(&self) -> PowerSplit {
        self.powers
    }

    pub fn max_len(&self) -> u16 {
        self.max_len
    }

    pub fn states(&self) -> &[MdpState] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: &MdpState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Feasible actions of state `k` in tie-breaking order.
    pub fn actions(&self, k: usize) -> impl Iterator<Item = MdpAction> + '_ {
        self.state_choices(k).iter().map(|c| c.action)
    }

    /// Transition list `(target index, probability)` and expected reward.
    pub fn transitions(&self, k: usize, action: MdpAction) -> Option<(Vec<(usize, f64)>, MdpReward)> {
        let c = self.state_choices(k).iter().find(|c| c.action == action)?;
        let rows = (c.start..c.end)
            .map(|t| (self.targets[t as usize] as usize, self.probs[t as usize]))
            .collect();
        Some((rows, MdpReward::new(c.r_other, c.r_i)))
    }

    fn state_choices(&self, k: usize) -> &[Choice] {
        &self.choices[self.choice_start[k] as usize..self.choice_start[k + 1] as usize]
    }
}

/// Builds the MDP by breadth-first search from the initial state.
pub fn build_mdp(powers: &PowerSplit, max_len: u16) -> Result<Mdp, MdpError> {
    if max_len < 3 {
        return Err(MdpError::InvalidTruncation(max_len));
    }
    let mut states = vec![MdpState::INITIAL];
    let mut index = HashMap::from([(MdpState::INITIAL, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    // Per state: (action, outcomes with target indices)
    let mut pending: Vec<Vec<(MdpAction, Vec<(usize, f64, MdpReward)>)>> = vec![Vec::new()];
    while let Some(k) = queue.pop_front() {
        let s = states[k];
        let mut per_state = Vec::with_capacity(4);
        for action in MdpAction::ALL {
            let Some(outs) = outcomes(s, action, max_len) else {
                continue;
            };
            let mut rows = Vec::with_capacity(outs.len());
            for o in outs {
                let t = *index.entry(o.to).or_insert_with(|| {
                    states.push(o.to);
                    pending.push(Vec::new());
                    queue.push_back(states.len() - 1);
                    states.len() - 1
                });
                rows.push((t, o.prob.eval(powers), o.reward));
            }
            per_state.push((action, rows));
        }
        pending[k] = per_state;
    }

    let mut choice_start = Vec::with_capacity(states.len() + 1);
    let mut choices = Vec::new();
    let mut targets = Vec::new();
    let mut probs = Vec::new();
    for per_state in pending {
        choice_start.push(choices.len() as u32);
        for (action, rows) in per_state {
            let start = targets.len() as u32;
            let (mut r_other, mut r_i) = (0.0, 0.0);
            for (t, p, r) in rows {
                targets.push(t as u32);
                probs.push(p);
                r_other += p * r.r_other;
                r_i += p * r.r_i;
            }
            choices.push(Choice {
                action,
                start,
                end: targets.len() as u32,
                r_other,
                r_i,
            });
        }
    }
    choice_start.push(choices.len() as u32);
    Ok(Mdp {
        powers: *powers,
        max_len,
        states,
        index,
        choice_start,
        choices,
        targets,
        probs,
        initial: 0,
    })
}

/// A deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    max_len: u16,
    actions: BTreeMap<MdpState, MdpAction>,
}

impl Policy {
    pub fn new(max_len: u16, actions: BTreeMap<MdpState, MdpAction>) -> Self {
        Self { max_len, actions }
    }

    /// Builds a policy over every state of `mdp` from a rule, falling back to
    /// the first feasible action when the rule's choice is infeasible.
    pub fn from_rule(mdp: &Mdp, rule: impl Fn(&MdpState) -> MdpAction) -> Self {
        let actions = mdp
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let wanted = rule(s);
                let feasible: Vec<MdpAction> = mdp.actions(k).collect();
                let a = if feasible.contains(&wanted) {
                    wanted
                } else {
                    feasible[0]
                };
                (*s, a)
            })
            .collect();
        Self {
            max_len: mdp.max_len,
            actions,
        }
    }

    pub fn max_len(&self) -> u16 {
        self.max_len
    }

    pub fn action(&self, s: &MdpState) -> Option<MdpAction> {
        self.actions.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MdpState, &MdpAction)> {
        self.actions.iter()
    }

    /// Flat text table, one `l_h l_s l_i fork action` line per state in
    /// state order, after a `# max_len=N` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# max_len={}\n", self.max_len);
        for (s, a) in &self.actions {
            out.push_str(&format!("{} {} {} {} {}\n", s.l_h, s.l_s, s.l_i, s.fork, a));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MdpError> {
        let mut max_len = None;
        let mut actions = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| MdpError::Parse { line, message };
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("max_len=") {
                    max_len = Some(v.trim().parse::<u16>().map_err(|e| err(e.to_string()))?);
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let l_h = fields[0].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let l_s = fields[1].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let l_i = fields[2].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let fork = fields[3].parse().map_err(err)?;
            let action = fields[4].parse().map_err(err)?;
            if l_s < -1 {
                return Err(err(format!("l_s = {l_s} is below -1")));
            }
            actions.insert(MdpState::new(l_h, l_s, l_i, fork), action);
        }
        let max_len = max_len.ok_or(MdpError::Parse {
            line: 1,
            message: "missing `# max_len=N` header".into(),
        })?;
        Ok(Self { max_len, actions })
    }
}

/// Result of a value-iteration solve of the `rho`-weighted MDP.
#[derive(Debug, Clone)]
pub struct ViSolution {
    /// Estimated optimal average reward per step (midpoint of the bounds).
    pub gain: f64,
    /// Guaranteed bounds on the optimal average reward.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub policy: Policy,
    /// Relative values, normalized to zero at the initial state.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    /// Run until the bounds are within `eps`.
    Span,
    /// Also stop as soon as the sign of the gain is certain.
    Sign,
}

struct Sweep {
    lower: f64,
    upper: f64,
    iterations: usize,
}

fn weights(mdp: &Mdp, rho: f64) -> Vec<f64> {
    mdp.choices
        .iter()
        .map(|c| (1.0 - rho) * c.r_i - rho * c.r_other)
        .collect()
}

fn backup(mdp: &Mdp, w: &[f64], v: &[f64], k: usize) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    let first = mdp.choice_start[k] as usize;
    for (j, c) in mdp.state_choices(k).iter().enumerate() {
        let mut q = w[first + j];
        for t in c.start as usize..c.end as usize {
            q += mdp.probs[t] * v[mdp.targets[t] as usize];
        }
        if q > best {
            best = q;
            arg = j;
        }
    }
    (best, arg)
}

fn iterate(mdp: &Mdp, rho: f64, eps: f64, v: &mut Vec<f64>, stop: Stop) -> Result<Sweep, MdpError> {
    let w = weights(mdp, rho);
    let n = mdp.num_states();
    if v.len() != n {
        *v = vec![0.0; n];
    }
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        next.par_iter_mut().enumerate().for_each(|(k, out)| {
            let (q, _) = backup(mdp, &w, v, k);
            *out = TAU * q + (1.0 - TAU) * v[k];
        });
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in next.iter().zip(v.iter()) {
            let d = a - b;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let offset = next[mdp.initial];
        for (dst, src) in v.iter_mut().zip(&next) {
            *dst = src - offset;
        }
        let (lower, upper) = (lo / TAU, hi / TAU);
        span = upper - lower;
        let decided = stop == Stop::Sign && (lower > 0.0 || upper < 0.0);
        if span <= eps || decided {
            return Ok(Sweep {
                lower,
                upper,
                iterations: it,
            });
        }
    }
    Err(MdpError::NoConvergence {
        iterations: MAX_ITERATIONS,
        span,
    })
}

fn greedy_policy(mdp: &Mdp, rho: f64, v: &[f64]) -> Policy {
    let w = weights(mdp, rho);
    let actions = (0..mdp.num_states())
        .map(|k| {
            let (_, arg) = backup(mdp, &w, v, k);
            (mdp.states[k], mdp.state_choices(k)[arg].action)
        })
        .collect();
    Policy {
        max_len: mdp.max_len,
        actions,
    }
}

/// Relative value iteration for the average of `(1 - rho) r_i - rho r_other`.
///
/// Stops when the upper and lower gain bounds are within `eps`. Ties between
/// actions go to the earliest in [`MdpAction::ALL`].
pub fn value_iteration(mdp: &Mdp, rho: f64, eps: f64) -> Result<ViSolution, MdpError> {
    value_iteration_from(mdp, rho, eps, Vec::new())
}

/// [`value_iteration`] starting from the given relative values.
pub fn value_iteration_from(mdp: &Mdp, rho: f64, eps: f64, mut values: Vec<f64>) -> Result<ViSolution, MdpError> {
    if !(eps > 0.0) {
        return Err(MdpError::InvalidEpsilon(eps));
    }
    let sweep = iterate(mdp, rho, eps, &mut values, Stop::Span)?;
    Ok(ViSolution {
        gain: 0.5 * (sweep.lower + sweep.upper),
        lower: sweep.lower,
        upper: sweep.upper,
        iterations: sweep.iterations,
        policy: greedy_policy(mdp, rho, &values),
        values,
    })
}

#[derive(Debug, Clone)]
pub struct ArrSolution {
    /// Optimal long-run share of the insightful pool.
    pub rho_star: f64,
    pub policy: Policy,
    /// Bisection steps taken.
    pub steps: usize,
}

/// Bisection on `rho` until the bracket is narrower than `tol`.
pub fn solve_arr(mdp: &Mdp, tol: f64) -> Result<ArrSolution, MdpError> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(MdpError::InvalidTolerance(tol));
    }
    let eps = tol * 1e-2;
    let mut values = Vec::new();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (rho, positive) in [(lo, true), (hi, false)] {
        let s = iterate(mdp, rho, eps, &mut values, Stop::Sign)?;
        let gain = 0.5 * (s.lower + s.upper);
        if (gain > 0.0) != positive {
            return Err(MdpError::Bracket { rho, gain });
        }
    }
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s = iterate(mdp, mid, eps, &mut values, Stop::Sign)?;
        if 0.5 * (s.lower + s.upper) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let rho_star = 0.5 * (lo + hi);
    let final_solve = value_iteration_from(mdp, rho_star, eps, values)?;
    Ok(ArrSolution {
        rho_star,
        policy: final_solve.policy,
        steps,
    })
}

/// Monte Carlo estimate of a policy's share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEstimate {
    pub rrev_i: f64,
    pub stderr: f64,
    pub r_other: f64,
    pub r_i: f64,
}

const BATCHES: u64 = 50;

/// Rolls `policy` forward for `steps` decisions from the initial state.
/// The standard error comes from batch means over 50 equal batches.
pub fn evaluate_policy(policy: &Policy, powers: &PowerSplit, steps: u64, seed: u64) -> Result<PolicyEstimate, MdpError> {
    if steps == 0 {
        return Err(MdpError::NoSteps);
    }
    let mut rng = rng::stream(seed, 0);
    let max_len = policy.max_len;
    let mut s = MdpState::INITIAL;
    let (mut tot_o, mut tot_i) = (0.0, 0.0);
    let per_batch = (steps / BATCHES).max(1);
    let mut batch = (0.0, 0.0);
    let mut batch_shares = Vec::with_capacity(BATCHES as usize);
    for step in 0..steps {
        let action = policy.action(&s).ok_or(MdpError::MissingState(s))?;
        let outs = outcomes(s, action, max_len).ok_or(MdpError::Infeasible { state: s, action })?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = outs[outs.len() - 1];
        for o in &outs {
            acc += o.prob.eval(powers);
            if u < acc {
                chosen = *o;
                break;
            }
        }
        tot_o += chosen.reward.r_other;
        tot_i += chosen.reward.r_i;
        batch.0 += chosen.reward.r_other;
        batch.1 += chosen.reward.r_i;
        s = chosen.to;
        if (step + 1) % per_batch == 0 {
            let t = batch.0 + batch.1;
            if t > 0.0 {
                batch_shares.push((batch.1, t));
            }
            batch = (0.0, 0.0);
        }
    }
    let total = tot_o + tot_i;
    let share = if total > 0.0 { tot_i / total } else { 0.0 };
    let nb = batch_shares.len() as f64;
    let stderr = if nb >= 2.0 {
        let mean_t = batch_shares.iter().map(|b| b.1).sum::<f64>() / nb;
        let ss: f64 = batch_shares
            .iter()
            .map(|(ri, t)| (ri - share * t).powi(2))
            .sum();
        (ss / (nb - 1.0) / nb).sqrt() / mean_t
    } else {
        f64::INFINITY
    };
    Ok(PolicyEstimate {
        rrev_i: share,
        stderr,
        r_other: tot_o,
        r_i: tot_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers() -> PowerSplit {
        PowerSplit::new(0.3, 0.3).unwrap()
    }

    fn only(s: MdpState, a: MdpAction) -> Outcome {
        let outs = outcomes(s, a, 20).unwrap();
        assert_eq!(outs.len(), 1);
        outs[0]
    }

    #[test]
    fn adopt_to_honest_branch() {
        let o = only(MdpState::new(2, -1, 1, Fork::Relevant), MdpAction::Adopt);
        assert_eq!(o.to, MdpState::new(0, 0, 0, Fork::Irrelevant));
        assert_eq!(o.reward, MdpReward::new(2.0, 0.0));
        assert_eq!(o.prob, Prob::One);
    }

    #[test]
    fn override_selfish_row() {
        let o = only(MdpState::new(0, 1, 3, Fork::Irrelevant), MdpAction::OverrideSelfish);
        assert_eq!(o.to, MdpState::new(0, 0, 1, Fork::Irrelevant));
        assert_eq!(o.reward, MdpReward::new(0.0, 2.0));
        assert!(outcomes(MdpState::new(0, 3, 3, Fork::Irrelevant), MdpAction::OverrideSelfish, 20).is_none());
    }

    #[test]
    fn wait_selfish_block_from_merged() {
        let outs = outcomes(MdpState::new(2, -1, 4, Fork::Irrelevant), MdpAction::Wait, 20).unwrap();
        let a = outs.iter().find(|o| o.prob == Prob::Alpha).unwrap();
        assert_eq!(a.to, MdpState::new(3, 3, 4, Fork::Relevant));
    }

    #[test]
    fn match_feasibility() {
        let s = MdpState::new(2, 2, 3, Fork::Relevant);
        assert!(outcomes(s, MdpAction::Match, 20).is_some());
        assert!(outcomes(MdpState { fork: Fork::Irrelevant, ..s }, MdpAction::Match, 20).is_none());
        assert!(outcomes(MdpState { l_i: 1, ..s }, MdpAction::Match, 20).is_none());
    }

    #[test]
    fn boundary_forces_release() {
        let s = MdpState::new(0, 5, 0, Fork::Relevant);
        assert!(outcomes(s, MdpAction::Adopt, 20).is_none());
        let o = outcomes(s, MdpAction::Adopt, 5).unwrap()[0];
        assert_eq!(o.to, MdpState::new(0, 0, 0, Fork::Irrelevant));
        assert_eq!(o.reward, MdpReward::new(5.0, 0.0));
        assert!(outcomes(s, MdpAction::Wait, 5).is_none());
    }

    #[test]
    fn built_rows_are_stochastic() {
        let mdp = build_mdp(&powers(), 8).unwrap();
        for k in 0..mdp.num_states() {
            let acts: Vec<_> = mdp.actions(k).collect();
            assert!(!acts.is_empty());
            for a in acts {
                let (rows, _) = mdp.transitions(k, a).unwrap();
                let total: f64 = rows.iter().map(|r| r.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert!(build_mdp(&powers(), 2).is_err());
    }

    #[test]
    fn policy_text_round_trip() {
        let mdp = build_mdp(&powers(), 6).unwrap();
        let p = Policy::from_rule(&mdp, |_| MdpAction::Wait);
        let text = p.to_text();
        assert!(text.starts_with("# max_len=6\n"));
        assert_eq!(Policy::from_text(&text).unwrap(), p);
        assert!(Policy::from_text("0 0 0 relevant wait\n").is_err());
        assert!(Policy::from_text("# max_len=6\n0 0 0 sideways wait\n").is_err());
    }
}

use std::fs;

use rayon::prelude::*;

use insightful_core::chain_solver::{self, dominance_report_with};
use insightful_core::game::{
    brute_force_nash, classify_equilibrium, expected_rewards_profile, is_nash, GameError, GameInstance, Strategy,
};
use insightful_core::mdp::{build_mdp, evaluate_policy, solve_arr};
use insightful_core::simulator::{
    simulate_markov_walk, simulate_selfish_baseline, simulate_three_pool, threshold_sweep, Parity, ProbeEngine,
};
use insightful_core::{PowerSplit, SimConfig, StrategyProfile3};

use crate::args::{
    AnalyticArgs, Command, DominanceArgs, EquilibriumArgs, GameArgs, MdpArgs, Mode, ParityArg, ProbeArg, SimEngine,
    SimulateArgs, SweepCommand, ThresholdArgs,
};
use crate::error::CliError;
use crate::output::{Table, Value};

pub fn execute(command: &Command) -> Result<Table, CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Analytic(a) => analytic(a),
        Command::Game(a) => game(a),
        Command::Mdp(a) => mdp(a),
        Command::Sweep(SweepCommand::Dominance(a)) => dominance(a),
        Command::Sweep(SweepCommand::Threshold(a)) => threshold(a),
        Command::Sweep(SweepCommand::Equilibrium(a)) => equilibrium(a),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot replay another replay".into())),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Insightful => "insightful",
        Mode::HonestVictim => "honest-victim",
        Mode::BaselineSelfish => "baseline-selfish",
    }
}

fn simulate(a: &SimulateArgs) -> Result<Table, CliError> {
    let powers = PowerSplit::new(a.alpha, a.beta)?;
    let config = SimConfig::new(powers, a.steps, a.seed).with_gamma(a.gamma);
    let report = match (a.mode, a.engine) {
        (Mode::Insightful, SimEngine::Block) => simulate_three_pool(&config, StrategyProfile3::INSIGHTFUL)?,
        (Mode::Insightful, SimEngine::Walk) => simulate_markov_walk(&config)?,
        (Mode::HonestVictim, SimEngine::Block) => simulate_three_pool(&config, StrategyProfile3::HONEST_VICTIM)?,
        (Mode::BaselineSelfish, SimEngine::Block) => simulate_selfish_baseline(&config)?,
        (mode, SimEngine::Walk) => {
            return Err(CliError::Usage(format!(
                "the walk engine only runs insightful mode, not {}",
                mode_name(mode)
            )))
        }
    };
    let mut t = Table::new(&[
        "mode",
        "engine",
        "alpha",
        "beta",
        "gamma",
        "steps",
        "seed",
        "rounds",
        "blocks_main_chain",
        "rrev_h",
        "rrev_sm",
        "rrev_im",
        "stderr_h",
        "stderr_sm",
        "stderr_im",
    ]);
    let engine = match a.engine {
        SimEngine::Block => "block",
        SimEngine::Walk => "walk",
    };
    let mut row = vec![
        mode_name(a.mode).into(),
        engine.into(),
        a.alpha.into(),
        a.beta.into(),
        a.gamma.into(),
        a.steps.into(),
        a.seed.into(),
        report.rounds.into(),
        report.blocks_main_chain.into(),
    ];
    row.extend(report.rrev.iter().map(|&v| Value::from(v)));
    row.extend(report.stderr_rrev.iter().map(|&v| Value::from(v)));
    t.push(row);
    Ok(t)
}

fn analytic(a: &AnalyticArgs) -> Result<Table, CliError> {
    let powers = PowerSplit::new(a.alpha, a.beta)?;
    let st = chain_solver::stationary(&powers, a.cap, a.tol)?;
    let (rrev, er) = if st.transient {
        ([0.0, 0.0, 1.0], None)
    } else {
        let r = chain_solver::expected_rewards(&st, &powers)?;
        (r.rrev, Some(r.er.as_array()))
    };
    let mut t = Table::new(&[
        "alpha",
        "beta",
        "cap",
        "tol",
        "transient",
        "tail_mass",
        "residual",
        "pi00",
        "rrev_h",
        "rrev_sm",
        "rrev_im",
        "er_h",
        "er_sm",
        "er_im",
    ]);
    let mut row = vec![
        a.alpha.into(),
        a.beta.into(),
        st.cap().into(),
        a.tol.into(),
        st.transient.into(),
        st.tail_mass.into(),
        st.residual.into(),
        st.pi00().into(),
    ];
    row.extend(rrev.iter().map(|&v| Value::from(v)));
    row.extend((0..3).map(|k| Value::from(er.map(|e| e[k]))));
    t.push(row);
    Ok(t)
}

fn parse_profile(s: &str) -> Result<Vec<Strategy>, CliError> {
    s.chars()
        .filter(|c| *c != ',' && !c.is_whitespace())
        .map(|c| match c {
            'I' | 'i' => Ok(Strategy::Insightful),
            'H' | 'h' => Ok(Strategy::RHonest),
            other => Err(CliError::Usage(format!("profile entry `{other}` is neither I nor H"))),
        })
        .collect()
}

fn profile_letters(p: &[Strategy]) -> String {
    p.iter()
        .map(|s| match s {
            Strategy::Insightful => 'I',
            Strategy::RHonest => 'H',
        })
        .collect()
}

fn game(a: &GameArgs) -> Result<Table, CliError> {
    let classification = match classify_equilibrium(&a.powers) {
        Ok(c) => Some(c),
        Err(GameError::OutsideCharacterization(_)) if a.profile.is_some() || a.brute_force => None,
        Err(e) => return Err(e.into()),
    };
    if a.brute_force {
        let witness = classification.as_ref().map(|c| c.witness.clone());
        let mut t = Table::new(&["profile", "insightful_count", "witness"]);
        for profile in brute_force_nash(&a.powers)? {
            let count = profile.iter().filter(|s| **s == Strategy::Insightful).count();
            let is_witness = witness.as_ref().map(|w| *w == profile);
            t.push(vec![profile_letters(&profile).into(), count.into(), is_witness.into()]);
        }
        return Ok(t);
    }
    let profile = match &a.profile {
        Some(p) => parse_profile(p)?,
        None => classification.as_ref().expect("classified above").witness.clone(),
    };
    let instance = GameInstance::new(a.powers.clone(), profile)?;
    let rewards = expected_rewards_profile(&instance)?;
    let report = is_nash(&instance)?;
    let mut t = Table::new(&[
        "pool",
        "power",
        "strategy",
        "rrev",
        "rrev_deviation",
        "gain",
        "improves",
        "is_nash",
        "kind",
        "boundary_tie",
    ]);
    for (k, d) in report.deviations.iter().enumerate() {
        t.push(vec![
            k.into(),
            a.powers[k].into(),
            d.from.to_string().into(),
            rewards.rrev[k].into(),
            d.rrev_after.into(),
            d.gain().into(),
            d.improves().into(),
            report.is_nash.into(),
            classification.as_ref().map(|c| c.kind.to_string()).into(),
            classification.as_ref().map(|c| c.boundary_tie).into(),
        ]);
    }
    Ok(t)
}

fn mdp(a: &MdpArgs) -> Result<Table, CliError> {
    let powers = PowerSplit::new(a.alpha, a.beta)?;
    let model = build_mdp(&powers, a.max_len)?;
    let sol = solve_arr(&model, a.tol)?;
    if let Some(path) = &a.policy_out {
        fs::write(path, sol.policy.to_text()).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    let estimate = if a.eval_steps > 0 {
        Some(evaluate_policy(&sol.policy, &powers, a.eval_steps, a.seed)?)
    } else {
        None
    };
    let mut t = Table::new(&[
        "alpha",
        "beta",
        "max_len",
        "tol",
        "states",
        "rho_star",
        "bisection_steps",
        "eval_steps",
        "rrev_eval",
        "stderr_eval",
    ]);
    t.push(vec![
        a.alpha.into(),
        a.beta.into(),
        u32::from(a.max_len).into(),
        a.tol.into(),
        model.num_states().into(),
        sol.rho_star.into(),
        sol.steps.into(),
        a.eval_steps.into(),
        estimate.map(|e| e.rrev_i).into(),
        estimate.map(|e| e.stderr).into(),
    ]);
    Ok(t)
}

fn dominance(a: &DominanceArgs) -> Result<Table, CliError> {
    let rows = dominance_report_with(a.grid.points(), a.cap, a.tol)?;
    let mut t = Table::new(&["alpha", "rrev_sm", "rrev_im", "gap", "transient", "tail_mass"]);
    for r in rows {
        t.push(vec![
            r.alpha.into(),
            r.rrev_sm.into(),
            r.rrev_im.into(),
            r.gap.into(),
            r.transient.into(),
            r.tail_mass.into(),
        ]);
    }
    Ok(t)
}

fn threshold(a: &ThresholdArgs) -> Result<Table, CliError> {
    let parities: &[(Parity, &str)] = match a.parity {
        ParityArg::Relative => &[(Parity::Relative, "relative")],
        ParityArg::UnitRelative => &[(Parity::UnitRelative, "unit-relative")],
        ParityArg::Both => &[(Parity::Relative, "relative"), (Parity::UnitRelative, "unit-relative")],
    };
    let (engine, engine_name) = match a.engine {
        ProbeArg::Analytic => (ProbeEngine::Analytic { cap: a.cap }, "analytic"),
        ProbeArg::MonteCarlo => (
            ProbeEngine::MonteCarlo {
                steps: a.steps,
                seed: a.seed,
            },
            "monte-carlo",
        ),
    };
    let mut t = Table::new(&["alpha", "parity", "engine", "beta_star"]);
    for &(parity, name) in parities {
        for p in threshold_sweep(a.grid.points(), parity, engine)? {
            t.push(vec![p.alpha.into(), name.into(), engine_name.into(), p.beta_star.into()]);
        }
    }
    Ok(t)
}

/// Points whose pools would all be below 1/2 with `m2 <= m1`.
fn equilibrium_points(a: &EquilibriumArgs) -> Vec<(f64, f64, f64)> {
    let k = a.rest_pools as f64;
    let mut out = Vec::new();
    for &m1 in a.m1.points() {
        for &m2 in a.m2.points() {
            let rest = 1.0 - m1 - m2;
            if m2 > m1 || m2 <= 0.0 || m1 >= 0.5 || rest <= 1e-12 || rest / k >= 0.5 {
                continue;
            }
            out.push((m1, m2, rest));
        }
    }
    out
}

fn equilibrium(a: &EquilibriumArgs) -> Result<Table, CliError> {
    if a.rest_pools == 0 {
        return Err(CliError::Usage("rest-pools must be at least 1".into()));
    }
    let rows: Vec<Vec<Value>> = equilibrium_points(a)
        .par_iter()
        .map(|&(m1, m2, rest)| {
            let mut powers = vec![m1, m2];
            powers.extend(std::iter::repeat(rest / a.rest_pools as f64).take(a.rest_pools));
            let c = classify_equilibrium(&powers)?;
            let inst = GameInstance::new(powers, c.witness.clone())?;
            let r = expected_rewards_profile(&inst)?;
            Ok(vec![
                m1.into(),
                m2.into(),
                rest.into(),
                c.kind.to_string().into(),
                c.boundary_tie.into(),
                profile_letters(&c.witness).into(),
                r.rrev[0].into(),
                r.rrev[1].into(),
                r.rrev[2].into(),
            ])
        })
        .collect::<Result<_, GameError>>()?;
    let mut t = Table::new(&[
        "m1",
        "m2",
        "rest",
        "kind",
        "boundary_tie",
        "witness",
        "rrev_1",
        "rrev_2",
        "rrev_rest",
    ]);
    for row in rows {
        t.push(row);
    }
    Ok(t)
}

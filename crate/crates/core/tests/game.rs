use insightful_core::game::{
    brute_force_nash, classify_equilibrium, expected_rewards_profile, f, fork_chain_stationary, g, h,
    is_nash, EquilibriumKind, GameError, GameInstance, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Strategy::{Insightful as I, RHonest as H};

const EPS: f64 = 1e-6;

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol
}

/// Largest pool first, the rest split evenly.
fn with_rest(lead: &[f64], rest_pools: usize) -> Vec<f64> {
    let rest = (1.0 - lead.iter().sum::<f64>()) / rest_pools as f64;
    let mut v = lead.to_vec();
    v.extend(std::iter::repeat(rest).take(rest_pools));
    v
}

#[test]
fn f_and_g_values() {
    assert_eq!(f(0.0).unwrap(), 0.0);
    assert!(close(f(1.0 / 3.0).unwrap(), 1.0 / 3.0, 1e-12));
    assert!(close(f(0.4).unwrap(), 0.64, 1e-12));
    assert!(f(0.5).is_err());
    assert!(close(g(1.0 / 3.0).unwrap(), 1.0 / 3.0, 1e-12));
    assert!(close(g(0.35).unwrap(), 0.33054, 1e-5));
    assert!(g(0.35).unwrap() >= 0.33);
    assert!(close(g(0.5).unwrap(), 0.25, 1e-12));
    assert!(g(0.51).is_err());
}

#[test]
fn h_values_and_bound() {
    let v = h(0.4, 0.4).unwrap();
    assert!(close(v, 0.31282, 1e-5));
    assert!(v >= 0.2);
    assert!(h(0.3, 0.4).is_err());
    assert!(h(0.5, 0.5).is_err());
    for i in 0..40 {
        for j in 0..=40 {
            let m1 = 1.0 / 3.0 + (0.5 - 1.0 / 3.0) * i as f64 / 40.0;
            let m2 = 0.25 + 0.25 * j as f64 / 40.0;
            if m2 > m1 || m1 < g(m2).unwrap() || m2 < g(m1).unwrap() {
                continue;
            }
            assert!(m1 + m2 + h(m1, m2).unwrap() >= 1.0 - 1e-12, "({m1}, {m2})");
        }
    }
}

#[test]
fn reward_examples() {
    let honest = GameInstance::all_honest(vec![0.5, 0.3, 0.2]).unwrap();
    let r = expected_rewards_profile(&honest).unwrap();
    assert_eq!(r.rrev, vec![0.5, 0.3, 0.2]);

    let one = GameInstance::new(vec![0.4, 0.6], vec![I, H]).unwrap();
    let r = expected_rewards_profile(&one).unwrap();
    assert!(close(r.rrev[0], 0.832 / 1.72, 1e-12));
    assert!(close(r.rrev[0], 0.48372, 1e-5));
    let total: f64 = r.er.iter().sum();
    assert!(close(total, 1.0 - 0.4 + f(0.4).unwrap() + 2.0 * 0.4 * 0.6, 1e-12));

    let big = GameInstance::new(vec![0.5, 0.5], vec![I, H]).unwrap();
    assert!(matches!(
        expected_rewards_profile(&big),
        Err(GameError::InsightfulTooLarge { .. })
    ));
}

#[test]
fn classification_examples() {
    let c = classify_equilibrium(&[0.3, 0.3, 0.2, 0.2]).unwrap();
    assert_eq!(c.kind, EquilibriumKind::AllHonest);
    let c = classify_equilibrium(&[0.4, 0.2, 0.2, 0.2]).unwrap();
    assert_eq!(c.kind, EquilibriumKind::OneInsightful);
    assert_eq!(c.witness, vec![I, H, H, H]);
    let c = classify_equilibrium(&[0.45, 0.35, 0.2]).unwrap();
    assert_eq!(c.kind, EquilibriumKind::TwoInsightful);
    // Caller order is preserved.
    let c = classify_equilibrium(&[0.2, 0.35, 0.45]).unwrap();
    assert_eq!(c.witness, vec![H, I, I]);
    assert!(matches!(
        classify_equilibrium(&[0.6, 0.4]),
        Err(GameError::OutsideCharacterization(_))
    ));
}

#[test]
fn boundary_tie_is_flagged() {
    let third = 1.0 / 3.0;
    let c = classify_equilibrium(&[third, third, third]).unwrap();
    assert_eq!(c.kind, EquilibriumKind::AllHonest);
    assert!(c.boundary_tie);
    let both = brute_force_nash(&[third, third, third]).unwrap();
    assert!(both.contains(&vec![H, H, H]));
    assert!(both.contains(&vec![I, H, H]));
}

#[test]
fn nash_examples() {
    let p = with_rest(&[0.34], 3);
    assert!(!is_nash(&GameInstance::all_honest(p).unwrap()).unwrap().is_nash);
    let p = vec![0.4, 0.2, 0.2, 0.2];
    assert!(is_nash(&GameInstance::new(p, vec![I, H, H, H]).unwrap()).unwrap().is_nash);
    let p = vec![0.3, 0.25, 0.25, 0.2];
    assert!(!is_nash(&GameInstance::new(p, vec![I, I, I, H]).unwrap()).unwrap().is_nash);
    assert!(brute_force_nash(&[0.25; 4]).unwrap().contains(&vec![H; 4]));
}

#[test]
fn honest_deviation_boundary_at_a_third() {
    for (m, gains) in [(1.0 / 3.0 - EPS, false), (1.0 / 3.0 + EPS, true)] {
        let inst = GameInstance::all_honest(with_rest(&[m], 4)).unwrap();
        let report = is_nash(&inst).unwrap();
        let gain = report.deviations[0].gain().unwrap();
        assert_eq!(gain > 0.0, gains, "m1 = {m}, gain = {gain:e}");
    }
}

#[test]
fn second_pool_boundary_at_g() {
    let m1 = 0.42;
    let gm = g(m1).unwrap();
    for (m2, gains) in [(gm - EPS, false), (gm + EPS, true)] {
        let powers = with_rest(&[m1, m2], 3);
        let inst = GameInstance::new(powers, vec![I, H, H, H, H]).unwrap();
        let gain = is_nash(&inst).unwrap().deviations[1].gain().unwrap();
        assert_eq!(gain > 0.0, gains, "m2 = {m2}, gain = {gain:e}");
    }
}

fn random_powers(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        let drift = 1.0 - p.iter().sum::<f64>();
        p[n - 1] += drift;
        if p[0] < 0.5 {
            return p;
        }
    }
}

#[test]
fn witness_is_in_brute_force_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..300 {
        let n = 3 + trial % 4;
        let powers = random_powers(&mut rng, n);
        let c = classify_equilibrium(&powers).unwrap();
        let inst = GameInstance::new(powers.clone(), c.witness.clone()).unwrap();
        assert!(is_nash(&inst).unwrap().is_nash, "{powers:?}");
        let all = brute_force_nash(&powers).unwrap();
        assert!(all.contains(&c.witness), "{powers:?}");
        assert!(inst.insightful_count() <= 2);
    }
}

#[test]
fn fork_chain_ratios() {
    let fc = fork_chain_stationary(0.3).unwrap();
    assert!(close(fc.tie(), 0.21, 1e-15));
    assert!(close(fc.lead(2), 0.3 * 3.0 / 7.0, 1e-15));
    assert!(close(fc.branch_revenue(), 0.126 + 0.2475, 1e-12));
    assert!(fork_chain_stationary(0.5).is_err());
}

#[test]
fn too_many_pools() {
    let p = vec![1.0 / 17.0; 17];
    assert!(matches!(brute_force_nash(&p), Err(GameError::TooManyPools(17))));
}

use insightful_core::chain_solver::revenue_shares;
use insightful_core::simulator::{
    simulate_markov_walk, simulate_selfish_baseline, simulate_three_pool, threshold_sweep, Parity,
    ProbeEngine, RevenueReport, SimConfig, StrategyProfile3,
};
use insightful_core::PowerSplit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(a: f64, b: f64, steps: u64, seed: u64) -> SimConfig {
    SimConfig::new(PowerSplit::new(a, b).unwrap(), steps, seed)
}

fn z(x: &RevenueReport, y: &RevenueReport, k: usize) -> f64 {
    let pooled = (x.stderr_rrev[k].powi(2) + y.stderr_rrev[k].powi(2)).sqrt();
    (x.rrev[k] - y.rrev[k]).abs() / pooled
}

#[test]
fn seed_determinism() {
    let c = config(0.31, 0.22, 200_000, 99);
    for profile in [StrategyProfile3::INSIGHTFUL, StrategyProfile3::HONEST_VICTIM] {
        assert_eq!(
            simulate_three_pool(&c, profile).unwrap(),
            simulate_three_pool(&c, profile).unwrap()
        );
    }
    assert_eq!(simulate_markov_walk(&c).unwrap(), simulate_markov_walk(&c).unwrap());
    assert_eq!(
        simulate_selfish_baseline(&c).unwrap(),
        simulate_selfish_baseline(&c).unwrap()
    );
    let other = config(0.31, 0.22, 200_000, 100);
    assert_ne!(
        simulate_three_pool(&c, StrategyProfile3::INSIGHTFUL).unwrap(),
        simulate_three_pool(&other, StrategyProfile3::INSIGHTFUL).unwrap()
    );
}

#[test]
fn honest_only_sanity() {
    let steps = 1_000_000;
    let r = simulate_three_pool(&config(0.3, 0.2, steps, 4), StrategyProfile3::ALL_HONEST).unwrap();
    for (share, m) in r.rrev.iter().zip([0.5, 0.3, 0.2]) {
        let bound = 10.0 * (m * (1.0 - m) / steps as f64).sqrt();
        assert!((share - m).abs() <= bound, "{share} vs {m}");
    }
    assert_eq!(r.blocks_main_chain, steps);
}

#[test]
fn conservation_over_random_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let a = rng.gen_range(0.0..0.49);
        let b = rng.gen_range(0.0..(0.99 - a));
        let c = config(a, b, rng.gen_range(1..30_000), rng.gen());
        for r in [
            simulate_three_pool(&c, StrategyProfile3::INSIGHTFUL).unwrap(),
            simulate_three_pool(&c, StrategyProfile3::HONEST_VICTIM).unwrap(),
            simulate_selfish_baseline(&c).unwrap(),
            simulate_markov_walk(&c).unwrap(),
        ] {
            assert_eq!(r.credited.iter().sum::<u64>(), r.blocks_main_chain);
        }
    }
}

#[test]
fn insightful_beats_selfish_at_point_three() {
    let r = simulate_three_pool(&config(0.3, 0.3, 10_000_000, 1), StrategyProfile3::INSIGHTFUL).unwrap();
    let se = (r.stderr_rrev[1].powi(2) + r.stderr_rrev[2].powi(2)).sqrt();
    assert!(r.rrev[2] - r.rrev[1] > 5.0 * se);
}

#[test]
fn engines_agree_with_each_other_and_the_solver() {
    for (k, &(a, b)) in [(0.3, 0.3), (0.1, 0.4), (0.4, 0.1), (0.2, 0.15)].iter().enumerate() {
        let c = config(a, b, 3_000_000, 20 + k as u64);
        let block = simulate_three_pool(&c, StrategyProfile3::INSIGHTFUL).unwrap();
        let walk = simulate_markov_walk(&c).unwrap();
        let exact = revenue_shares(&c.powers, 80, 1e-9).unwrap();
        for i in 0..3 {
            assert!(z(&block, &walk, i) <= 4.0, "({a}, {b}) pool {i}");
            assert!((walk.rrev[i] - exact.rrev[i]).abs() <= 4.0 * walk.stderr_rrev[i]);
            assert!((block.rrev[i] - exact.rrev[i]).abs() <= 4.0 * block.stderr_rrev[i]);
        }
    }
}

#[test]
fn honest_victim_loses() {
    let r = simulate_three_pool(&config(0.3, 0.3, 2_000_000, 2), StrategyProfile3::HONEST_VICTIM).unwrap();
    assert!(r.rrev[2] < 0.3);
    assert!(r.rrev[1] > 0.3);
}

#[test]
fn insightful_takes_most_above_a_third() {
    let r = simulate_three_pool(&config(0.4, 0.4, 2_000_000, 6), StrategyProfile3::INSIGHTFUL).unwrap();
    assert!(r.rrev[2] > r.rrev[1]);
    assert!(r.rrev[2] > 0.5);
}

#[test]
fn selfish_baseline_examples() {
    let low = simulate_selfish_baseline(&config(0.1, 0.0, 2_000_000, 3)).unwrap();
    assert!(low.rrev[0] + low.rrev[1] > 0.999);
    assert!(low.rrev[1] < 0.1);
    let high = simulate_selfish_baseline(&config(0.4, 0.0, 2_000_000, 3)).unwrap();
    assert!(high.rrev[1] > 0.4);
    let always_wins = simulate_selfish_baseline(&config(0.2, 0.0, 2_000_000, 3).with_gamma(1.0)).unwrap();
    assert!(always_wins.rrev[1] > 0.2);
}

#[test]
fn threshold_curves_analytic() {
    let engine = ProbeEngine::Analytic { cap: 80 };
    let rel = threshold_sweep(&[0.3, 0.4], Parity::Relative, engine).unwrap();
    let unit = threshold_sweep(&[0.3, 0.4], Parity::UnitRelative, engine).unwrap();
    let r: Vec<f64> = rel.iter().map(|p| p.beta_star.unwrap()).collect();
    let u: Vec<f64> = unit.iter().map(|p| p.beta_star.unwrap()).collect();
    assert!(r[0] < 0.3 && u[0] < r[0]);
    // Above a third both searches stop where the chain turns transient.
    assert!(r[1] < 0.4 && u[1] <= r[1]);
}

#[test]
fn threshold_sweep_monte_carlo_is_reproducible() {
    let engine = ProbeEngine::MonteCarlo {
        steps: 50_000,
        seed: 9,
    };
    let a = threshold_sweep(&[0.35, 0.45], Parity::Relative, engine).unwrap();
    let b = threshold_sweep(&[0.35, 0.45], Parity::Relative, engine).unwrap();
    assert_eq!(a, b);
}

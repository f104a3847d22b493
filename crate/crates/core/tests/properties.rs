use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use geosteer::agents::dqn::select_action;
use geosteer::agents::{Experience, ReplayBuffer};
use geosteer::bayes::{expected_stage_reward, BoundaryBelief, FaultBelief};
use geosteer::env::reward::stage_reward_env1;
use geosteer::env::trajectory::min_curvature_segment;
use geosteer::env::{CostParams, Env1, Env1Config, Env2, Environment, Scenario1, SIDETRACK};
use geosteer::geomodel::{sample_faulted, sample_realization_env1, FaultedPrior, ForwardFnParams1};
use geosteer::neural::QNetwork;
use geosteer::rng::{derived, seeded};

fn faulted_env(seed: u64, v_prod: f64) -> Env2 {
    let prior = Arc::new(FaultedPrior::default());
    let real = Arc::new(sample_faulted(&prior, &mut seeded(seed)).unwrap());
    Env2::new(real, prior, CostParams::default(), v_prod).unwrap()
}

fn layered_env(seed: u64, scenario: Scenario1) -> Env1 {
    let real = Arc::new(sample_realization_env1(&ForwardFnParams1::default(), &mut seeded(seed)).unwrap());
    Env1::new(real, scenario, Env1Config::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realizations_are_a_function_of_the_seed(seed in any::<u64>()) {
        let p1 = ForwardFnParams1::default();
        prop_assert_eq!(
            sample_realization_env1(&p1, &mut seeded(seed)).unwrap(),
            sample_realization_env1(&p1, &mut seeded(seed)).unwrap()
        );
        let p2 = FaultedPrior::default();
        prop_assert_eq!(sample_faulted(&p2, &mut seeded(seed)).unwrap(), sample_faulted(&p2, &mut seeded(seed)).unwrap());
    }

    #[test]
    fn upper_boundary_steps_only_at_faults(seed in any::<u64>()) {
        let prior = FaultedPrior::default();
        let r = sample_faulted(&prior, &mut seeded(seed)).unwrap();
        for j in 0..r.n_points() - 1 {
            let jump = r.upper[j + 1] - r.upper[j] - (r.trend[j + 1] - r.trend[j]);
            let here: f64 = r
                .fault_draws
                .iter()
                .filter(|d| (d.location / r.dx).round() as usize == j + 1)
                .map(|d| d.displacement)
                .sum();
            prop_assert!((jump - here).abs() < 1e-9, "point {}: jump {} vs {}", j + 1, jump, here);
        }
    }

    #[test]
    fn faulted_rollouts_keep_the_books(seed in any::<u64>(), v_prod in 0.0f64..5.0, policy in any::<u64>()) {
        let mut env = faulted_env(seed, v_prod);
        let mut rng = seeded(policy);
        let mut stages = 0;
        while !env.is_done() {
            let legal = env.legal_actions();
            prop_assert_eq!(legal[SIDETRACK], !env.in_reservoir());
            let options: Vec<usize> = (0..legal.len()).filter(|&a| legal[a]).collect();
            env.step(options[rng.random_range(0..options.len())]).unwrap();
            stages += 1;
        }
        let r = env.episode_result();
        prop_assert_eq!(stages, 29);
        prop_assert_eq!(r.stage_rewards.len(), 29);
        let identity = r.production_value.unwrap() - r.operating_cost.unwrap();
        prop_assert!((r.total_reward - identity).abs() <= 1e-12);
    }

    #[test]
    fn layered_episodes_have_ten_stages(seed in any::<u64>(), policy in any::<u64>(), w1 in 0.0f64..=1.0) {
        let mut env = layered_env(seed, Scenario1 { w1, w2: 1.0 - w1, perm_low: 50.0 });
        let mut rng = seeded(policy);
        while !env.is_done() {
            env.step(rng.random_range(0..11)).unwrap();
        }
        prop_assert_eq!(env.episode_result().stage_rewards.len(), 10);
    }

    #[test]
    fn holding_inclination_is_collinear(inc in -60.0f64..60.0, n_sub in 1usize..30, dx in 0.5f64..50.0) {
        let dz = min_curvature_segment(inc, 0.0, n_sub, dx).unwrap();
        let step = dz[0];
        prop_assert!((step - dx * inc.to_radians().tan()).abs() <= 1e-9 * (1.0 + step.abs()));
        for (k, z) in dz.iter().enumerate() {
            prop_assert!((z - (k + 1) as f64 * step).abs() <= 1e-9 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn stage_reward_is_linear_in_the_weights(
        r1 in prop::collection::vec(-50.0f64..1.0, 10),
        r2 in prop::collection::vec(0.0f64..1.0, 10),
        w1 in 0.0f64..=1.0,
    ) {
        let w2 = 1.0 - w1;
        let whole = stage_reward_env1(w1, w2, &r1, &r2).unwrap();
        let parts = w1 * stage_reward_env1(1.0, 0.0, &r1, &r2).unwrap() + w2 * stage_reward_env1(0.0, 1.0, &r1, &r2).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn boundary_variance_starts_at_zero_and_grows(sd_top in 0.0f64..3.0, sd_h in 0.0f64..3.0, horizon in 1usize..30) {
        let b = BoundaryBelief::anchored(horizon, sd_top, sd_h, 1000.0, 20.0).condition_on_measurement(1002.0, 19.0);
        prop_assert_eq!(b.var_top[0], 0.0);
        prop_assert_eq!(b.var_thickness[0], 0.0);
        for k in 1..=horizon {
            prop_assert!(b.var_top[k] >= b.var_top[k - 1]);
            prop_assert!(b.var_thickness[k] >= b.var_thickness[k - 1]);
        }
    }

    #[test]
    fn fault_weights_stay_normalized(seed in any::<u64>()) {
        let prior = FaultedPrior::default();
        let r = sample_faulted(&prior, &mut seeded(seed)).unwrap();
        let mut belief = FaultBelief::prior(&prior.faults, prior.dx).unwrap();
        for j in 1..r.n_points() {
            belief = belief.condition_on_offset(j, r.offset_at(j)).unwrap();
            prop_assert!((belief.weight_sum() - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(belief.occurred_mask(), 0b111);
    }

    #[test]
    fn forward_pass_is_pure(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let net = QNetwork::new(&[5, 8, 4], &mut rng).unwrap();
        let before = net.clone();
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(net, before);
    }
}

#[test]
fn thickness_never_drops_below_the_floor() {
    let p = ForwardFnParams1::default();
    for k in 0..10_000 {
        let r = sample_realization_env1(&p, &mut derived(17, &[k])).unwrap();
        let min = r.thickness.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= p.thickness_min, "realization {k}: {min}");
    }
}

#[test]
fn fault_locations_are_uniform_over_candidates() {
    let prior = FaultedPrior::default();
    let n = 10_000;
    let mut counts = vec![vec![0usize; 3]; prior.faults.len()];
    for k in 0..n {
        let r = sample_faulted(&prior, &mut derived(23, &[k])).unwrap();
        for (f, draw) in r.fault_draws.iter().enumerate() {
            let idx = prior.faults[f]
                .candidate_locations
                .iter()
                .position(|&c| c == draw.location)
                .expect("draw is a candidate");
            counts[f][idx] += 1;
        }
    }
    for (f, c) in counts.iter().enumerate() {
        for &x in c {
            let pct = 100.0 * x as f64 / n as f64;
            assert!((pct - 100.0 / 3.0).abs() <= 2.0, "fault {f}: {c:?}");
        }
    }
}

#[test]
fn monte_carlo_stage_reward_converges() {
    let env = layered_env(5, Scenario1 { w1: 0.67, w2: 0.33, perm_low: 100.0 });
    let belief = env.belief(1.0, 0.5);
    for action in [0, 5, 10] {
        // standard error from independent single-draw estimates
        let draws: Vec<f64> = (0..2000)
            .map(|k| expected_stage_reward(&belief, &env, action, 1, &mut derived(31, &[action as u64, k])).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
        let small = expected_stage_reward(&belief, &env, action, 1_000, &mut derived(32, &[action as u64])).unwrap();
        let large = expected_stage_reward(&belief, &env, action, 100_000, &mut derived(33, &[action as u64])).unwrap();
        let se = sd * (1.0 / 1_000.0f64 + 1.0 / 100_000.0).sqrt();
        assert!((small - large).abs() < 3.0 * se, "action {action}: {small} vs {large}, se {se}");
    }
}

#[test]
fn masked_selection_never_returns_an_illegal_action() {
    let mut rng = seeded(8);
    let net = QNetwork::new(&[3, 6, 6], &mut rng).unwrap();
    for _ in 0..1_000_000 {
        let mut legal: Vec<bool> = (0..6).map(|_| rng.random_bool(0.5)).collect();
        if !legal.iter().any(|&l| l) {
            legal[rng.random_range(0..6)] = true;
        }
        let obs = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let eps = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) };
        let a = select_action(&net, &obs, eps, &legal, &mut rng).unwrap();
        assert!(legal[a]);
    }
}

#[test]
fn replay_sampling_passes_a_chi_square_test() {
    let cap = 200;
    let mut buf = ReplayBuffer::new(cap).unwrap();
    for i in 0..cap + 37 {
        buf.push(Experience {
            obs: vec![i as f64],
            action: 0,
            reward: 0.0,
            next_obs: vec![0.0],
            done: true,
            legal_next: vec![true],
        });
    }
    let mut counts = vec![0usize; cap];
    let mut rng = seeded(12);
    let draws = 200_000;
    for _ in 0..draws / 50 {
        for i in buf.sample_indices(50, &mut rng) {
            counts[i] += 1;
        }
    }
    let expected = draws as f64 / cap as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((cap - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat:.1} >= {critical:.1}");
}

//! One-stage lookahead: maximize the expected immediate reward.

use statrs::function::erf::erf;

use crate::bayes::{expected_stage_rewards, BoundaryBelief};
use crate::env::env2::{Env2, ENV2_STEERS_M, SIDETRACK};
use crate::env::{Env1, Environment};
use crate::error::Result;
use crate::rng::StreamRng;

const TIE_TOL: f64 = 1e-12;

/// Index of the zero-change action in the layered action set.
const ENV1_HOLD: usize = 5;

/// Best of the 11 inclination changes under `belief`; ties go to the smaller
/// change, then the lower index.
pub fn greedy_env1(env: &Env1, belief: &BoundaryBelief, mc_samples: usize, rng: &mut StreamRng) -> Result<usize> {
    let est = expected_stage_rewards(belief, env, mc_samples, rng)?;
    Ok(argmax_by_magnitude(&est, ENV1_HOLD))
}

fn argmax_by_magnitude(values: &[f64], centre: usize) -> usize {
    let mut best = 0;
    for a in 1..values.len() {
        let (va, vb) = (values[a], values[best]);
        let better = va > vb + TIE_TOL
            || ((va - vb).abs() <= TIE_TOL && a.abs_diff(centre) < best.abs_diff(centre));
        if better {
            best = a;
        }
    }
    best
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[max(0, X - c)]` for `X ~ N(mean, sd^2)`.
fn expected_excess(mean: f64, sd: f64, c: f64) -> f64 {
    if sd == 0.0 {
        return (mean - c).max(0.0);
    }
    let d = (mean - c) / sd;
    sd * normal_pdf(d) + (mean - c) * normal_cdf(d)
}

/// Prospects of a steering change at the next point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteerOutlook {
    pub p_inside: f64,
    /// Expected vertical distance outside the reservoir, m.
    pub exit_distance: f64,
}

/// Next-point outlook of steering by `delta` metres, mixing over the
/// believed throw at the next point.
pub fn steer_outlook(env: &Env2, delta: f64) -> SteerOutlook {
    let real = env.realization();
    let j = env.point();
    let h = real.thickness;
    let base = real.upper[j] + real.trend[j + 1] - real.trend[j];
    let z = env.tvd() + delta;
    let mut p_inside = 0.0;
    let mut exit_distance = 0.0;
    for (w, mean, var) in env.fault_belief().throw_mixture(j + 1) {
        let top = base + mean;
        let sd = var.sqrt();
        let p = if sd == 0.0 {
            let inside = top - crate::geomodel::INSIDE_TOL <= z && z <= top + h + crate::geomodel::INSIDE_TOL;
            f64::from(u8::from(inside))
        } else {
            normal_cdf((z - top) / sd) - normal_cdf((z - h - top) / sd)
        };
        // above the top: top - z > 0; below the bottom: z - (top + h) > 0
        let above = expected_excess(top, sd, z);
        let below = expected_excess(-top - h, sd, -z);
        p_inside += w * p;
        exit_distance += w * (above + below);
    }
    SteerOutlook { p_inside, exit_distance }
}

/// Sidetracks from outside exactly when the production value exceeds the
/// sidetrack cost; otherwise steers to maximize `P(inside) v - c_d`, then to
/// minimize the expected exit distance, then the smallest change.
pub fn greedy_env2(env: &Env2) -> usize {
    let costs = env.costs();
    if !env.in_reservoir() && env.v_prod() > costs.c_st {
        return SIDETRACK;
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for (a, &delta) in ENV2_STEERS_M.iter().enumerate() {
        let o = steer_outlook(env, delta);
        let reward = o.p_inside * env.v_prod() - costs.c_d;
        let better = match best {
            None => true,
            Some((b, rb, eb)) => {
                if reward > rb + TIE_TOL {
                    true
                } else if reward < rb - TIE_TOL {
                    false
                } else if o.exit_distance < eb - TIE_TOL {
                    true
                } else if o.exit_distance > eb + TIE_TOL {
                    false
                } else {
                    delta.abs() < ENV2_STEERS_M[b].abs()
                }
            }
        };
        if better {
            best = Some((a, reward, o.exit_distance));
        }
    }
    let action = best.expect("five steering actions").0;
    debug_assert!(env.legal_actions()[action]);
    action
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::env1::{point_rewards, Env1Config, Scenario1};
    use crate::env::CostParams;
    use crate::geomodel::{sample_faulted, FaultedPrior, GeoRealization1};
    use crate::rng::seeded;
    use rand::Rng;
    use std::sync::Arc;

    #[test]
    fn ties_prefer_small_changes() {
        assert_eq!(argmax_by_magnitude(&[1.0; 11], 5), 5);
        let mut v = vec![0.0; 11];
        v[3] = 2.0;
        v[7] = 2.0;
        assert_eq!(argmax_by_magnitude(&v, 5), 3);
        v[9] = 2.5;
        assert_eq!(argmax_by_magnitude(&v, 5), 9);
    }

    #[test]
    fn expected_excess_matches_quadrature() {
        let (m, s, c) = (1.0, 0.7, 1.3);
        let n = 200_000;
        let lo = m - 10.0 * s;
        let step = 20.0 * s / n as f64;
        let mut q = 0.0;
        for k in 0..n {
            let x = lo + (k as f64 + 0.5) * step;
            q += (x - c).max(0.0) * normal_pdf((x - m) / s) / s * step;
        }
        assert!((expected_excess(m, s, c) - q).abs() < 1e-8);
    }

    fn flat_env1(start_offset: f64, scenario: Scenario1) -> Env1 {
        let real = GeoRealization1 {
            top: vec![1000.0; 100],
            thickness: vec![20.0; 100],
            dx: 10.0,
            hq_fraction: 0.4,
            perm_high: 200.0,
            perm_low: 100.0,
        };
        Env1::with_start(Arc::new(real), scenario, Env1Config::default(), 1010.0 + start_offset, 0.0).unwrap()
    }

    /// Brute-force stage reward of every action on a known path.
    fn brute_force(env: &Env1, top: &[f64], thick: &[f64]) -> usize {
        let s = env.scenario();
        let values: Vec<f64> = (0..11)
            .map(|a| {
                let tvd = env.stage_tvds(a).unwrap();
                (0..10)
                    .map(|k| {
                        let (r1, r2) = point_rewards(tvd[k], top[k], thick[k], 0.4, 200.0, s.perm_low);
                        s.w1 * r1 + s.w2 * r2
                    })
                    .sum()
            })
            .collect();
        argmax_by_magnitude(&values, 5)
    }

    #[test]
    fn deterministic_belief_matches_brute_force() {
        let s = Scenario1 { w1: 0.67, w2: 0.33, perm_low: 100.0 };
        let env = flat_env1(-6.0, s);
        let belief = env.belief(0.0, 0.0);
        let chosen = greedy_env1(&env, &belief, 3, &mut seeded(0)).unwrap();
        assert_eq!(chosen, brute_force(&env, &[1000.0; 11], &[20.0; 11]));
    }

    #[test]
    fn randomized_beliefs_match_brute_force() {
        let mut rng = seeded(77);
        for _ in 0..100 {
            let w1 = rng.random_range(0.0..1.0);
            let s = Scenario1 { w1, w2: 1.0 - w1, perm_low: 20.0 };
            let env = flat_env1(rng.random_range(-9.0..9.0), s);
            let top = 1000.0 + rng.random_range(-3.0..3.0);
            let h = rng.random_range(12.0..28.0);
            let belief = BoundaryBelief::anchored(10, 0.0, 0.0, top, h);
            let chosen = greedy_env1(&env, &belief, 1, &mut rng).unwrap();
            assert_eq!(chosen, brute_force(&env, &[top; 11], &[h; 11]));
        }
    }

    fn rollout(v_prod: f64, seed: u64) -> crate::env::EpisodeResult {
        let prior = Arc::new(FaultedPrior::default());
        let real = Arc::new(sample_faulted(&prior, &mut seeded(seed)).unwrap());
        let mut env = Env2::new(real, prior, CostParams::default(), v_prod).unwrap();
        while !env.is_done() {
            let a = greedy_env2(&env);
            assert!(env.legal_actions()[a]);
            env.step(a).unwrap();
        }
        env.episode_result()
    }

    #[test]
    fn cheap_production_never_sidetracks() {
        for seed in 0..50 {
            let r = rollout(0.5, seed);
            assert_eq!(r.sidetracks, 0);
            assert_eq!(r.operating_cost, Some(1.8125));
        }
    }

    #[test]
    fn valuable_production_sidetracks_on_every_exit() {
        for seed in 0..50 {
            let r = rollout(4.0, seed);
            assert_eq!(r.sidetracks, r.exit_stages);
        }
    }
}

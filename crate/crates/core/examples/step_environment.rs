//! Drive both environments by hand through the `Environment` interface.

use std::sync::Arc;

use geosteer::env::{CostParams, Env1, Env1Config, Env2, Environment, Scenario1, SIDETRACK};
use geosteer::geomodel::{sample_faulted, sample_realization_env1, FaultedPrior, ForwardFnParams1};
use geosteer::rng::derived;

fn main() -> geosteer::Result<()> {
    let real = Arc::new(sample_realization_env1(&ForwardFnParams1::default(), &mut derived(11, &[0]))?);
    let mut env = Env1::new(real, Scenario1 { w1: 0.67, w2: 0.33, perm_low: 100.0 }, Env1Config::default())?;
    println!("layered: {} actions, {} observation values", env.num_actions(), env.observation_len());
    // hold inclination for the whole well
    while !env.is_done() {
        let t = env.step(5)?;
        println!("  stage {:>2}: reward {:8.3}", env.stage(), t.reward);
    }
    let r = env.episode_result();
    println!("  total {:.2}, contact {:.1}%, high quality {:.1}%", r.total_reward, r.reservoir_contact, r.high_quality.unwrap_or(0.0));

    let prior = Arc::new(FaultedPrior::default());
    let real = Arc::new(sample_faulted(&prior, &mut derived(11, &[1]))?);
    let mut env = Env2::new(real, prior, CostParams::default(), 4.0)?;
    println!("\nfaulted: {} actions, {} observation values", env.num_actions(), env.observation_len());
    while !env.is_done() {
        let legal = env.legal_actions();
        // sidetrack whenever allowed, otherwise hold depth
        let a = if legal[SIDETRACK] { SIDETRACK } else { 2 };
        let inside = env.in_reservoir();
        let t = env.step(a)?;
        if a == SIDETRACK || !inside {
            println!("  point {:>2}: action {a} reward {:+.4}", env.point(), t.reward);
        }
    }
    let r = env.episode_result();
    println!(
        "  total {:.3}, contact {:.1}%, cost {:.4}, sidetracks {}",
        r.total_reward,
        r.reservoir_contact,
        r.operating_cost.unwrap_or(0.0),
        r.sidetracks
    );
    println!("  sensor observation: {:?}", env.observe_sensor().iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>());
    Ok(())
}

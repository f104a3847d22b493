//! Solve the dynamic-programming policy of the faulted reservoir, follow it
//! on one realization and compare the realized reward with the solved value.

use std::sync::Arc;

use geosteer::agents::{dsdp_act, dsdp_solve, DsdpConfig};
use geosteer::env::{CostParams, Env2, Environment};
use geosteer::geomodel::{sample_faulted, FaultedPrior};
use geosteer::rng::derived;

fn main() -> geosteer::Result<()> {
    let prior = FaultedPrior::default();
    let costs = CostParams::default();
    for v_prod in [0.5, 2.0, 4.0] {
        let start = std::time::Instant::now();
        let policy = dsdp_solve(&prior, &costs, v_prod, &DsdpConfig::default())?;
        println!(
            "v_prod {v_prod}: expected reward {:.4}, solved in {:.0} ms",
            policy.root_value(),
            start.elapsed().as_secs_f64() * 1e3
        );

        let mut total = 0.0;
        let n = 200;
        for k in 0..n {
            let real = Arc::new(sample_faulted(&prior, &mut derived(5, &[k]))?);
            let mut env = Env2::new(real, Arc::new(prior.clone()), costs.clone(), v_prod)?;
            while !env.is_done() {
                let a = dsdp_act(&policy, &env);
                env.step(a)?;
            }
            total += env.episode_result().total_reward;
        }
        println!("  mean over {n} realizations: {:.4}", total / n as f64);
    }

    let policy = dsdp_solve(&prior, &costs, 2.0, &DsdpConfig::default())?;
    let text = policy.to_text();
    println!("\npolicy table: {} lines, header: {}", text.lines().count(), text.lines().next().unwrap_or(""));
    Ok(())
}

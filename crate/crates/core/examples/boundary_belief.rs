//! Random-walk boundary belief ahead of the sensor and Monte-Carlo stage
//! reward estimates for every inclination change.

use std::sync::Arc;

use geosteer::bayes::{expected_stage_rewards, BoundaryBelief};
use geosteer::env::{Env1, Env1Config, Scenario1, ENV1_ACTIONS_DEG};
use geosteer::geomodel::{sample_realization_env1, ForwardFnParams1};
use geosteer::rng::derived;

fn main() -> geosteer::Result<()> {
    let belief = BoundaryBelief::anchored(10, 0.4, 0.2, 1000.0, 25.0);
    for k in [0, 1, 5, 10] {
        println!(
            "{k:>2} points ahead: top {:.1} +/- {:.2}, thickness {:.1} +/- {:.2}",
            belief.mean_top[k],
            belief.var_top[k].sqrt(),
            belief.mean_thickness[k],
            belief.var_thickness[k].sqrt()
        );
    }
    let updated = belief.condition_on_measurement(1001.5, 24.0);
    println!("after a measurement: top {:.1}, sd at 10 = {:.2}\n", updated.mean_top[10], updated.var_top[10].sqrt());

    let real = Arc::new(sample_realization_env1(&ForwardFnParams1::default(), &mut derived(3, &[0]))?);
    let env = Env1::new(real, Scenario1 { w1: 0.67, w2: 0.33, perm_low: 100.0 }, Env1Config::default())?;
    let values = expected_stage_rewards(&env.belief(0.4, 0.2), &env, 200, &mut derived(3, &[1]))?;
    for (deg, v) in ENV1_ACTIONS_DEG.iter().zip(&values) {
        println!("{deg:>+5.1} deg: {v:8.3}");
    }
    Ok(())
}

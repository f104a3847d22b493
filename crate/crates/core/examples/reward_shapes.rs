//! Point rewards across and beyond the reservoir, and stage rewards under
//! both objective weightings.

use geosteer::env::reward::{normalized_distance, reward_r1, reward_r2, stage_reward_env1, stage_reward_env2};
use geosteer::env::CostParams;

fn main() -> geosteer::Result<()> {
    println!("{:>6} {:>10}", "x", "r1(x)");
    // x is at most 0.5, reached midway between the boundaries
    for k in -4..=5 {
        let x = k as f64 / 10.0;
        println!("{x:>6.1} {:>10.5}", reward_r1(x));
    }

    println!("\n{:>6} {:>10}", "y mD", "r2(y)");
    for y in [0.0, 20.0, 50.0, 100.0, 150.0, 200.0] {
        println!("{y:>6} {:>10.5}", reward_r2(y));
    }

    // a 20 m thick reservoir with its top at 1000 m
    let (top, bottom) = (1000.0, 1020.0);
    for tvd in [995.0, 1000.0, 1005.0, 1010.0, 1025.0] {
        println!("tvd {tvd:>7.1}: x = {:.3}", normalized_distance(tvd, top, bottom));
    }

    let r1: Vec<f64> = (0..10).map(|i| reward_r1(0.3 + 0.02 * i as f64)).collect();
    let r2 = vec![reward_r2(200.0); 10];
    for (w1, w2) in [(0.67, 0.33), (0.41, 0.59)] {
        println!("stage reward w1={w1} w2={w2}: {:.4}", stage_reward_env1(w1, w2, &r1, &r2)?);
    }

    let costs = CostParams::default();
    for (inside, sidetracked) in [(true, false), (false, false), (true, true)] {
        println!(
            "faulted stage inside={inside} sidetracked={sidetracked}: {:.4}",
            stage_reward_env2(inside, sidetracked, &costs, 2.0)
        );
    }
    Ok(())
}

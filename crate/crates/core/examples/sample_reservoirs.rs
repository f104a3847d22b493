//! Draw ground-truth reservoirs for both environments and print them as
//! columns.

use geosteer::geomodel::{sample_faulted, sample_realization_env1, FaultedPrior, ForwardFnParams1};
use geosteer::rng::derived;

fn main() -> geosteer::Result<()> {
    let layered = ForwardFnParams1::default();
    let r = sample_realization_env1(&layered, &mut derived(7, &[0]))?;
    let text = r.to_columnar();
    for line in text.lines().take(12) {
        println!("{line}");
    }
    let (lo, hi) = r
        .thickness
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &h| (a.min(h), b.max(h)));
    println!("... {} points, thickness {lo:.2}..{hi:.2} m\n", r.n_points());

    let prior = FaultedPrior::default();
    for k in 0..3 {
        let f = sample_faulted(&prior, &mut derived(7, &[1, k]))?;
        let faults: Vec<String> = f
            .fault_draws
            .iter()
            .map(|d| format!("{:.0} m ({:+.2})", d.location, d.displacement))
            .collect();
        println!("faulted #{k}: {}", faults.join(", "));
        println!("  upper at 0/15/29: {:.2} {:.2} {:.2}", f.upper[0], f.upper[15], f.upper[29]);
    }
    Ok(())
}

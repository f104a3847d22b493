//! Sequential update of the fault belief as throws are observed point by
//! point.

use geosteer::bayes::FaultBelief;
use geosteer::geomodel::FaultedPrior;

fn show(label: &str, b: &FaultBelief) {
    let marg: Vec<String> = b
        .location_marginal(0)
        .iter()
        .map(|(p, w)| format!("p{p}={w:.3}"))
        .collect();
    println!("{label:<24} fault 0: {}  mask {:03b}", marg.join(" "), b.occurred_mask());
}

fn main() -> geosteer::Result<()> {
    let prior = FaultedPrior::default();
    let mut belief = FaultBelief::prior(&prior.faults, prior.dx)?;
    println!("{} joint hypotheses", belief.hypotheses.len());
    show("prior", &belief);

    for point in 1..=4 {
        belief = belief.condition_on_offset(point, 0.0)?;
        show(&format!("no throw at {point}"), &belief);
    }
    for (w, mean, var) in belief.throw_mixture(5) {
        println!("  throw at 5: weight {w:.3}, mean {:.1}, sd {:.2}", mean + 0.0, var.max(0.0).sqrt());
    }
    belief = belief.condition_on_offset(5, 3.4)?;
    show("throw 3.4 m at 5", &belief);
    println!("next fault ahead: {:?}", belief.next_fault());
    Ok(())
}

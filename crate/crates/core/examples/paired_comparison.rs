//! Greedy against the dynamic-programming policy on one paired sequence of
//! evaluation realizations, written out as CSV and JSON.

use std::path::PathBuf;

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::baseline;
use geosteer::harness::export::write_comparison;
use geosteer::harness::{compare, ExperimentConfig};

fn main() -> geosteer::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/example_compare".into()));
    let mut config = ExperimentConfig::default();
    config.env.id = EnvId::Faulted;
    config.harness.eval_realizations = 300;
    config.harness.cache_dir = Some(out.join("cache"));

    let contenders = [baseline(&config, AgentKind::Greedy)?, baseline(&config, AgentKind::Dsdp)?];
    let table = compare(&contenders, &config, config.harness.eval_seed)?;
    for v in &config.env.v_prod_eval {
        let setting = format!("v_prod={v}");
        let rows: Vec<_> = table.rows().into_iter().filter(|r| r.setting == setting).collect();
        let (g, d) = (&rows[0], &rows[1]);
        println!(
            "{setting:<12} greedy {:7.3} ({:5.1}%)  dsdp {:7.3} ({:5.1}%)  gain {:+.1}%",
            g.reward,
            g.contact,
            d.reward,
            d.contact,
            100.0 * (d.reward - g.reward) / g.reward.abs()
        );
    }
    for p in write_comparison(&out, &table)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

//! Greedy baselines on a handful of realizations of each environment.

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::baseline;
use geosteer::harness::{evaluate, ExperimentConfig};

fn main() -> geosteer::Result<()> {
    for env in [EnvId::Layered, EnvId::Faulted] {
        let mut config = ExperimentConfig::default();
        config.env.id = env;
        config.agent.kind = AgentKind::Greedy;
        config.harness.eval_realizations = 40;
        let report = evaluate(&baseline(&config, AgentKind::Greedy)?, &config, 2024)?;
        println!("{}:", env.as_str());
        for row in &report.rows {
            println!(
                "  {:<32} reward {:8.3} contact {:6.2}%",
                row.setting, row.reward, row.contact
            );
        }
        if env == EnvId::Faulted {
            for v in &config.env.v_prod_eval {
                let label = format!("v_prod={v}");
                let sidetracks: usize = report
                    .records
                    .iter()
                    .filter(|r| r.setting == label)
                    .map(|r| r.sidetracks)
                    .sum();
                println!("  sidetracks at {label}: {sidetracks}");
            }
        }
    }
    Ok(())
}

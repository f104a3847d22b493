//! Tabular Q-learning on the faulted reservoir, compared with greedy on the
//! same evaluation realizations.

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::baseline;
use geosteer::harness::{compare, train_multi_seed, Contender, ExperimentConfig, TrainingCurve};

fn main() -> geosteer::Result<()> {
    let mut config = ExperimentConfig::default();
    config.env.id = EnvId::Faulted;
    config.agent.kind = AgentKind::QTable;
    config.harness.seeds = vec![0, 1, 2];
    config.harness.episodes = 20_000;
    config.harness.eval_realizations = 300;

    let outputs = train_multi_seed(&config)?;
    for o in &outputs {
        let ma = TrainingCurve::moving_average(&o.curve.reward);
        println!(
            "seed {}: first window {:.3}, last window {:.3}",
            o.seed,
            ma[TrainingCurve::WINDOW - 1].unwrap_or(f64::NAN),
            ma.last().copied().flatten().unwrap_or(f64::NAN)
        );
    }
    let table = compare(
        &[baseline(&config, AgentKind::Greedy)?, Contender::from_training(&config, outputs)?],
        &config,
        config.harness.eval_seed,
    )?;
    for r in table.rows() {
        println!("{:<8} {:<12} reward {:8.3} contact {:6.2}%", r.method, r.setting, r.reward, r.contact);
    }
    Ok(())
}

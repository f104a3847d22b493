//! SVG cross-sections of the greedy and dynamic-programming wells on one
//! evaluation realization.

use std::path::PathBuf;

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::evaluate::baseline;
use geosteer::harness::export::write_file;
use geosteer::harness::plot::plot_trajectories;
use geosteer::harness::ExperimentConfig;

fn main() -> geosteer::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/example_plots".into()));
    let mut config = ExperimentConfig::default();
    config.env.id = EnvId::Faulted;
    config.harness.cache_dir = Some(out.join("cache"));
    let contenders = [baseline(&config, AgentKind::Greedy)?, baseline(&config, AgentKind::Dsdp)?];
    for k in [0, 1] {
        for (name, svg) in plot_trajectories(&config, &contenders, config.harness.eval_seed, k)? {
            let path = out.join(format!("{name}.svg"));
            write_file(&path, svg)?;
            println!("wrote {}", path.display());
        }
    }

    config.env.id = EnvId::Layered;
    let greedy = [baseline(&config, AgentKind::Greedy)?];
    for (name, svg) in plot_trajectories(&config, &greedy, config.harness.eval_seed, 0)? {
        let path = out.join(format!("layered_{name}.svg"));
        write_file(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

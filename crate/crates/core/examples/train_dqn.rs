//! Train a sensor-observation DQN on the faulted reservoir for a few seeds,
//! write checkpoints and training curves, and reload one checkpoint.
//!
//! ```text
//! cargo run --release --example train_dqn -- [episodes] [out_dir]
//! ```

use std::path::PathBuf;

use geosteer::agents::AgentKind;
use geosteer::env::EnvId;
use geosteer::harness::export::{curves_csv, read_checkpoint, write_checkpoint, write_file};
use geosteer::harness::{train_multi_seed, ExperimentConfig, TrainingCurve};

fn main() -> geosteer::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|a| a.parse().ok()).unwrap_or(400);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example_dqn".into()));

    let mut config = ExperimentConfig::default();
    config.env.id = EnvId::Faulted;
    config.agent.kind = AgentKind::DqnSensor;
    config.harness.seeds = vec![0, 1];
    config.harness.episodes = episodes;

    let start = std::time::Instant::now();
    let outputs = train_multi_seed(&config)?;
    println!("trained {} seeds x {episodes} episodes in {:.1} s", outputs.len(), start.elapsed().as_secs_f64());

    for o in &outputs {
        let ma = TrainingCurve::moving_average(&o.curve.contact);
        let last = ma.last().copied().flatten();
        println!("seed {}: final contact window {:?}", o.seed, last.map(|x| (x * 10.0).round() / 10.0));
        if let Some(ck) = o.agent.checkpoint() {
            let path = write_checkpoint(&out, ck)?;
            let back = read_checkpoint(&path)?;
            assert_eq!(&back, ck);
            println!("  wrote {} ({} parameters)", path.display(), back.net.param_count());
        }
    }
    write_file(&out.join("curves.csv"), curves_csv(&outputs))?;
    println!("wrote {}", out.join("curves.csv").display());
    Ok(())
}

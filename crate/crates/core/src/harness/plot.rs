//! Trajectory plots of several methods on one evaluation realization.

use super::config::ExperimentConfig;
use super::episode::{run_episode, EnvInstance, Realization, Setting};
use super::evaluate::Contender;
use super::export::{trajectory_svg, Series, PALETTE};
use crate::error::{Error, Result};
use crate::rng::derived;

fn boundary(label: &str, values: Vec<f64>, dashed: bool) -> Series {
    Series {
        label: label.into(),
        values,
        colour: if dashed { "#555555" } else { "black" },
        dashed,
    }
}

/// One SVG per evaluation setting, named `trajectory_<k>_<setting index>`.
/// Learned methods are drawn with their first seed. Uses the same streams
/// as evaluation, so each line is the episode scored there.
pub fn plot_trajectories(
    config: &ExperimentConfig,
    contenders: &[Contender],
    eval_seed: u64,
    k: usize,
) -> Result<Vec<(String, String)>> {
    let realization = Realization::sample(config, &mut derived(eval_seed, &[k as u64]))?;
    let (dx, bounds) = match &realization {
        Realization::Layered(r) => {
            let n = r.n_points();
            (
                r.dx,
                vec![
                    boundary("top", r.top.clone(), false),
                    boundary("bottom", (0..n).map(|i| r.bottom(i)).collect(), false),
                    boundary("high-quality base", (0..n).map(|i| r.hq_boundary(i)).collect(), true),
                ],
            )
        }
        Realization::Faulted(r) => {
            let n = r.n_points();
            (
                r.dx,
                vec![
                    boundary("upper", r.upper.clone(), false),
                    boundary("lower", (0..n).map(|j| r.lower(j)).collect(), false),
                ],
            )
        }
    };
    let mut out = Vec::new();
    for (si, setting) in Setting::evaluation_set(config).into_iter().enumerate() {
        let mut wells = Vec::new();
        for (ci, c) in contenders.iter().enumerate() {
            let (_, agent) = c
                .members
                .first()
                .ok_or_else(|| Error::Usage(format!("`{}` has no policy", c.method)))?;
            let mut env = EnvInstance::new(config, &realization, setting)?;
            let mut rng = derived(eval_seed, &[k as u64, 1 + si as u64]);
            let result = run_episode(agent.as_ref(), &mut env, &mut rng)?;
            wells.push(Series {
                label: format!("{} ({:.2})", c.method, result.total_reward),
                values: env.trajectory().to_vec(),
                colour: PALETTE[ci % PALETTE.len()],
                dashed: false,
            });
        }
        let title = format!("{} realization {k}, {}", config.env.id.as_str(), setting.label());
        out.push((format!("trajectory_{k}_{si}"), trajectory_svg(&title, dx, &bounds, &wells)));
    }
    Ok(out)
}

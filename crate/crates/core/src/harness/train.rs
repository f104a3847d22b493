//! Per-seed training of the learned agents.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::episode::{normalization, EnvInstance, Realization, Setting};
use crate::agents::dqn::{select_action, CheckpointMeta};
use crate::agents::{
    env2_key, observation, AgentKind, DqnAgent, DqnCheckpoint, DqnLearner, Env2Key, Experience, QTable, QTableAgent,
};
use crate::env::{EnvId, Environment, EpisodeResult, ObservationMode};
use crate::error::{Error, Result};
use crate::neural::QNetwork;
use crate::rng::{derived, StreamRng};

/// Stream labels under a training seed.
const STREAM_INIT: u64 = 0;
const STREAM_AGENT: u64 = 1;
const STREAM_EPISODE: u64 = 2;

/// Per-episode training metrics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub reward: Vec<f64>,
    pub contact: Vec<f64>,
    /// High-quality percent (layered) or operating cost (faulted).
    pub secondary: Vec<f64>,
}

impl TrainingCurve {
    pub const WINDOW: usize = 100;

    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn push(&mut self, r: &EpisodeResult) {
        self.reward.push(r.total_reward);
        self.contact.push(r.reservoir_contact);
        self.secondary
            .push(r.high_quality.or(r.operating_cost).unwrap_or(f64::NAN));
    }

    /// Trailing mean over the last `WINDOW` episodes; `None` before episode 100.
    pub fn moving_average(series: &[f64]) -> Vec<Option<f64>> {
        let w = Self::WINDOW;
        let mut out = vec![None; series.len()];
        let mut sum = 0.0;
        for (i, x) in series.iter().enumerate() {
            sum += x;
            if i >= w {
                sum -= series[i - w];
            }
            if i + 1 >= w {
                out[i] = Some(sum / w as f64);
            }
        }
        out
    }

    /// Last-window minus first-window mean contact, percentage points.
    pub fn contact_rise(&self) -> Option<f64> {
        let w = Self::WINDOW;
        let n = self.contact.len();
        if n < w {
            return None;
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        Some(mean(&self.contact[n - w..]) - mean(&self.contact[..w]))
    }
}

#[derive(Clone, Debug)]
pub enum TrainedAgent {
    Dqn(DqnCheckpoint),
    QTable(QTableAgent),
}

impl TrainedAgent {
    pub fn checkpoint(&self) -> Option<&DqnCheckpoint> {
        match self {
            TrainedAgent::Dqn(c) => Some(c),
            TrainedAgent::QTable(_) => None,
        }
    }

    pub fn into_agent(self, config: &ExperimentConfig) -> Box<dyn crate::agents::Agent> {
        match self {
            TrainedAgent::Dqn(checkpoint) => Box::new(DqnAgent {
                checkpoint,
                belief: config.agent.belief(),
            }),
            TrainedAgent::QTable(q) => Box::new(q),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub seed: u64,
    pub agent: TrainedAgent,
    pub curve: TrainingCurve,
}

fn observation_mode(kind: AgentKind) -> Result<ObservationMode> {
    match kind {
        AgentKind::DqnSensor => Ok(ObservationMode::Sensor),
        AgentKind::DqnPosterior => Ok(ObservationMode::Posterior),
        other => Err(Error::config("agent", format!("`{}` is not a network agent", other.as_str()))),
    }
}

fn episode_env(config: &ExperimentConfig, seed: u64, episode: usize) -> Result<EnvInstance> {
    let mut rng = derived(seed, &[STREAM_EPISODE, episode as u64]);
    let realization = Realization::sample(config, &mut rng)?;
    let setting = Setting::sample_training(config, &mut rng);
    EnvInstance::new(config, &realization, setting)
}

/// Trains one learned agent. Deterministic in `(config, seed)`.
pub fn train_agent(config: &ExperimentConfig, seed: u64) -> Result<TrainOutput> {
    config.validate()?;
    match config.agent.kind {
        AgentKind::DqnSensor | AgentKind::DqnPosterior => train_dqn(config, seed),
        AgentKind::QTable => train_qtable(config, seed),
        other => Err(Error::config(
            "agent",
            format!("`{}` is not trained", other.as_str()),
        )),
    }
}

fn train_dqn(config: &ExperimentConfig, seed: u64) -> Result<TrainOutput> {
    let mode = observation_mode(config.agent.kind)?;
    let belief = config.agent.belief();
    let probe = episode_env(config, seed, 0)?;
    let input_len = observation(probe.view(), mode, belief)?.len();
    let n_actions = config.env.id.num_actions();
    let dqn = &config.agent.dqn;
    let mut learner = DqnLearner::new(input_len, n_actions, dqn.clone(), &mut derived(seed, &[STREAM_INIT]))?;
    let mut rng = derived(seed, &[STREAM_AGENT]);
    let episodes = config.harness.episodes;
    let mut curve = TrainingCurve::default();
    for ep in 0..episodes {
        let mut env = episode_env(config, seed, ep)?;
        let epsilon = dqn.epsilon(ep, episodes);
        let reward_unit = match &env {
            EnvInstance::Faulted(e) if dqn.per_unit_value => e.v_prod(),
            _ => 1.0,
        };
        let mut obs = observation(env.view(), mode, belief)?;
        while !env.env().is_done() {
            let legal = env.env().legal_actions();
            let action = select_action(&learner.net, &obs, epsilon, &legal, &mut rng)?;
            let t = env.step(action)?;
            let next_obs = observation(env.view(), mode, belief)?;
            let experience = Experience {
                obs: std::mem::replace(&mut obs, next_obs.clone()),
                action,
                reward: t.reward / reward_unit,
                next_obs,
                done: t.done,
                legal_next: env.env().legal_actions(),
            };
            learner.observe(experience, &mut rng)?;
        }
        curve.push(&env.env().episode_result());
        if (ep + 1) % 500 == 0 {
            log::debug!(
                "seed {seed} episode {}: eps {epsilon:.3} ma contact {:.1}",
                ep + 1,
                TrainingCurve::moving_average(&curve.contact)[ep].unwrap_or(f64::NAN)
            );
        }
    }
    let meta = CheckpointMeta {
        env: config.env.id,
        observation: mode,
        n_actions,
        input_len,
        normalization: normalization(config),
        seed,
        episodes,
    };
    Ok(TrainOutput {
        seed,
        agent: TrainedAgent::Dqn(DqnCheckpoint { meta, net: learner.net }),
        curve,
    })
}

fn epsilon_greedy_table(
    table: &QTable<Env2Key>,
    key: &Env2Key,
    legal: &[bool],
    epsilon: f64,
    rng: &mut StreamRng,
) -> usize {
    if rng.random::<f64>() < epsilon {
        let options: Vec<usize> = (0..legal.len()).filter(|&a| legal[a]).collect();
        options[rng.random_range(0..options.len())]
    } else {
        table.best_action(key, legal).expect("a legal action exists")
    }
}

/// Tabular Q-learning on the faulted reservoir, state keyed by stage,
/// crossed-fault mask and depth bin.
fn train_qtable(config: &ExperimentConfig, seed: u64) -> Result<TrainOutput> {
    if config.env.id != EnvId::Faulted {
        return Err(Error::config("agent", "qtable is only defined for env ex2"));
    }
    let q = &config.agent.qtable;
    let mut table = QTable::new(config.env.id.num_actions(), q.alpha, q.gamma)?;
    let mut rng = derived(seed, &[STREAM_AGENT]);
    let episodes = config.harness.episodes;
    let mut curve = TrainingCurve::default();
    for ep in 0..episodes {
        let EnvInstance::Faulted(mut env) = episode_env(config, seed, ep)? else {
            unreachable!("faulted config yields faulted envs")
        };
        let t = if episodes > 1 { ep as f64 / (episodes - 1) as f64 } else { 1.0 };
        let epsilon = q.epsilon_start + t * (q.epsilon_end - q.epsilon_start);
        while !env.is_done() {
            let key = env2_key(&env, q.bin_width);
            let legal = env.legal_actions();
            let action = epsilon_greedy_table(&table, &key, &legal, epsilon, &mut rng);
            let tr = env.step(action)?;
            let next_key = env2_key(&env, q.bin_width);
            let next_legal = env.legal_actions();
            let next = (!tr.done).then_some((&next_key, next_legal.as_slice()));
            table.update(&key, action, tr.reward, next)?;
        }
        curve.push(&env.episode_result());
    }
    Ok(TrainOutput {
        seed,
        agent: TrainedAgent::QTable(QTableAgent {
            table,
            bin_width: q.bin_width,
        }),
        curve,
    })
}

/// Trains every configured seed; results come back in seed order.
pub fn train_multi_seed(config: &ExperimentConfig) -> Result<Vec<TrainOutput>> {
    config.validate()?;
    config
        .harness
        .seeds
        .par_iter()
        .map(|&seed| {
            log::info!("training {} seed {seed}", config.agent.kind.as_str());
            train_agent(config, seed).map_err(|e| Error::Seed {
                seed,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Untrained network with the layout a config would produce.
pub fn fresh_network(config: &ExperimentConfig, seed: u64) -> Result<QNetwork> {
    let mode = observation_mode(config.agent.kind)?;
    let probe = episode_env(config, seed, 0)?;
    let input_len = observation(probe.view(), mode, config.agent.belief())?.len();
    QNetwork::new(
        &config.agent.dqn.layer_dims(input_len, config.env.id.num_actions()),
        &mut derived(seed, &[STREAM_INIT]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_starts_at_the_window() {
        let xs: Vec<f64> = (0..250).map(|i| i as f64).collect();
        let ma = TrainingCurve::moving_average(&xs);
        assert!(ma[..99].iter().all(Option::is_none));
        assert_eq!(ma[99], Some(49.5));
        assert_eq!(ma[249], Some((150..250).sum::<usize>() as f64 / 100.0));
    }

    #[test]
    fn zero_episodes_gives_an_untrained_checkpoint() {
        let mut c = ExperimentConfig::default();
        c.harness.episodes = 0;
        let out = train_agent(&c, 4).unwrap();
        assert!(out.curve.is_empty());
        let ck = out.agent.checkpoint().unwrap();
        assert_eq!(ck.net, fresh_network(&c, 4).unwrap());
        assert_eq!(ck.meta.input_len, 49);
    }

    #[test]
    fn non_learned_agents_are_not_trained() {
        let mut c = ExperimentConfig::default();
        c.agent.kind = AgentKind::Greedy;
        assert!(train_agent(&c, 0).is_err());
    }

    #[test]
    fn qtable_training_runs_on_ex2() {
        let mut c = ExperimentConfig::default();
        c.env.id = EnvId::Faulted;
        c.agent.kind = AgentKind::QTable;
        c.harness.episodes = 50;
        let out = train_agent(&c, 1).unwrap();
        assert_eq!(out.curve.len(), 50);
        match out.agent {
            TrainedAgent::QTable(q) => assert!(!q.table.is_empty()),
            _ => panic!("expected a table"),
        }
    }

    #[test]
    fn per_unit_value_divides_by_the_production_value() {
        let mut c = ExperimentConfig::default();
        c.env.id = EnvId::Faulted;
        c.env.costs.v_prod_range = [2.0, 2.0];
        c.harness.episodes = 60;
        c.agent.dqn.warmup = 64;
        let mut per_unit = c.clone();
        per_unit.agent.dqn.per_unit_value = true;
        let mut halved = c.clone();
        halved.agent.dqn.reward_scale = 0.5;
        let net = |c: &ExperimentConfig| train_agent(c, 2).unwrap().agent.checkpoint().unwrap().net.clone();
        let a = net(&per_unit);
        assert_eq!(a, net(&halved));
        assert_ne!(a, net(&c));
    }
}

//! Realizations, settings and single-episode rollouts.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::agents::{Agent, EnvView};
use crate::env::env1::{INCLINATION_SCALE_DEG, PERM_SCALE};
use crate::env::env2::V_PROD_SCALE;
use crate::env::{Env1, Env2, EnvId, EpisodeResult, Environment, Scenario1, Transition};
use crate::error::Result;
use crate::geomodel::{sample_faulted, sample_realization_env1, FaultedPrior, GeoRealization1, GeoRealization2};
use crate::rng::StreamRng;

/// Sampled ground truth for one episode.
#[derive(Clone, Debug)]
pub enum Realization {
    Layered(Arc<GeoRealization1>),
    Faulted(Arc<GeoRealization2>),
}

impl Realization {
    pub fn sample(config: &ExperimentConfig, rng: &mut StreamRng) -> Result<Self> {
        Ok(match config.env.id {
            EnvId::Layered => Realization::Layered(Arc::new(sample_realization_env1(&config.geomodel.layered, rng)?)),
            EnvId::Faulted => Realization::Faulted(Arc::new(sample_faulted(&config.geomodel.faulted, rng)?)),
        })
    }

    /// First 16 hex digits of a SHA-256 over the exact boundary values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut feed = |xs: &[f64]| xs.iter().for_each(|x| h.update(x.to_le_bytes()));
        match self {
            Realization::Layered(r) => {
                feed(&r.top);
                feed(&r.thickness);
            }
            Realization::Faulted(r) => {
                feed(&r.upper);
                feed(&[r.thickness]);
            }
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Objective scenario (layered) or production value (faulted) of an episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    Layered(Scenario1),
    Faulted { v_prod: f64 },
}

impl Setting {
    pub fn label(&self) -> String {
        match self {
            Setting::Layered(s) => format!("w1={} w2={} perm_low={}", s.w1, s.w2, s.perm_low),
            Setting::Faulted { v_prod } => format!("v_prod={v_prod}"),
        }
    }

    /// Settings reported separately at evaluation.
    pub fn evaluation_set(config: &ExperimentConfig) -> Vec<Setting> {
        match config.env.id {
            EnvId::Layered => config.env.scenarios.iter().map(|&s| Setting::Layered(s)).collect(),
            EnvId::Faulted => config
                .env
                .v_prod_eval
                .iter()
                .map(|&v_prod| Setting::Faulted { v_prod })
                .collect(),
        }
    }

    /// Training draw: a uniform scenario pair, or a uniform production value.
    pub fn sample_training(config: &ExperimentConfig, rng: &mut StreamRng) -> Setting {
        match config.env.id {
            EnvId::Layered => {
                let k = rng.random_range(0..config.env.scenarios.len());
                Setting::Layered(config.env.scenarios[k])
            }
            EnvId::Faulted => {
                let [lo, hi] = config.env.costs.v_prod_range;
                let v_prod = if hi > lo { rng.random_range(lo..hi) } else { lo };
                Setting::Faulted { v_prod }
            }
        }
    }
}

/// A live environment of either kind.
#[derive(Clone, Debug)]
pub enum EnvInstance {
    Layered(Env1),
    Faulted(Env2),
}

impl EnvInstance {
    pub fn new(config: &ExperimentConfig, realization: &Realization, setting: Setting) -> Result<Self> {
        Ok(match (realization, setting) {
            (Realization::Layered(r), Setting::Layered(s)) => {
                EnvInstance::Layered(Env1::new(r.clone(), s, config.env.layered.clone())?)
            }
            (Realization::Faulted(r), Setting::Faulted { v_prod }) => EnvInstance::Faulted(Env2::new(
                r.clone(),
                Arc::new(config.geomodel.faulted.clone()),
                config.env.costs.clone(),
                v_prod,
            )?),
            _ => return Err(crate::error::Error::Usage("realization and setting belong to different envs".into())),
        })
    }

    pub fn view(&self) -> EnvView<'_> {
        match self {
            EnvInstance::Layered(e) => EnvView::Layered(e),
            EnvInstance::Faulted(e) => EnvView::Faulted(e),
        }
    }

    pub fn env(&self) -> &dyn Environment {
        match self {
            EnvInstance::Layered(e) => e,
            EnvInstance::Faulted(e) => e,
        }
    }

    pub fn step(&mut self, action: usize) -> Result<Transition> {
        match self {
            EnvInstance::Layered(e) => e.step(action),
            EnvInstance::Faulted(e) => e.step(action),
        }
    }

    pub fn trajectory(&self) -> &[f64] {
        match self {
            EnvInstance::Layered(e) => e.trajectory(),
            EnvInstance::Faulted(e) => e.trajectory(),
        }
    }
}

pub fn run_episode(agent: &dyn Agent, env: &mut EnvInstance, rng: &mut StreamRng) -> Result<EpisodeResult> {
    while !env.env().is_done() {
        let action = agent.act(env.view(), rng)?;
        env.step(action)?;
    }
    Ok(env.env().episode_result())
}

/// Divisors applied to observation entries, stored in checkpoints.
pub fn normalization(config: &ExperimentConfig) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    match config.env.id {
        EnvId::Layered => {
            m.insert("thickness_m".into(), config.env.layered.thickness_ref);
            m.insert("inclination_deg".into(), INCLINATION_SCALE_DEG);
            m.insert("position_points".into(), config.geomodel.layered.n_points as f64);
            m.insert("perm_low_md".into(), PERM_SCALE);
        }
        EnvId::Faulted => {
            let p: &FaultedPrior = &config.geomodel.faulted;
            m.insert("distance_m".into(), p.thickness);
            m.insert("position_m".into(), p.length());
            m.insert("v_prod".into(), V_PROD_SCALE);
        }
    }
    m
}

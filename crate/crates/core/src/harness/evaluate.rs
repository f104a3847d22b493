//! Paired evaluation on fresh realizations and robust summaries.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::episode::{run_episode, EnvInstance, Realization, Setting};
use super::train::TrainOutput;
use crate::agents::{dsdp_solve, Agent, AgentKind, DqnAgent, DqnCheckpoint, DsdpAgent, DsdpPolicy, GreedyAgent};
use crate::env::EnvId;
use crate::error::{Error, Result};
use crate::rng::derived;

pub const SCHEMA_VERSION: u32 = 1;

/// One evaluated episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Training seed of the policy; absent for single-policy methods.
    pub seed: Option<u64>,
    pub setting: String,
    pub realization: usize,
    pub realization_hash: String,
    pub reward: f64,
    pub contact: f64,
    pub high_quality: Option<f64>,
    pub operating_cost: Option<f64>,
    pub sidetracks: usize,
}

/// Means over the realizations of one setting for one policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingMeans {
    pub setting: String,
    pub n: usize,
    pub reward: f64,
    pub contact: f64,
    pub high_quality: Option<f64>,
    pub operating_cost: Option<f64>,
    pub sidetracks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: Option<u64>,
    pub settings: Vec<SettingMeans>,
}

/// Headline figures of one method under one setting. For learned methods
/// every figure is the median over seeds of the per-seed means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub setting: String,
    pub n_seeds: usize,
    pub n_realizations: usize,
    pub reward: f64,
    pub contact: f64,
    pub high_quality: Option<f64>,
    pub operating_cost: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub method: String,
    pub total_s: f64,
    pub episodes: usize,
    pub mean_episode_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub method: String,
    pub env: EnvId,
    pub eval_seed: u64,
    pub robust: bool,
    pub rows: Vec<ReportRow>,
    pub seeds: Vec<SeedReport>,
    pub records: Vec<EpisodeRecord>,
    /// Kept out of serialized reports so they stay byte-reproducible.
    #[serde(skip)]
    pub wall_clock: WallClock,
}

impl EvalReport {
    pub fn row(&self, setting: &Setting) -> Option<&ReportRow> {
        let label = setting.label();
        self.rows.iter().find(|r| r.setting == label)
    }
}

/// A method under evaluation: one policy, or one policy per training seed.
pub struct Contender {
    pub method: String,
    /// Summarize by the median of per-seed means.
    pub robust: bool,
    pub members: Vec<(Option<u64>, Box<dyn Agent>)>,
}

impl Contender {
    pub fn single(agent: Box<dyn Agent>) -> Self {
        Self {
            method: agent.name(),
            robust: false,
            members: vec![(None, agent)],
        }
    }

    pub fn from_checkpoints(config: &ExperimentConfig, checkpoints: Vec<DqnCheckpoint>) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(Error::Usage("no checkpoints to evaluate".into()));
        }
        let members: Vec<(Option<u64>, Box<dyn Agent>)> = checkpoints
            .into_iter()
            .map(|c| {
                let seed = c.meta.seed;
                let agent: Box<dyn Agent> = Box::new(DqnAgent {
                    checkpoint: c,
                    belief: config.agent.belief(),
                });
                (Some(seed), agent)
            })
            .collect();
        Ok(Self {
            method: members[0].1.name(),
            robust: true,
            members,
        })
    }

    pub fn from_training(config: &ExperimentConfig, outputs: Vec<TrainOutput>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::Usage("no trained policies to evaluate".into()));
        }
        let members: Vec<(Option<u64>, Box<dyn Agent>)> = outputs
            .into_iter()
            .map(|o| (Some(o.seed), o.agent.into_agent(config)))
            .collect();
        Ok(Self {
            method: members[0].1.name(),
            robust: true,
            members,
        })
    }
}

/// `r_RL`: median of the per-seed means; an even count averages the two
/// central values.
pub fn rl_robust(means: &[f64]) -> Result<f64> {
    if means.is_empty() {
        return Err(Error::Usage("median of an empty set".into()));
    }
    let mut v = means.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn setting_means(setting: &str, records: &[&EpisodeRecord]) -> SettingMeans {
    let opt_mean = |f: fn(&EpisodeRecord) -> Option<f64>| {
        records
            .iter()
            .map(|r| f(r))
            .collect::<Option<Vec<f64>>>()
            .map(|v| mean(v.into_iter()))
    };
    SettingMeans {
        setting: setting.to_string(),
        n: records.len(),
        reward: mean(records.iter().map(|r| r.reward)),
        contact: mean(records.iter().map(|r| r.contact)),
        high_quality: opt_mean(|r| r.high_quality),
        operating_cost: opt_mean(|r| r.operating_cost),
        sidetracks: mean(records.iter().map(|r| r.sidetracks as f64)),
    }
}

/// Rolls every member out on the same realization sequence: realization `k`
/// is drawn from `derived(eval_seed, [k])` for every method and setting.
pub fn evaluate(contender: &Contender, config: &ExperimentConfig, eval_seed: u64) -> Result<EvalReport> {
    config.validate()?;
    for (_, agent) in &contender.members {
        if agent.env_id() != config.env.id {
            return Err(Error::Usage(format!(
                "agent `{}` belongs to env {} but the config is env {}",
                agent.name(),
                agent.env_id().as_str(),
                config.env.id.as_str()
            )));
        }
    }
    let settings = Setting::evaluation_set(config);
    let n = config.harness.eval_realizations;
    let start = Instant::now();
    let mut records = Vec::new();
    let mut seeds = Vec::new();
    for (seed, agent) in &contender.members {
        let per_k: Vec<Vec<EpisodeRecord>> = (0..n)
            .into_par_iter()
            .map(|k| -> Result<Vec<EpisodeRecord>> {
                let realization = Realization::sample(config, &mut derived(eval_seed, &[k as u64]))?;
                let hash = realization.hash();
                settings
                    .iter()
                    .enumerate()
                    .map(|(si, &setting)| {
                        let mut env = EnvInstance::new(config, &realization, setting)?;
                        let mut rng = derived(eval_seed, &[k as u64, 1 + si as u64]);
                        let r = run_episode(agent.as_ref(), &mut env, &mut rng)?;
                        Ok(EpisodeRecord {
                            seed: *seed,
                            setting: setting.label(),
                            realization: k,
                            realization_hash: hash.clone(),
                            reward: r.total_reward,
                            contact: r.reservoir_contact,
                            high_quality: r.high_quality,
                            operating_cost: r.operating_cost,
                            sidetracks: r.sidetracks,
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut member_records: Vec<EpisodeRecord> = Vec::with_capacity(n * settings.len());
        for s in 0..settings.len() {
            member_records.extend(per_k.iter().map(|v| v[s].clone()));
        }
        let summaries = settings
            .iter()
            .map(|s| {
                let label = s.label();
                let sel: Vec<&EpisodeRecord> = member_records.iter().filter(|r| r.setting == label).collect();
                setting_means(&label, &sel)
            })
            .collect();
        seeds.push(SeedReport { seed: *seed, settings: summaries });
        records.extend(member_records);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let episodes = records.len();

    let mut rows = Vec::new();
    for (si, s) in settings.iter().enumerate() {
        let per_seed: Vec<&SettingMeans> = seeds.iter().map(|r| &r.settings[si]).collect();
        let pick = |f: &dyn Fn(&SettingMeans) -> f64| -> Result<f64> {
            let v: Vec<f64> = per_seed.iter().map(|m| f(m)).collect();
            if contender.robust {
                rl_robust(&v)
            } else {
                Ok(mean(v.into_iter()))
            }
        };
        let pick_opt = |f: fn(&SettingMeans) -> Option<f64>| -> Result<Option<f64>> {
            match per_seed.iter().map(|m| f(m)).collect::<Option<Vec<f64>>>() {
                Some(v) if contender.robust => rl_robust(&v).map(Some),
                Some(v) => Ok(Some(mean(v.into_iter()))),
                None => Ok(None),
            }
        };
        rows.push(ReportRow {
            method: contender.method.clone(),
            setting: s.label(),
            n_seeds: contender.members.len(),
            n_realizations: n,
            reward: pick(&|m| m.reward)?,
            contact: pick(&|m| m.contact)?,
            high_quality: pick_opt(|m| m.high_quality)?,
            operating_cost: pick_opt(|m| m.operating_cost)?,
        });
    }
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        method: contender.method.clone(),
        env: config.env.id,
        eval_seed,
        robust: contender.robust,
        rows,
        seeds,
        records,
        wall_clock: WallClock {
            method: contender.method.clone(),
            total_s: elapsed,
            episodes,
            mean_episode_ms: if episodes > 0 { 1e3 * elapsed / episodes as f64 } else { 0.0 },
        },
    })
}

/// Reports of several methods on one realization sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub env: EnvId,
    pub eval_seed: u64,
    pub reports: Vec<EvalReport>,
}

impl Comparison {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.reports.iter().flat_map(|r| r.rows.iter().cloned()).collect()
    }

    pub fn report(&self, method: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

pub fn compare(contenders: &[Contender], config: &ExperimentConfig, eval_seed: u64) -> Result<Comparison> {
    let reports = contenders
        .iter()
        .map(|c| evaluate(c, config, eval_seed))
        .collect::<Result<Vec<_>>>()?;
    let hashes = |r: &EvalReport| -> Vec<String> { r.records.iter().map(|e| e.realization_hash.clone()).collect() };
    if let Some(first) = reports.first() {
        let reference = hashes(first);
        let n = config.harness.eval_realizations * Setting::evaluation_set(config).len();
        for r in &reports[1..] {
            let h = hashes(r);
            if h.chunks(n).any(|chunk| chunk != &reference[..n]) {
                return Err(Error::Usage(format!("`{}` saw a different realization sequence", r.method)));
            }
        }
    }
    Ok(Comparison {
        schema_version: SCHEMA_VERSION,
        env: config.env.id,
        eval_seed,
        reports,
    })
}

pub fn greedy_agent(config: &ExperimentConfig) -> GreedyAgent {
    GreedyAgent {
        env: config.env.id,
        mc_samples: config.agent.greedy_mc_samples,
        belief: config.agent.belief(),
    }
}

/// Cache key over everything a solved table depends on.
pub fn dsdp_cache_key(config: &ExperimentConfig, v_prod: f64) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&config.geomodel.faulted).expect("prior serializes"));
    h.update(serde_json::to_vec(&config.env.costs).expect("costs serialize"));
    h.update(serde_json::to_vec(&config.agent.dsdp).expect("dsdp config serializes"));
    h.update(v_prod.to_le_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn solve_dsdp_cached(config: &ExperimentConfig, v_prod: f64, cache_dir: Option<&Path>) -> Result<DsdpPolicy> {
    let path = cache_dir.map(|d| d.join(format!("dsdp_{}.csv", dsdp_cache_key(config, v_prod))));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            log::debug!("dsdp cache hit {}", p.display());
            return DsdpPolicy::from_text(&text);
        }
    }
    let policy = dsdp_solve(&config.geomodel.faulted, &config.env.costs, v_prod, &config.agent.dsdp)?;
    if let (Some(p), Some(dir)) = (&path, cache_dir) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        std::fs::write(p, policy.to_text()).map_err(|e| Error::io(p, e))?;
    }
    Ok(policy)
}

/// One solved table per evaluated production value.
pub fn dsdp_agent(config: &ExperimentConfig) -> Result<DsdpAgent> {
    if config.env.id != EnvId::Faulted {
        return Err(Error::Usage("dsdp is only defined for env ex2".into()));
    }
    let cache = config.harness.cache_dir.as_deref();
    let policies = config
        .env
        .v_prod_eval
        .par_iter()
        .map(|&v| solve_dsdp_cached(config, v, cache))
        .collect::<Result<Vec<_>>>()?;
    Ok(DsdpAgent { policies })
}

/// Contender for a non-learned method.
pub fn baseline(config: &ExperimentConfig, kind: AgentKind) -> Result<Contender> {
    match kind {
        AgentKind::Greedy => Ok(Contender::single(Box::new(greedy_agent(config)))),
        AgentKind::Dsdp => Ok(Contender::single(Box::new(dsdp_agent(config)?))),
        other => Err(Error::Usage(format!("`{}` must be trained first", other.as_str()))),
    }
}

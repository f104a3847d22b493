//! Deep Q-network training primitives.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::replay::{Experience, ReplayBuffer};
use crate::env::{EnvId, ObservationMode};
use crate::error::{Error, Result};
use crate::neural::{apply_update, OptimizerKind, OptimizerState, QNetwork, TrainingBatch};
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Training steps between target-network refreshes.
    pub target_sync: i64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Transitions collected before the first training step.
    pub warmup: usize,
    /// Environment steps per training step.
    pub train_every: usize,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Rewards below this value enter the replay buffer compressed to
    /// `floor - ln(1 + floor - r)`, before scaling. Evaluation always
    /// reports the true reward.
    pub reward_floor: Option<f64>,
    /// Faulted env: train on rewards divided by the episode's production
    /// value, which leaves each episode's optimal policy unchanged.
    pub per_unit_value: bool,
    /// Clamp on the TD error inside the gradient. `None` keeps the plain
    /// squared-error gradient.
    pub error_clip: Option<f64>,
    pub optimizer: OptimizerKind,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64],
            buffer_capacity: 50_000,
            batch_size: 64,
            target_sync: 500,
            gamma: 1.0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            warmup: 1_000,
            train_every: 1,
            reward_scale: 1.0,
            reward_floor: None,
            per_unit_value: false,
            error_clip: None,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer sizes must be positive"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be at least 1"));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::config("batch_size", "must lie in 1..=buffer_capacity"));
        }
        if self.target_sync <= 0 {
            return Err(Error::config("target_sync", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        if !(self.epsilon_decay_fraction > 0.0 && self.epsilon_decay_fraction <= 1.0) {
            return Err(Error::config("epsilon_decay_fraction", "must lie in (0, 1]"));
        }
        if self.train_every == 0 {
            return Err(Error::config("train_every", "must be at least 1"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::config("reward_scale", "must be positive"));
        }
        if self.reward_floor.is_some_and(|f| !f.is_finite()) {
            return Err(Error::config("reward_floor", "must be finite"));
        }
        if self.error_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::config("error_clip", "must be positive"));
        }
        match self.optimizer {
            OptimizerKind::Adam { lr, .. } | OptimizerKind::Sgd { lr } if !(lr > 0.0) => {
                Err(Error::config("optimizer", "learning rate must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Linear decay to `epsilon_end` over the first part of training.
    pub fn epsilon(&self, episode: usize, total_episodes: usize) -> f64 {
        let horizon = self.epsilon_decay_fraction * total_episodes as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let t = (episode as f64 / horizon).min(1.0);
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }

    pub fn layer_dims(&self, input_len: usize, n_actions: usize) -> Vec<usize> {
        let mut dims = vec![input_len];
        dims.extend(&self.hidden);
        dims.push(n_actions);
        dims
    }
}

fn argmax_legal(q: &[f64], legal: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (a, &ok) in legal.iter().enumerate().take(q.len()) {
        if ok && best.is_none_or(|b| q[a] > q[b]) {
            best = Some(a);
        }
    }
    best
}

/// Epsilon-greedy over the legal actions; greedy ties go to the lowest index.
pub fn select_action(
    net: &QNetwork,
    obs: &[f64],
    epsilon: f64,
    legal: &[bool],
    rng: &mut StreamRng,
) -> Result<usize> {
    let n_legal = legal.iter().filter(|&&l| l).count();
    if n_legal == 0 {
        return Err(Error::Usage("no legal action".into()));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let k = rng.random_range(0..n_legal);
        return Ok(legal
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l)
            .nth(k)
            .map(|(a, _)| a)
            .expect("k < n_legal"));
    }
    let q = net.forward(obs)?;
    argmax_legal(&q, legal).ok_or_else(|| Error::Usage("no legal action within the network outputs".into()))
}

/// One gradient step on a uniform minibatch. Returns `None` without touching
/// the network while the buffer holds fewer than `batch_size` experiences.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    buffer: &ReplayBuffer,
    config: &DqnConfig,
    optimizer: &mut OptimizerState,
    rng: &mut StreamRng,
) -> Result<Option<f64>> {
    let batch_size = config.batch_size;
    if buffer.len() < batch_size || batch_size == 0 {
        return Ok(None);
    }
    let batch: Vec<&Experience> = buffer.sample(batch_size, rng);
    let mut td = td_batch(target, &batch, config.gamma)?;
    td.error_clip = config.error_clip;
    let (loss, grads) = net.loss_and_gradients(&td)?;
    apply_update(net, &grads, optimizer);
    Ok(Some(loss))
}

/// Identity above `floor`, logarithmic below it; monotone and continuous.
pub fn soft_floor(r: f64, floor: f64) -> f64 {
    if r >= floor {
        r
    } else {
        floor - (floor - r).ln_1p()
    }
}

/// Regression targets `r` (terminal) or `r + gamma max_legal Q_target(s')`.
pub fn td_batch(target: &QNetwork, batch: &[&Experience], gamma: f64) -> Result<TrainingBatch> {
    let n_in = target.input_len();
    let n_out = target.output_len();
    let mut next = Vec::with_capacity(batch.len() * n_in);
    let mut observations = Vec::with_capacity(batch.len() * n_in);
    for e in batch {
        observations.extend_from_slice(&e.obs);
        next.extend_from_slice(&e.next_obs);
    }
    let q_next = if gamma > 0.0 {
        target.forward_batch(&next, batch.len())?
    } else {
        Vec::new()
    };
    let targets = batch
        .iter()
        .enumerate()
        .map(|(b, e)| {
            if e.done || gamma == 0.0 {
                return e.reward;
            }
            let row = &q_next[b * n_out..(b + 1) * n_out];
            let best = argmax_legal(row, &e.legal_next).map_or(0.0, |a| row[a]);
            e.reward + gamma * best
        })
        .collect();
    Ok(TrainingBatch {
        observations,
        actions: batch.iter().map(|e| e.action).collect(),
        targets,
        error_clip: None,
    })
}

/// Copies the online weights into `target` when `counter` is a multiple of
/// `c`. Returns whether a copy happened.
pub fn target_sync(net: &QNetwork, target: &mut QNetwork, counter: u64, c: i64) -> Result<bool> {
    if c <= 0 {
        return Err(Error::config("target_sync", "must be positive"));
    }
    if counter.is_multiple_of(c as u64) {
        *target = net.clone_weights();
        Ok(true)
    } else {
        Ok(false)
    }
}

pub fn weights_hash(net: &QNetwork) -> String {
    let digest = Sha256::digest(net.to_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Online network, target copy, optimizer and replay memory of one trainer.
#[derive(Clone, Debug)]
pub struct DqnLearner {
    pub config: DqnConfig,
    pub net: QNetwork,
    pub target: QNetwork,
    pub optimizer: OptimizerState,
    pub buffer: ReplayBuffer,
    pub env_steps: u64,
    pub train_steps: u64,
}

impl DqnLearner {
    pub fn new(input_len: usize, n_actions: usize, config: DqnConfig, rng: &mut StreamRng) -> Result<Self> {
        config.validate()?;
        let net = QNetwork::new(&config.layer_dims(input_len, n_actions), rng)?;
        Ok(Self {
            optimizer: OptimizerState::new(config.optimizer, &net),
            target: net.clone_weights(),
            net,
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            env_steps: 0,
            train_steps: 0,
            config,
        })
    }

    /// Stores one transition (reward scaled) and trains when due.
    pub fn observe(&mut self, mut e: Experience, rng: &mut StreamRng) -> Result<Option<f64>> {
        if let Some(floor) = self.config.reward_floor {
            e.reward = soft_floor(e.reward, floor);
        }
        e.reward *= self.config.reward_scale;
        self.buffer.push(e);
        self.env_steps += 1;
        let ready = self.buffer.len() >= self.config.warmup.max(self.config.batch_size);
        if !ready || !self.env_steps.is_multiple_of(self.config.train_every as u64) {
            return Ok(None);
        }
        let loss = train_step(
            &mut self.net,
            &self.target,
            &self.buffer,
            &self.config,
            &mut self.optimizer,
            rng,
        )?;
        if loss.is_some() {
            self.train_steps += 1;
            target_sync(&self.net, &mut self.target, self.train_steps, self.config.target_sync)?;
        }
        Ok(loss)
    }
}

/// Metadata stored ahead of the weights in a checkpoint file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub env: EnvId,
    pub observation: ObservationMode,
    pub n_actions: usize,
    pub input_len: usize,
    /// Divisors applied to observation entries.
    pub normalization: BTreeMap<String, f64>,
    pub seed: u64,
    pub episodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DqnCheckpoint {
    pub meta: CheckpointMeta,
    pub net: QNetwork,
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"GSCK";
const CHECKPOINT_VERSION: u32 = 1;

impl DqnCheckpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&self.net.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("checkpoint: {m}"));
        if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let meta_bytes = bytes.get(12..12 + len).ok_or_else(|| bad("truncated metadata"))?;
        let meta: CheckpointMeta = serde_json::from_slice(meta_bytes).map_err(|e| bad(&e.to_string()))?;
        let dims = {
            let net = QNetwork::from_bytes(&bytes[12 + len..])?;
            net.dims()
        };
        if dims.first() != Some(&meta.input_len) || dims.last() != Some(&meta.n_actions) {
            return Err(bad("network dims disagree with metadata"));
        }
        let net = QNetwork::from_bytes_expecting(&bytes[12 + len..], &dims)?;
        Ok(Self { meta, net })
    }
}

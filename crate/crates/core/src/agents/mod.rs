//! Decision policies behind one interface.

pub mod dqn;
pub mod dsdp;
pub mod greedy;
pub mod qtable;
pub mod replay;

use serde::{Deserialize, Serialize};

use crate::env::{Env1, Env2, EnvId, Environment, ObservationMode};
use crate::error::{Error, Result};
use crate::neural::QNetwork;
use crate::rng::StreamRng;

pub use dqn::{DqnCheckpoint, DqnConfig, DqnLearner};
pub use dsdp::{dsdp_act, dsdp_solve, DsdpConfig, DsdpPolicy};
pub use greedy::{greedy_env1, greedy_env2};
pub use qtable::QTable;
pub use replay::{Experience, ReplayBuffer};

/// Read-only access to whichever environment an agent is steering.
#[derive(Clone, Copy)]
pub enum EnvView<'a> {
    Layered(&'a Env1),
    Faulted(&'a Env2),
}

impl EnvView<'_> {
    pub fn env_id(&self) -> EnvId {
        match self {
            EnvView::Layered(_) => EnvId::Layered,
            EnvView::Faulted(_) => EnvId::Faulted,
        }
    }

    pub fn legal_actions(&self) -> Vec<bool> {
        match self {
            EnvView::Layered(e) => e.legal_actions(),
            EnvView::Faulted(e) => e.legal_actions(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "dsdp")]
    Dsdp,
    #[serde(rename = "dqn-sensor")]
    DqnSensor,
    #[serde(rename = "dqn-posterior")]
    DqnPosterior,
    #[serde(rename = "qtable")]
    QTable,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Greedy => "greedy",
            AgentKind::Dsdp => "dsdp",
            AgentKind::DqnSensor => "dqn-sensor",
            AgentKind::DqnPosterior => "dqn-posterior",
            AgentKind::QTable => "qtable",
        }
    }

    /// Learned agents are trained per seed and summarized by a median.
    pub fn is_learned(self) -> bool {
        matches!(self, AgentKind::DqnSensor | AgentKind::DqnPosterior | AgentKind::QTable)
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AgentKind::Greedy),
            "dsdp" => Ok(AgentKind::Dsdp),
            "dqn-sensor" => Ok(AgentKind::DqnSensor),
            "dqn-posterior" => Ok(AgentKind::DqnPosterior),
            "qtable" => Ok(AgentKind::QTable),
            other => Err(Error::config("agent", format!("unknown agent `{other}`"))),
        }
    }
}

/// Innovation standard deviations of the layered boundary belief, m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefSd {
    pub top: f64,
    pub thickness: f64,
}

pub trait Agent: Send + Sync {
    fn name(&self) -> String;

    fn env_id(&self) -> EnvId;

    fn act(&self, view: EnvView<'_>, rng: &mut StreamRng) -> Result<usize>;
}

fn mismatch(agent: &str, env: EnvId) -> Error {
    Error::Usage(format!("agent `{agent}` cannot steer env {}", env.as_str()))
}

/// Observation vector of `mode` for the learned agents.
pub fn observation(view: EnvView<'_>, mode: ObservationMode, belief: BeliefSd) -> Result<Vec<f64>> {
    match (view, mode) {
        (EnvView::Layered(e), ObservationMode::Sensor) => Ok(e.observe_sensor()),
        (EnvView::Layered(e), ObservationMode::Posterior) => {
            Ok(e.observe_posterior(&e.belief(belief.top, belief.thickness)))
        }
        (EnvView::Faulted(e), ObservationMode::Sensor) => Ok(e.observe_sensor()),
        (EnvView::Faulted(_), ObservationMode::Posterior) => Err(Error::config(
            "agent",
            "posterior observations are only defined for env ex1",
        )),
    }
}

#[derive(Clone, Debug)]
pub struct GreedyAgent {
    pub env: EnvId,
    pub mc_samples: usize,
    pub belief: BeliefSd,
}

impl Agent for GreedyAgent {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn env_id(&self) -> EnvId {
        self.env
    }

    fn act(&self, view: EnvView<'_>, rng: &mut StreamRng) -> Result<usize> {
        match view {
            EnvView::Layered(e) if self.env == EnvId::Layered => {
                greedy_env1(e, &e.belief(self.belief.top, self.belief.thickness), self.mc_samples, rng)
            }
            EnvView::Faulted(e) if self.env == EnvId::Faulted => Ok(greedy_env2(e)),
            v => Err(mismatch("greedy", v.env_id())),
        }
    }
}

/// One solved table per production value.
#[derive(Clone, Debug)]
pub struct DsdpAgent {
    pub policies: Vec<DsdpPolicy>,
}

impl DsdpAgent {
    pub fn policy_for(&self, v_prod: f64) -> Result<&DsdpPolicy> {
        self.policies
            .iter()
            .find(|p| (p.v_prod - v_prod).abs() < 1e-12)
            .ok_or_else(|| Error::Usage(format!("no dsdp policy solved for v_prod = {v_prod}")))
    }
}

impl Agent for DsdpAgent {
    fn name(&self) -> String {
        "dsdp".into()
    }

    fn env_id(&self) -> EnvId {
        EnvId::Faulted
    }

    fn act(&self, view: EnvView<'_>, _rng: &mut StreamRng) -> Result<usize> {
        match view {
            EnvView::Faulted(e) => Ok(dsdp_act(self.policy_for(e.v_prod())?, e)),
            v => Err(mismatch("dsdp", v.env_id())),
        }
    }
}

/// Greedy rollout of a trained Q-network.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    pub checkpoint: DqnCheckpoint,
    pub belief: BeliefSd,
}

impl DqnAgent {
    pub fn net(&self) -> &QNetwork {
        &self.checkpoint.net
    }
}

impl Agent for DqnAgent {
    fn name(&self) -> String {
        match self.checkpoint.meta.observation {
            ObservationMode::Sensor => "dqn-sensor".into(),
            ObservationMode::Posterior => "dqn-posterior".into(),
        }
    }

    fn env_id(&self) -> EnvId {
        self.checkpoint.meta.env
    }

    fn act(&self, view: EnvView<'_>, rng: &mut StreamRng) -> Result<usize> {
        if view.env_id() != self.env_id() {
            return Err(mismatch(&self.name(), view.env_id()));
        }
        let obs = observation(view, self.checkpoint.meta.observation, self.belief)?;
        dqn::select_action(&self.checkpoint.net, &obs, 0.0, &view.legal_actions(), rng)
    }
}

/// Discrete state of the faulted reservoir: stage, crossed faults and depth
/// bin below the upper boundary.
pub type Env2Key = (usize, u32, i64);

pub fn env2_key(env: &Env2, bin_width: f64) -> Env2Key {
    let mask = env.fault_belief().occurred_mask();
    let bin = (env.depth_below_top() / bin_width).round() as i64;
    (env.point(), mask, bin)
}

#[derive(Clone, Debug)]
pub struct QTableAgent {
    pub table: QTable<Env2Key>,
    pub bin_width: f64,
}

impl Agent for QTableAgent {
    fn name(&self) -> String {
        "qtable".into()
    }

    fn env_id(&self) -> EnvId {
        EnvId::Faulted
    }

    fn act(&self, view: EnvView<'_>, _rng: &mut StreamRng) -> Result<usize> {
        match view {
            EnvView::Faulted(e) => self
                .table
                .best_action(&env2_key(e, self.bin_width), &e.legal_actions())
                .ok_or_else(|| Error::Usage("no legal action".into())),
            v => Err(mismatch("qtable", v.env_id())),
        }
    }
}

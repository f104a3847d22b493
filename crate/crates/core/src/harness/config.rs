//! Experiment configuration, read from TOML with four sections.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, BeliefSd, DqnConfig, DsdpConfig};
use crate::env::{CostParams, Env1Config, EnvId, Scenario1};
use crate::error::{Error, Result};
use crate::geomodel::{FaultedPrior, ForwardFnParams1};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeomodelSection {
    pub layered: ForwardFnParams1,
    pub faulted: FaultedPrior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub id: EnvId,
    /// Layered objective scenarios; training samples them uniformly.
    pub scenarios: Vec<Scenario1>,
    pub layered: Env1Config,
    pub costs: CostParams,
    /// Production values evaluated on the faulted reservoir.
    pub v_prod_eval: Vec<f64>,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            id: EnvId::Layered,
            scenarios: vec![
                Scenario1 { w1: 0.67, w2: 0.33, perm_low: 100.0 },
                Scenario1 { w1: 0.41, w2: 0.59, perm_low: 20.0 },
            ],
            layered: Env1Config::default(),
            costs: CostParams::default(),
            v_prod_eval: vec![0.5, 2.0, 4.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QTableConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub bin_width: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for QTableConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 1.0,
            bin_width: 0.25,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub kind: AgentKind,
    /// Monte Carlo draws per action of the layered greedy agent.
    pub greedy_mc_samples: usize,
    /// Random-walk innovation sd of the layered boundary belief, m.
    pub belief_sd_top: f64,
    pub belief_sd_thickness: f64,
    pub dqn: DqnConfig,
    pub dsdp: DsdpConfig,
    pub qtable: QTableConfig,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self {
            kind: AgentKind::DqnSensor,
            greedy_mc_samples: 100,
            belief_sd_top: 0.4,
            belief_sd_thickness: 0.2,
            dqn: DqnConfig::default(),
            dsdp: DsdpConfig::default(),
            qtable: QTableConfig::default(),
        }
    }
}

impl AgentSection {
    pub fn belief(&self) -> BeliefSd {
        BeliefSd {
            top: self.belief_sd_top,
            thickness: self.belief_sd_thickness,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSection {
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub eval_realizations: usize,
    pub eval_seed: u64,
    pub out_dir: PathBuf,
    /// Directory for solved dynamic-programming tables; none disables caching.
    pub cache_dir: Option<PathBuf>,
    /// Episode to draw in trajectory plots.
    pub plot_realization: usize,
}

impl Default for HarnessSection {
    fn default() -> Self {
        Self {
            seeds: (0..51).collect(),
            episodes: 3_000,
            eval_realizations: 1_000,
            eval_seed: 12_345,
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            plot_realization: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geomodel: GeomodelSection,
    pub env: EnvSection,
    pub agent: AgentSection,
    pub harness: HarnessSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.harness;
        if h.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = h.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config("seeds", format!("duplicate seed {dup}")));
        }
        if h.eval_realizations == 0 {
            return Err(Error::config("eval_realizations", "must be at least 1"));
        }
        match self.env.id {
            EnvId::Layered => {
                self.geomodel.layered.validate()?;
                if self.env.scenarios.is_empty() {
                    return Err(Error::config("scenarios", "must not be empty"));
                }
                for s in &self.env.scenarios {
                    s.validate()?;
                }
                if matches!(self.agent.kind, AgentKind::Dsdp | AgentKind::QTable) {
                    return Err(Error::config(
                        "agent",
                        format!("`{}` is only defined for env ex2", self.agent.kind.as_str()),
                    ));
                }
                if self.agent.greedy_mc_samples == 0 {
                    return Err(Error::config("greedy_mc_samples", "must be at least 1"));
                }
            }
            EnvId::Faulted => {
                self.geomodel.faulted.validate()?;
                self.env.costs.validate()?;
                if self.env.v_prod_eval.is_empty() || self.env.v_prod_eval.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::config("v_prod_eval", "must list non-negative values"));
                }
                if self.agent.dqn.per_unit_value && !(self.env.costs.v_prod_range[0] > 0.0) {
                    return Err(Error::config("per_unit_value", "needs a positive v_prod_range"));
                }
                if self.agent.kind == AgentKind::DqnPosterior {
                    return Err(Error::config("agent", "dqn-posterior is only defined for env ex1"));
                }
            }
        }
        if !(self.agent.belief_sd_top >= 0.0 && self.agent.belief_sd_thickness >= 0.0) {
            return Err(Error::config("belief_sd_top", "belief sds must be non-negative"));
        }
        self.agent.dqn.validate()?;
        self.agent.dsdp.validate()?;
        let q = &self.agent.qtable;
        if !(q.bin_width > 0.0) {
            return Err(Error::config("qtable.bin_width", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml(
            "[env]\nid = \"ex2\"\n[agent]\nkind = \"dsdp\"\n[harness]\nseeds = [1, 2]\n",
        )
        .unwrap();
        assert_eq!(c.env.id, EnvId::Faulted);
        assert_eq!(c.harness.eval_realizations, 1000);
        assert_eq!(c.geomodel.faulted.n_points, 30);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[harness]\nseedz = [1]\n").is_err());
        assert!(ExperimentConfig::from_toml("[bogus]\nx = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[agent.dqn]\nlearning_rate = 1\n").is_err());
    }

    #[test]
    fn invariants_name_the_field() {
        let err = ExperimentConfig::from_toml("[harness]\nseeds = [3, 3]\n").unwrap_err();
        assert!(err.to_string().contains("seeds"));
        let err = ExperimentConfig::from_toml("[harness]\nseeds = []\n").unwrap_err();
        assert!(err.to_string().contains("seeds"));
        let err = ExperimentConfig::from_toml("[harness]\neval_realizations = 0\n").unwrap_err();
        assert!(err.to_string().contains("eval_realizations"));
        let err = ExperimentConfig::from_toml("[agent.dqn]\ntarget_sync = 0\n").unwrap_err();
        assert!(err.to_string().contains("target_sync"));
        let err = ExperimentConfig::from_toml(
            "[env]\nid = \"ex2\"\ncosts = { v_prod_range = [0.0, 4.0] }\n[agent.dqn]\nper_unit_value = true\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("per_unit_value"));
    }
}

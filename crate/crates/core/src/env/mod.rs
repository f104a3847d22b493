//! The two geosteering decision environments.

pub mod env1;
pub mod env2;
pub mod reward;
pub mod trajectory;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use env1::{Env1, Env1Config, Scenario1, ENV1_ACTIONS_DEG};
pub use env2::{Env2, ENV2_STEERS_M, SIDETRACK};
pub use reward::CostParams;

/// Which of the two environments an artifact belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvId {
    #[serde(rename = "ex1")]
    Layered,
    #[serde(rename = "ex2")]
    Faulted,
}

impl EnvId {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::Layered => "ex1",
            EnvId::Faulted => "ex2",
        }
    }

    pub fn num_actions(self) -> usize {
        match self {
            EnvId::Layered => ENV1_ACTIONS_DEG.len(),
            EnvId::Faulted => ENV2_STEERS_M.len() + 1,
        }
    }
}

impl std::str::FromStr for EnvId {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(EnvId::Layered),
            "ex2" => Ok(EnvId::Faulted),
            other => Err(crate::error::Error::config("env", format!("unknown env `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// Posterior means ahead of the sensor.
    Posterior,
    /// Measured history behind the sensor.
    Sensor,
}

/// Outcome of one decision stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
}

/// A finite-horizon decision process driven by discrete actions.
pub trait Environment {
    fn env_id(&self) -> EnvId;

    fn num_actions(&self) -> usize {
        self.env_id().num_actions()
    }

    fn legal_actions(&self) -> Vec<bool>;

    fn step(&mut self, action: usize) -> Result<Transition>;

    fn is_done(&self) -> bool;

    fn observation_len(&self) -> usize;

    fn observe_sensor(&self) -> Vec<f64>;

    fn episode_result(&self) -> EpisodeResult;
}

/// Summary of one complete episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub total_reward: f64,
    /// Percent of trajectory points inside the reservoir.
    pub reservoir_contact: f64,
    /// Percent of trajectory points inside the high-quality zone (layered only).
    pub high_quality: Option<f64>,
    /// Sum of drilling and sidetrack costs (faulted only).
    pub operating_cost: Option<f64>,
    /// Sum of production values (faulted only).
    pub production_value: Option<f64>,
    pub sidetracks: usize,
    /// Stages that began with the bit outside the reservoir.
    pub exit_stages: usize,
    pub stage_rewards: Vec<f64>,
    /// TVD at every grid point, m.
    pub trajectory: Vec<f64>,
}

/// Percent of points with `lo[i] <= tvd[i] <= hi[i]`.
pub fn percent_within(tvd: &[f64], lo: impl Fn(usize) -> f64, hi: impl Fn(usize) -> f64) -> f64 {
    if tvd.is_empty() {
        return 0.0;
    }
    let inside = tvd
        .iter()
        .enumerate()
        .filter(|&(i, &z)| lo(i) - crate::geomodel::INSIDE_TOL <= z && z <= hi(i) + crate::geomodel::INSIDE_TOL)
        .count();
    100.0 * inside as f64 / tvd.len() as f64
}

/// Trajectory dump: index, x, tvd, top, bottom, hq (blank when absent),
/// inside flag, cumulative reward.
pub fn trajectory_table(
    dx: f64,
    tvd: &[f64],
    top: &[f64],
    bottom: &[f64],
    hq: Option<&[f64]>,
    cumulative_reward: &[f64],
) -> String {
    let mut out = String::from("index,x_m,tvd_m,top_m,bottom_m,hq_m,inside,cumulative_reward\n");
    for i in 0..tvd.len() {
        let inside = top[i] - crate::geomodel::INSIDE_TOL <= tvd[i]
            && tvd[i] <= bottom[i] + crate::geomodel::INSIDE_TOL;
        let hq_col = hq.map(|h| format!("{:.6}", h[i])).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}",
            i,
            i as f64 * dx,
            tvd[i],
            top[i],
            bottom[i],
            hq_col,
            u8::from(inside),
            cumulative_reward.get(i).copied().unwrap_or(f64::NAN)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_counts() {
        let tvd = vec![5.0; 10];
        assert_eq!(percent_within(&tvd, |_| 0.0, |_| 10.0), 100.0);
        assert_eq!(percent_within(&tvd, |_| 6.0, |_| 10.0), 0.0);
        // alternate inside and outside over 30 points
        let tvd: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 20.0 } else { 5.0 }).collect();
        let hand = tvd.iter().filter(|&&z| z <= 10.0).count();
        assert_eq!(hand, 20);
        let pct = percent_within(&tvd, |_| 0.0, |_| 10.0);
        assert!((pct - 100.0 * 20.0 / 30.0).abs() < 1e-12);
    }
}

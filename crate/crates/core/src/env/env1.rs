//! Layered reservoir with a high-quality top zone.
//!
//! The bit sits at grid point `i`. Each stage applies one inclination change
//! over the next `stage_points` points along a constant-curvature arc. The
//! stage reward covers points `i .. i + stage_points - 1`; the bit then moves
//! to `i + stage_points`, whose reward belongs to the following stage.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::reward::{check_weights, normalized_distance, reward_r1, reward_r2};
use super::trajectory::min_curvature_segment;
use super::{percent_within, EnvId, EpisodeResult, Environment, ObservationMode, Transition};
use crate::bayes::BoundaryBelief;
use crate::error::{Error, Result};
use crate::geomodel::{GeoRealization1, INSIDE_TOL};

/// Inclination changes, degrees.
pub const ENV1_ACTIONS_DEG: [f64; 11] = [-5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0];

/// Objective weights and low-zone permeability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario1 {
    pub w1: f64,
    pub w2: f64,
    pub perm_low: f64,
}

impl Scenario1 {
    pub fn validate(&self) -> Result<()> {
        check_weights(self.w1, self.w2)?;
        if !(self.perm_low > 0.0) {
            return Err(Error::config("perm_low", "must be positive"));
        }
        Ok(())
    }
}

/// Normalization divisors of the layered observation vector.
pub const PERM_SCALE: f64 = 200.0;
pub const INCLINATION_SCALE_DEG: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Env1Config {
    /// Grid points per decision stage.
    pub stage_points: usize,
    /// Thickness divisor used to normalize `h` in observations, m.
    pub thickness_ref: f64,
}

impl Default for Env1Config {
    fn default() -> Self {
        Self {
            stage_points: 10,
            thickness_ref: 25.0,
        }
    }
}

/// `(r1, r2)` for a well at `tvd` given the local boundaries.
pub fn point_rewards(
    tvd: f64,
    top: f64,
    thickness: f64,
    hq_fraction: f64,
    perm_high: f64,
    perm_low: f64,
) -> (f64, f64) {
    let bottom = top + thickness;
    let x = normalized_distance(tvd, top, bottom);
    let inside = top - INSIDE_TOL <= tvd && tvd <= bottom + INSIDE_TOL;
    let y = if !inside {
        0.0
    } else if tvd <= top + hq_fraction * thickness {
        perm_high
    } else {
        perm_low
    };
    (reward_r1(x), reward_r2(y))
}

#[derive(Clone, Debug)]
pub struct Env1 {
    realization: Arc<GeoRealization1>,
    scenario: Scenario1,
    config: Env1Config,
    point: usize,
    tvd: f64,
    inclination: f64,
    /// TVD at points `0..=point`.
    trajectory: Vec<f64>,
    stage_rewards: Vec<f64>,
}

impl Env1 {
    /// Starts at point 0 at mid-reservoir, drilling horizontally.
    pub fn new(realization: Arc<GeoRealization1>, scenario: Scenario1, config: Env1Config) -> Result<Self> {
        let start = realization.mid(0);
        Self::with_start(realization, scenario, config, start, 0.0)
    }

    pub fn with_start(
        realization: Arc<GeoRealization1>,
        scenario: Scenario1,
        config: Env1Config,
        start_tvd: f64,
        start_inclination_deg: f64,
    ) -> Result<Self> {
        scenario.validate()?;
        if config.stage_points == 0 || !realization.n_points().is_multiple_of(config.stage_points) {
            return Err(Error::config(
                "stage_points",
                format!("must divide n_points = {}", realization.n_points()),
            ));
        }
        if !(config.thickness_ref > 0.0) {
            return Err(Error::config("thickness_ref", "must be positive"));
        }
        Ok(Self {
            realization,
            scenario,
            config,
            point: 0,
            tvd: start_tvd,
            inclination: start_inclination_deg,
            trajectory: vec![start_tvd],
            stage_rewards: Vec::new(),
        })
    }

    pub fn realization(&self) -> &GeoRealization1 {
        &self.realization
    }

    pub fn scenario(&self) -> Scenario1 {
        self.scenario
    }

    pub fn config(&self) -> &Env1Config {
        &self.config
    }

    pub fn stage_points(&self) -> usize {
        self.config.stage_points
    }

    pub fn point(&self) -> usize {
        self.point
    }

    pub fn tvd(&self) -> f64 {
        self.tvd
    }

    pub fn inclination_deg(&self) -> f64 {
        self.inclination
    }

    pub fn stage(&self) -> usize {
        self.point / self.config.stage_points
    }

    pub fn num_stages(&self) -> usize {
        self.realization.n_points() / self.config.stage_points
    }

    /// TVD at points `i .. i + stage_points` if `action` were taken now.
    /// Entry 0 is the current bit; the last entry is the next bit position.
    pub fn stage_tvds(&self, action: usize) -> Result<Vec<f64>> {
        let delta = *ENV1_ACTIONS_DEG.get(action).ok_or_else(|| Error::IllegalAction {
            action,
            reason: format!("expected 0..{}", ENV1_ACTIONS_DEG.len()),
        })?;
        let n = self.config.stage_points;
        let offsets = min_curvature_segment(self.inclination, delta, n, self.realization.dx)?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.tvd);
        out.extend(offsets.iter().map(|o| self.tvd + o));
        Ok(out)
    }

    /// Exact belief at the sensor with random-walk uncertainty ahead.
    pub fn belief(&self, innovation_sd_top: f64, innovation_sd_thickness: f64) -> BoundaryBelief {
        let i = self.point.min(self.realization.n_points() - 1);
        BoundaryBelief::anchored(
            self.config.stage_points,
            innovation_sd_top,
            innovation_sd_thickness,
            self.realization.top[i],
            self.realization.thickness[i],
        )
    }

    fn tail(&self) -> [f64; 5] {
        let n = self.realization.n_points() as f64;
        [
            self.inclination / INCLINATION_SCALE_DEG,
            self.point as f64 / n,
            self.scenario.perm_low / PERM_SCALE,
            self.scenario.w1,
            self.scenario.w2,
        ]
    }

    /// 49 inputs: DTUB, DTLB, DTHQ and h at 11 points, then inclination,
    /// position, low-zone permeability and both weights.
    pub fn observe(&self, mode: ObservationMode, belief: Option<&BoundaryBelief>) -> Result<Vec<f64>> {
        match mode {
            ObservationMode::Sensor => Ok(self.observe_sensor()),
            ObservationMode::Posterior => {
                let belief = belief.ok_or_else(|| {
                    Error::Usage("posterior observation requested without a belief".into())
                })?;
                Ok(self.observe_posterior(belief))
            }
        }
    }

    pub fn observe_posterior(&self, belief: &BoundaryBelief) -> Vec<f64> {
        let n = self.config.stage_points;
        let mut obs = vec![0.0; 4 * (n + 1) + 5];
        if !self.is_done() {
            let slope = self.inclination.to_radians().tan() * self.realization.dx;
            for k in 0..=n {
                let kk = k.min(belief.horizon());
                let top = belief.mean_top[kk];
                let h = belief.mean_thickness[kk];
                let z = self.tvd + slope * k as f64;
                self.fill_point(&mut obs, k, n, z, top, h);
            }
        }
        obs[4 * (n + 1)..].copy_from_slice(&self.tail());
        obs
    }

    fn fill_point(&self, obs: &mut [f64], k: usize, n: usize, z: f64, top: f64, h: f64) {
        let hq = top + self.realization.hq_fraction * h;
        obs[k] = (z - top) / h;
        obs[(n + 1) + k] = (top + h - z) / h;
        obs[2 * (n + 1) + k] = (hq - z) / h;
        obs[3 * (n + 1) + k] = h / self.config.thickness_ref;
    }

    /// TVD at every grid point drilled so far (at most `n_points`).
    pub fn trajectory(&self) -> &[f64] {
        let n = self.realization.n_points();
        &self.trajectory[..self.trajectory.len().min(n)]
    }
}

impl Environment for Env1 {
    fn env_id(&self) -> EnvId {
        EnvId::Layered
    }

    fn legal_actions(&self) -> Vec<bool> {
        vec![true; ENV1_ACTIONS_DEG.len()]
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::Usage("episode already finished".into()));
        }
        let tvds = self.stage_tvds(action)?;
        let n = self.config.stage_points;
        let real = &self.realization;
        let (mut s1, mut s2) = (0.0, 0.0);
        for (k, &z) in tvds.iter().take(n).enumerate() {
            let i = self.point + k;
            let (r1, r2) = point_rewards(
                z,
                real.top[i],
                real.thickness[i],
                real.hq_fraction,
                real.perm_high,
                self.scenario.perm_low,
            );
            s1 += r1;
            s2 += r2;
        }
        let reward = self.scenario.w1 * s1 + self.scenario.w2 * s2;
        self.trajectory.extend_from_slice(&tvds[1..]);
        self.point += n;
        self.tvd = tvds[n];
        self.inclination += ENV1_ACTIONS_DEG[action];
        self.stage_rewards.push(reward);
        Ok(Transition {
            reward,
            done: self.is_done(),
        })
    }

    fn is_done(&self) -> bool {
        self.point >= self.realization.n_points()
    }

    fn observation_len(&self) -> usize {
        4 * (self.config.stage_points + 1) + 5
    }

    fn observe_sensor(&self) -> Vec<f64> {
        let n = self.config.stage_points;
        let real = &self.realization;
        let mut obs = vec![0.0; self.observation_len()];
        for k in 0..=n {
            // point i - n + k; zero before the well start and past the grid
            let Some(i) = (self.point + k).checked_sub(n) else { continue };
            if i >= real.n_points() {
                continue;
            }
            self.fill_point(&mut obs, k, n, self.trajectory[i], real.top[i], real.thickness[i]);
        }
        obs[4 * (n + 1)..].copy_from_slice(&self.tail());
        obs
    }

    fn episode_result(&self) -> EpisodeResult {
        let real = &self.realization;
        let tvd = self.trajectory().to_vec();
        let contact = percent_within(&tvd, |i| real.top[i], |i| real.bottom(i));
        let hq = percent_within(&tvd, |i| real.top[i], |i| real.hq_boundary(i));
        let exit_stages = (0..self.stage_rewards.len())
            .filter(|&s| {
                let i = s * self.config.stage_points;
                !(real.top[i] - INSIDE_TOL <= tvd[i] && tvd[i] <= real.bottom(i) + INSIDE_TOL)
            })
            .count();
        EpisodeResult {
            total_reward: self.stage_rewards.iter().sum(),
            reservoir_contact: contact,
            high_quality: Some(hq),
            operating_cost: None,
            production_value: None,
            sidetracks: 0,
            exit_stages,
            stage_rewards: self.stage_rewards.clone(),
            trajectory: tvd,
        }
    }
}

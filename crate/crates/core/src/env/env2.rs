//! Thin faulted reservoir with sidetracking.
//!
//! The bit sits at grid point `j`. Steering actions move it to `j + 1` with a
//! TVD change from [`ENV2_STEERS_M`]. The sidetrack action is only legal while
//! the bit is outside the reservoir: the last segment is abandoned and the
//! well is redrilled to the true mid-reservoir at `j + 1`. The exit point
//! itself stays recorded as outside.

use std::sync::Arc;

use super::reward::{stage_reward_env2, CostParams};
use super::{percent_within, EnvId, EpisodeResult, Environment, Transition};
use crate::bayes::FaultBelief;
use crate::error::{Error, Result};
use crate::geomodel::{FaultedPrior, GeoRealization2};

/// TVD changes of the five steering actions, m.
pub const ENV2_STEERS_M: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];
pub const SIDETRACK: usize = 5;

/// Divisor applied to the production value in observations.
pub const V_PROD_SCALE: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct Env2 {
    realization: Arc<GeoRealization2>,
    prior: Arc<FaultedPrior>,
    costs: CostParams,
    v_prod: f64,
    point: usize,
    tvd: f64,
    trajectory: Vec<f64>,
    values: Vec<f64>,
    costs_paid: Vec<f64>,
    stage_rewards: Vec<f64>,
    sidetracks: usize,
    exit_stages: usize,
    belief: FaultBelief,
}

impl Env2 {
    /// Starts at point 0 at the prior mid-reservoir.
    pub fn new(
        realization: Arc<GeoRealization2>,
        prior: Arc<FaultedPrior>,
        costs: CostParams,
        v_prod: f64,
    ) -> Result<Self> {
        let start = prior.base_trend()[0] + 0.5 * prior.thickness;
        Self::with_start(realization, prior, costs, v_prod, start)
    }

    pub fn with_start(
        realization: Arc<GeoRealization2>,
        prior: Arc<FaultedPrior>,
        costs: CostParams,
        v_prod: f64,
        start_tvd: f64,
    ) -> Result<Self> {
        costs.validate()?;
        if !(v_prod >= 0.0) {
            return Err(Error::config("v_prod", "must be non-negative"));
        }
        if realization.n_points() != prior.n_points {
            return Err(Error::Usage("realization and prior disagree on n_points".into()));
        }
        let belief = FaultBelief::prior(&prior.faults, prior.dx)?;
        Ok(Self {
            realization,
            prior,
            costs,
            v_prod,
            point: 0,
            tvd: start_tvd,
            trajectory: vec![start_tvd],
            values: Vec::new(),
            costs_paid: Vec::new(),
            stage_rewards: Vec::new(),
            sidetracks: 0,
            exit_stages: 0,
            belief,
        })
    }

    pub fn realization(&self) -> &GeoRealization2 {
        &self.realization
    }

    pub fn prior(&self) -> &FaultedPrior {
        &self.prior
    }

    pub fn costs(&self) -> &CostParams {
        &self.costs
    }

    pub fn v_prod(&self) -> f64 {
        self.v_prod
    }

    pub fn point(&self) -> usize {
        self.point
    }

    pub fn tvd(&self) -> f64 {
        self.tvd
    }

    pub fn num_stages(&self) -> usize {
        self.realization.n_points() - 1
    }

    pub fn in_reservoir(&self) -> bool {
        self.realization.contains(self.point, self.tvd)
    }

    /// Observer's belief about faults given the boundaries seen so far.
    pub fn fault_belief(&self) -> &FaultBelief {
        &self.belief
    }

    /// Depth of the bit below the measured upper boundary, m.
    pub fn depth_below_top(&self) -> f64 {
        self.tvd - self.realization.upper[self.point]
    }

    pub fn trajectory(&self) -> &[f64] {
        &self.trajectory
    }
}

impl Environment for Env2 {
    fn env_id(&self) -> EnvId {
        EnvId::Faulted
    }

    fn legal_actions(&self) -> Vec<bool> {
        let mut mask = vec![true; ENV2_STEERS_M.len() + 1];
        mask[SIDETRACK] = !self.in_reservoir();
        mask
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::Usage("episode already finished".into()));
        }
        let legal = self.legal_actions();
        match legal.get(action) {
            None => {
                return Err(Error::IllegalAction {
                    action,
                    reason: format!("expected 0..{}", legal.len()),
                })
            }
            Some(false) => {
                return Err(Error::IllegalAction {
                    action,
                    reason: "sidetrack while inside the reservoir".into(),
                })
            }
            Some(true) => {}
        }
        if !self.in_reservoir() {
            self.exit_stages += 1;
        }
        let next = self.point + 1;
        let sidetracked = action == SIDETRACK;
        self.tvd = if sidetracked {
            self.sidetracks += 1;
            self.realization.mid(next)
        } else {
            self.tvd + ENV2_STEERS_M[action]
        };
        self.point = next;
        self.belief = self
            .belief
            .condition_on_offset(next, self.realization.offset_at(next))?;
        let inside = self.in_reservoir();
        let value = if inside { self.v_prod } else { 0.0 };
        let cost = self.costs.stage_cost(sidetracked);
        let reward = stage_reward_env2(inside, sidetracked, &self.costs, self.v_prod);
        self.trajectory.push(self.tvd);
        self.values.push(value);
        self.costs_paid.push(cost);
        self.stage_rewards.push(reward);
        Ok(Transition {
            reward,
            done: self.is_done(),
        })
    }

    fn is_done(&self) -> bool {
        self.point + 1 >= self.realization.n_points()
    }

    fn observation_len(&self) -> usize {
        10
    }

    /// DTUB and DTLB at the bit and one point behind, next-fault support
    /// (start, end) and mean throw, exit flag, position, production value.
    fn observe_sensor(&self) -> Vec<f64> {
        let real = &self.realization;
        let h = real.thickness;
        let length = self.prior.length();
        let j = self.point;
        let dtub = |i: usize| (self.trajectory[i] - real.upper[i]) / h;
        let dtlb = |i: usize| (real.lower(i) - self.trajectory[i]) / h;
        let (prev_ub, prev_lb) = if j > 0 { (dtub(j - 1), dtlb(j - 1)) } else { (0.0, 0.0) };
        let (f_start, f_end, f_mean) = match self.belief.next_fault() {
            Some((k, a, b)) => (
                a as f64 * self.prior.dx / length,
                b as f64 * self.prior.dx / length,
                self.prior.faults[k].displacement_mean / h,
            ),
            None => (1.0, 1.0, 0.0),
        };
        vec![
            dtub(j),
            dtlb(j),
            prev_ub,
            prev_lb,
            f_start,
            f_end,
            f_mean,
            if self.in_reservoir() { 0.0 } else { 1.0 },
            j as f64 * self.prior.dx / length,
            self.v_prod / V_PROD_SCALE,
        ]
    }

    fn episode_result(&self) -> EpisodeResult {
        let real = &self.realization;
        EpisodeResult {
            total_reward: self.stage_rewards.iter().sum(),
            reservoir_contact: percent_within(&self.trajectory, |i| real.upper[i], |i| real.lower(i)),
            high_quality: None,
            operating_cost: Some(self.costs_paid.iter().sum()),
            production_value: Some(self.values.iter().sum()),
            sidetracks: self.sidetracks,
            exit_stages: self.exit_stages,
            stage_rewards: self.stage_rewards.clone(),
            trajectory: self.trajectory.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomodel::{sample_faulted, sample_realization_env2};
    use crate::rng::seeded;
    use rand::Rng;

    fn flat_env(v_prod: f64) -> Env2 {
        let prior = FaultedPrior {
            faults: vec![],
            trend_slope: 0.0,
            ..Default::default()
        };
        let real = sample_realization_env2(&[], &prior.base_trend(), prior.thickness, prior.dx, &mut seeded(0)).unwrap();
        Env2::new(Arc::new(real), Arc::new(prior), CostParams::default(), v_prod).unwrap()
    }

    #[test]
    fn holding_inside_costs_exactly_the_drilling_budget() {
        let mut env = flat_env(2.0);
        let mut n = 0;
        while !env.is_done() {
            let t = env.step(2).unwrap();
            assert!((t.reward - 1.9375).abs() < 1e-15);
            n += 1;
        }
        assert_eq!(n, 29);
        let r = env.episode_result();
        assert_eq!(r.operating_cost, Some(1.8125));
        assert!((r.total_reward - (29.0 * 2.0 - 1.8125)).abs() < 1e-12);
        assert_eq!(r.stage_rewards.len(), 29);
    }

    #[test]
    fn sidetrack_recentres_and_charges() {
        let mut env = flat_env(4.0);
        assert!(matches!(env.step(SIDETRACK), Err(Error::IllegalAction { .. })));
        // walk out through the top: 2.5 m margin at 0.5 m per stage
        for _ in 0..6 {
            env.step(0).unwrap();
        }
        assert!(!env.in_reservoir());
        assert_eq!(env.legal_actions(), vec![true; 6]);
        let t = env.step(SIDETRACK).unwrap();
        assert!((t.reward - (4.0 - 0.0625 - 2.567)).abs() < 1e-12);
        let j = env.point();
        assert!((env.tvd() - 0.5 * (env.realization().upper[j] + env.realization().lower(j))).abs() < 1e-12);
        assert!(!env.legal_actions()[SIDETRACK]);
    }

    #[test]
    fn accounting_identity_and_mask_hold_on_random_rollouts() {
        let prior = Arc::new(FaultedPrior::default());
        let mut rng = seeded(42);
        for ep in 0..300 {
            let real = Arc::new(sample_faulted(&prior, &mut seeded(ep)).unwrap());
            let mut env = Env2::new(real, prior.clone(), CostParams::default(), rng.random_range(0.5..4.0)).unwrap();
            while !env.is_done() {
                let mask = env.legal_actions();
                assert_eq!(mask[SIDETRACK], !env.in_reservoir());
                let legal: Vec<usize> = (0..6).filter(|&a| mask[a]).collect();
                env.step(legal[rng.random_range(0..legal.len())]).unwrap();
            }
            let r = env.episode_result();
            let identity = r.production_value.unwrap() - r.operating_cost.unwrap();
            assert!((r.total_reward - identity).abs() < 1e-12);
            assert_eq!(r.stage_rewards.len(), 29);
            assert!((0.0..=100.0).contains(&r.reservoir_contact));
        }
    }

    #[test]
    fn observation_has_ten_entries() {
        let prior = Arc::new(FaultedPrior::default());
        let real = Arc::new(sample_faulted(&prior, &mut seeded(1)).unwrap());
        let mut env = Env2::new(real, prior, CostParams::default(), 2.0).unwrap();
        let obs = env.observe_sensor();
        assert_eq!(obs.len(), 10);
        // centred start
        assert_eq!(obs[0], obs[1]);
        assert!((obs[4] - 120.0 / 870.0).abs() < 1e-12);
        while !env.is_done() {
            env.step(2).unwrap();
        }
        let obs = env.observe_sensor();
        assert_eq!(&obs[4..7], &[1.0, 1.0, 0.0]);
    }
}

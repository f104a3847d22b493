//! Beliefs about boundaries ahead of the bit.
//!
//! [`BoundaryBelief`] models the layered reservoir: top depth and thickness
//! follow independent Gaussian random walks anchored at the last exact
//! measurement, so the variance `k * sd^2` grows linearly with the distance
//! `k` (in points) ahead of the sensor.
//!
//! [`FaultBelief`] models the faulted reservoir by exact enumeration of every
//! joint assignment of faults to candidate locations. Each observed throw (or
//! its absence) reweights the hypotheses by its likelihood.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::env1::{point_rewards, Env1, ENV1_ACTIONS_DEG};
use crate::error::{Error, Result};
use crate::geomodel::FaultSpec;
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBelief {
    /// Index `k` is `k` points ahead of the sensor; `k = 0` is the sensor.
    pub mean_top: Vec<f64>,
    pub mean_thickness: Vec<f64>,
    pub var_top: Vec<f64>,
    pub var_thickness: Vec<f64>,
    pub innovation_sd_top: f64,
    pub innovation_sd_thickness: f64,
}

impl BoundaryBelief {
    pub fn anchored(
        horizon: usize,
        innovation_sd_top: f64,
        innovation_sd_thickness: f64,
        measured_top: f64,
        measured_thickness: f64,
    ) -> Self {
        let var_top = (0..=horizon)
            .map(|k| k as f64 * innovation_sd_top * innovation_sd_top)
            .collect();
        let var_thickness = (0..=horizon)
            .map(|k| k as f64 * innovation_sd_thickness * innovation_sd_thickness)
            .collect();
        Self {
            mean_top: vec![measured_top; horizon + 1],
            mean_thickness: vec![measured_thickness; horizon + 1],
            var_top,
            var_thickness,
            innovation_sd_top,
            innovation_sd_thickness,
        }
    }

    pub fn horizon(&self) -> usize {
        self.mean_top.len() - 1
    }

    /// Posterior after an exact measurement at the sensor location.
    pub fn condition_on_measurement(&self, measured_top: f64, measured_thickness: f64) -> Self {
        Self::anchored(
            self.horizon(),
            self.innovation_sd_top,
            self.innovation_sd_thickness,
            measured_top,
            measured_thickness,
        )
    }

    /// One joint draw of `(top, thickness)` for `k = 0..=horizon`.
    pub fn sample_path(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let n = self.horizon();
        let mut top = Vec::with_capacity(n + 1);
        let mut thick = Vec::with_capacity(n + 1);
        let (mut t, mut h) = (self.mean_top[0], self.mean_thickness[0]);
        top.push(t);
        thick.push(h);
        for _ in 0..n {
            let zt: f64 = StandardNormal.sample(rng);
            let zh: f64 = StandardNormal.sample(rng);
            t += self.innovation_sd_top * zt;
            h += self.innovation_sd_thickness * zh;
            top.push(t);
            thick.push(h.max(1e-3));
        }
        (top, thick)
    }
}

/// Monte-Carlo estimates of the stage reward of every action, on shared draws.
pub fn expected_stage_rewards(
    belief: &BoundaryBelief,
    env: &Env1,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let actions: Vec<usize> = (0..ENV1_ACTIONS_DEG.len()).collect();
    expected_for(belief, env, &actions, mc_samples, rng)
}

/// Monte-Carlo estimate of the stage reward of one action.
pub fn expected_stage_reward(
    belief: &BoundaryBelief,
    env: &Env1,
    action: usize,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    Ok(expected_for(belief, env, &[action], mc_samples, rng)?[0])
}

fn expected_for(
    belief: &BoundaryBelief,
    env: &Env1,
    actions: &[usize],
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if mc_samples == 0 {
        return Err(Error::config("mc_samples", "must be at least 1"));
    }
    let n = env.stage_points();
    if belief.horizon() + 1 < n {
        return Err(Error::Usage(format!(
            "belief horizon {} is shorter than a stage",
            belief.horizon()
        )));
    }
    let paths: Vec<_> = (0..mc_samples).map(|_| belief.sample_path(rng)).collect();
    let real = env.realization();
    let scenario = env.scenario();
    let mut out = Vec::with_capacity(actions.len());
    for &action in actions {
        let tvd = env.stage_tvds(action)?;
        let mut total = 0.0;
        for (top, thick) in &paths {
            let (mut s1, mut s2) = (0.0, 0.0);
            for k in 0..n {
                let (r1, r2) = point_rewards(
                    tvd[k],
                    top[k],
                    thick[k],
                    real.hq_fraction,
                    real.perm_high,
                    scenario.perm_low,
                );
                s1 += r1;
                s2 += r2;
            }
            total += scenario.w1 * s1 + scenario.w2 * s2;
        }
        out.push(total / mc_samples as f64);
    }
    Ok(out)
}

/// One joint assignment of faults to candidate points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultHypothesis {
    pub points: Vec<usize>,
    pub weight: f64,
}

/// Offsets smaller than this are read as "no fault here", m.
pub const NO_OFFSET_TOL: f64 = 1e-9;
const MAX_HYPOTHESES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultBelief {
    pub specs: Vec<FaultSpec>,
    pub dx: f64,
    pub hypotheses: Vec<FaultHypothesis>,
    /// Last point whose throw has been observed.
    pub observed_through: usize,
}

impl FaultBelief {
    pub fn prior(specs: &[FaultSpec], dx: f64) -> Result<Self> {
        let mut hypotheses = vec![FaultHypothesis {
            points: Vec::new(),
            weight: 1.0,
        }];
        for (k, spec) in specs.iter().enumerate() {
            spec.validate(k, dx)?;
            let points = spec.candidate_points(dx);
            let p = 1.0 / points.len() as f64;
            if hypotheses.len() * points.len() > MAX_HYPOTHESES {
                return Err(Error::config("faults", "too many joint fault hypotheses"));
            }
            hypotheses = hypotheses
                .into_iter()
                .flat_map(|h| {
                    points.iter().map(move |&pt| {
                        let mut pts = h.points.clone();
                        pts.push(pt);
                        FaultHypothesis {
                            points: pts,
                            weight: h.weight * p,
                        }
                    })
                })
                .collect();
        }
        Ok(Self {
            specs: specs.to_vec(),
            dx,
            hypotheses,
            observed_through: 0,
        })
    }

    /// Posterior after observing the detrended throw between `point - 1` and
    /// `point`. Points must be observed in increasing order.
    pub fn condition_on_offset(&self, point: usize, offset: f64) -> Result<Self> {
        if point <= self.observed_through && point != 0 {
            return Err(Error::Usage(format!(
                "point {point} already observed (through {})",
                self.observed_through
            )));
        }
        let mut next = self.clone();
        for h in &mut next.hypotheses {
            let (mean, var) = self.throw_at(&h.points, point);
            h.weight *= throw_likelihood(offset, mean, var, h.points.contains(&point));
        }
        let total: f64 = next.hypotheses.iter().map(|h| h.weight).sum();
        if !(total > 0.0) {
            return Err(Error::Usage(format!(
                "offset {offset} at point {point} contradicts every fault hypothesis"
            )));
        }
        for h in &mut next.hypotheses {
            h.weight /= total;
        }
        next.hypotheses.retain(|h| h.weight > 0.0);
        next.observed_through = point;
        Ok(next)
    }

    fn throw_at(&self, points: &[usize], point: usize) -> (f64, f64) {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (spec, &p) in self.specs.iter().zip(points) {
            if p == point {
                mean += spec.displacement_mean;
                var += spec.displacement_sd * spec.displacement_sd;
            }
        }
        (mean, var)
    }

    pub fn weight_sum(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }

    /// Posterior probability of each candidate point of fault `k`.
    pub fn location_marginal(&self, k: usize) -> Vec<(usize, f64)> {
        let mut marginal: BTreeMap<usize, f64> = self.specs[k]
            .candidate_points(self.dx)
            .into_iter()
            .map(|p| (p, 0.0))
            .collect();
        for h in &self.hypotheses {
            *marginal.entry(h.points[k]).or_default() += h.weight;
        }
        marginal.into_iter().collect()
    }

    /// Probability that fault `k` lies at or before the last observed point.
    pub fn passed_probability(&self, k: usize) -> f64 {
        self.hypotheses
            .iter()
            .filter(|h| h.points[k] <= self.observed_through)
            .map(|h| h.weight)
            .sum()
    }

    /// Bit `k` is set when fault `k` is known to lie behind the sensor.
    pub fn occurred_mask(&self) -> u32 {
        (0..self.specs.len())
            .filter(|&k| self.passed_probability(k) > 1.0 - 1e-9)
            .fold(0, |mask, k| mask | (1 << k))
    }

    /// First fault not yet passed: `(index, first point, last point)` of its
    /// remaining candidate support.
    pub fn next_fault(&self) -> Option<(usize, usize, usize)> {
        (0..self.specs.len()).find_map(|k| {
            let ahead: Vec<usize> = self
                .location_marginal(k)
                .into_iter()
                .filter(|&(p, w)| p > self.observed_through && w > 1e-12)
                .map(|(p, _)| p)
                .collect();
            match (ahead.first(), ahead.last()) {
                (Some(&a), Some(&b)) => Some((k, a, b)),
                _ => None,
            }
        })
    }

    /// Mixture `(weight, mean, variance)` of the throw at `point`, grouped by
    /// which faults the hypotheses put there. Weights sum to one.
    pub fn throw_mixture(&self, point: usize) -> Vec<(f64, f64, f64)> {
        let mut groups: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for h in &self.hypotheses {
            let here: Vec<usize> = h
                .points
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p == point)
                .map(|(k, _)| k)
                .collect();
            *groups.entry(here).or_default() += h.weight;
        }
        groups
            .into_iter()
            .map(|(faults, w)| {
                let mean = faults.iter().map(|&k| self.specs[k].displacement_mean).sum();
                let var = faults
                    .iter()
                    .map(|&k| self.specs[k].displacement_sd.powi(2))
                    .sum();
                (w, mean, var)
            })
            .collect()
    }
}

fn throw_likelihood(offset: f64, mean: f64, var: f64, fault_here: bool) -> f64 {
    if !fault_here {
        return if offset.abs() <= NO_OFFSET_TOL { 1.0 } else { 0.0 };
    }
    if var == 0.0 {
        return if (offset - mean).abs() <= 1e-6 { 1.0 } else { 0.0 };
    }
    if offset.abs() <= NO_OFFSET_TOL {
        // a continuous throw is exactly zero with probability zero
        return 0.0;
    }
    let sd = var.sqrt();
    let z = (offset - mean) / sd;
    (-0.5 * z * z).exp() / sd
}

//! Reward functions of both environments.

use crate::error::{Error, Result};

/// Placement reward for the normalized distance to the nearest boundary.
///
/// `x` is `min(DTUB, DTLB) / h` inside the reservoir and the negative
/// normalized overshoot outside it.
pub fn reward_r1(x: f64) -> f64 {
    14.654 * x * x * x - 17.778 * x * x + 7.2252 * x
}

/// Quality reward for the permeability `y` (mD) of the zone holding the well.
pub fn reward_r2(y: f64) -> f64 {
    // -2e-5 y^2 + 0.009 y, factored so that y = 200 gives exactly 1
    y * (900.0 - 2.0 * y) / 1e5
}

/// Signed normalized distance to the nearest boundary.
pub fn normalized_distance(tvd: f64, top: f64, bottom: f64) -> f64 {
    let h = bottom - top;
    if tvd < top {
        (tvd - top) / h
    } else if tvd > bottom {
        (bottom - tvd) / h
    } else {
        (tvd - top).min(bottom - tvd) / h
    }
}

/// Weighted stage reward from per-point sub-rewards.
pub fn stage_reward_env1(w1: f64, w2: f64, r1: &[f64], r2: &[f64]) -> Result<f64> {
    check_weights(w1, w2)?;
    if r1.len() != r2.len() {
        return Err(Error::Usage(format!(
            "sub-reward arrays differ in length ({} vs {})",
            r1.len(),
            r2.len()
        )));
    }
    Ok(w1 * r1.iter().sum::<f64>() + w2 * r2.iter().sum::<f64>())
}

pub fn check_weights(w1: f64, w2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w1) || !(0.0..=1.0).contains(&w2) {
        return Err(Error::config("w1/w2", "weights must lie in [0, 1]"));
    }
    if (w1 + w2 - 1.0).abs() > 1e-9 {
        return Err(Error::config("w1/w2", format!("weights sum to {}", w1 + w2)));
    }
    Ok(())
}

/// Operating cost parameters of the faulted environment.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Drilling cost per stage.
    pub c_d: f64,
    /// Sidetrack cost.
    pub c_st: f64,
    pub v_prod_range: [f64; 2],
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            c_d: 0.0625,
            c_st: 2.567,
            v_prod_range: [0.5, 4.0],
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_d >= 0.0) {
            return Err(Error::config("c_d", "must be non-negative"));
        }
        if !(self.c_st >= 0.0) {
            return Err(Error::config("c_st", "must be non-negative"));
        }
        let [lo, hi] = self.v_prod_range;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::config("v_prod_range", "must be a non-empty non-negative range"));
        }
        Ok(())
    }

    pub fn stage_cost(&self, sidetracked: bool) -> f64 {
        self.c_d + if sidetracked { self.c_st } else { 0.0 }
    }
}

pub fn stage_reward_env2(in_reservoir: bool, sidetracked: bool, params: &CostParams, v_prod: f64) -> f64 {
    let value = if in_reservoir { v_prod } else { 0.0 };
    value - params.stage_cost(sidetracked)
}

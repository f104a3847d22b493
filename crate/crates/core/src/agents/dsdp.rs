//! Backward induction on a discretized belief state of the faulted reservoir.
//!
//! The state at stage `j` is the depth of the bit below the measured upper
//! boundary together with the set of faults already crossed. Fault candidate
//! sets must be disjoint, so at most one fault can sit at any point and the
//! remaining location uncertainty of each fault is its prior restricted to
//! points ahead. Throw expectations use Monte Carlo draws shared by every bin
//! and action of a stage.

use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};

use crate::env::env2::{Env2, ENV2_STEERS_M, SIDETRACK};
use crate::env::{CostParams, Environment};
use crate::error::{Error, Result};
use crate::geomodel::{FaultedPrior, INSIDE_TOL};
use crate::rng::derived;

const MAX_FAULTS: usize = 12;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsdpConfig {
    /// Depth bin width, m. Must divide the 0.25 m steering increment.
    pub bin_width: f64,
    /// Half-width of the depth grid around mid-reservoir, m.
    pub span: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for DsdpConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.25,
            span: 8.0,
            mc_samples: 500,
            seed: 0,
        }
    }
}

impl DsdpConfig {
    pub fn validate(&self) -> Result<()> {
        let ratio = 0.25 / self.bin_width;
        if !(self.bin_width > 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::config("bin_width", "must divide 0.25 m"));
        }
        if !(self.span >= self.bin_width) {
            return Err(Error::config("span", "must be at least one bin"));
        }
        if self.mc_samples == 0 {
            return Err(Error::config("mc_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Optimal action and value per stage, crossed-fault mask and depth bin.
#[derive(Clone, Debug, PartialEq)]
pub struct DsdpPolicy {
    pub bin_width: f64,
    /// Depth below the upper boundary of bin 0, m.
    pub depth_min: f64,
    pub n_bins: usize,
    pub n_stages: usize,
    pub n_faults: usize,
    pub thickness: f64,
    pub v_prod: f64,
    pub best_action: Vec<u8>,
    /// Best non-sidetrack action, used when snapping makes a sidetrack illegal.
    pub best_steer: Vec<u8>,
    pub value: Vec<f64>,
}

impl DsdpPolicy {
    fn index(&self, stage: usize, mask: usize, bin: usize) -> usize {
        (stage * (1 << self.n_faults) + mask) * self.n_bins + bin
    }

    pub fn depth_of(&self, bin: usize) -> f64 {
        self.depth_min + bin as f64 * self.bin_width
    }

    /// Nearest bin on the same side of each reservoir boundary as `depth`,
    /// clamped to the grid.
    pub fn bin_of(&self, depth: f64) -> usize {
        let last = (self.n_bins - 1) as f64;
        let t = (depth - self.depth_min) / self.bin_width;
        let top = -self.depth_min / self.bin_width;
        let bottom = (self.thickness - self.depth_min) / self.bin_width;
        let eps = INSIDE_TOL / self.bin_width;
        let mut b = t.round();
        if depth < -INSIDE_TOL && b >= top - eps {
            b = (top - 1.0).ceil();
        } else if depth > self.thickness + INSIDE_TOL && b <= bottom + eps {
            b = (bottom + 1.0).floor();
        } else if (-INSIDE_TOL..=self.thickness + INSIDE_TOL).contains(&depth) {
            b = b.clamp(top.ceil(), bottom.floor());
        }
        b.clamp(0.0, last) as usize
    }

    pub fn action(&self, stage: usize, mask: u32, depth: f64) -> usize {
        self.best_action[self.index(stage.min(self.n_stages - 1), mask as usize, self.bin_of(depth))] as usize
    }

    pub fn steer_action(&self, stage: usize, mask: u32, depth: f64) -> usize {
        self.best_steer[self.index(stage.min(self.n_stages - 1), mask as usize, self.bin_of(depth))] as usize
    }

    pub fn value_at(&self, stage: usize, mask: u32, depth: f64) -> f64 {
        self.value[self.index(stage, mask as usize, self.bin_of(depth))]
    }

    /// Value of the start state: no faults crossed, bit at mid-reservoir.
    pub fn root_value(&self) -> f64 {
        self.value_at(0, 0, 0.5 * self.thickness)
    }

    /// Plain-text table: one row per stage, mask and bin.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# dsdp v1 bin_width={} depth_min={} n_bins={} n_stages={} n_faults={} thickness={} v_prod={}\n",
            self.bin_width, self.depth_min, self.n_bins, self.n_stages, self.n_faults, self.thickness, self.v_prod
        );
        out.push_str("stage,mask,bin,depth_m,action,steer,value\n");
        for j in 0..self.n_stages {
            for m in 0..1usize << self.n_faults {
                for b in 0..self.n_bins {
                    let i = self.index(j, m, b);
                    let _ = writeln!(
                        out,
                        "{j},{m},{b},{:.6},{},{},{:e}",
                        self.depth_of(b),
                        self.best_action[i],
                        self.best_steer[i],
                        self.value[i]
                    );
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("dsdp table: {what}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let fields: std::collections::HashMap<&str, &str> = header
            .strip_prefix("# dsdp v1 ")
            .ok_or_else(|| bad("missing header"))?
            .split(' ')
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let get = |k: &str| -> Result<f64> {
            fields
                .get(k)
                .ok_or_else(|| bad(&format!("missing {k}")))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad {k}")))
        };
        let n_bins = get("n_bins")? as usize;
        let n_stages = get("n_stages")? as usize;
        let n_faults = get("n_faults")? as usize;
        if n_faults > MAX_FAULTS || n_bins == 0 || n_stages == 0 {
            return Err(bad("implausible dimensions"));
        }
        let total = n_stages * (1 << n_faults) * n_bins;
        let mut policy = DsdpPolicy {
            bin_width: get("bin_width")?,
            depth_min: get("depth_min")?,
            n_bins,
            n_stages,
            n_faults,
            thickness: get("thickness")?,
            v_prod: get("v_prod")?,
            best_action: vec![0; total],
            best_steer: vec![0; total],
            value: vec![0.0; total],
        };
        lines.next().ok_or_else(|| bad("missing column header"))?;
        let mut seen = 0;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad("wrong column count"));
            }
            let p = |i: usize| cols[i].parse::<usize>().map_err(|_| bad("bad integer"));
            let i = policy.index(p(0)?, p(1)?, p(2)?);
            if i >= total {
                return Err(bad("row out of range"));
            }
            policy.best_action[i] = p(4)? as u8;
            policy.best_steer[i] = p(5)? as u8;
            policy.value[i] = cols[6].parse().map_err(|_| bad("bad value"))?;
            seen += 1;
        }
        if seen != total {
            return Err(bad("missing rows"));
        }
        Ok(policy)
    }
}

fn check_prior(prior: &FaultedPrior) -> Result<()> {
    prior.validate()?;
    if prior.faults.len() > MAX_FAULTS {
        return Err(Error::config("faults", format!("at most {MAX_FAULTS} faults")));
    }
    let mut owner = vec![None; prior.n_points];
    for (k, f) in prior.faults.iter().enumerate() {
        for p in f.candidate_points(prior.dx) {
            if p == 0 {
                return Err(Error::config(format!("faults[{k}]"), "candidate at the first point"));
            }
            if let Some(other) = owner[p].replace(k) {
                if other != k {
                    return Err(Error::config(
                        format!("faults[{k}]"),
                        format!("candidate point {p} overlaps faults[{other}]"),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Solves the finite-horizon problem for one production value.
pub fn dsdp_solve(prior: &FaultedPrior, costs: &CostParams, v_prod: f64, config: &DsdpConfig) -> Result<DsdpPolicy> {
    config.validate()?;
    costs.validate()?;
    check_prior(prior)?;
    let h = prior.thickness;
    let bw = config.bin_width;
    let half_bins = (config.span / bw).round() as usize;
    let n_bins = 2 * half_bins + 1;
    let depth_min = 0.5 * h - half_bins as f64 * bw;
    let n_stages = prior.n_points - 1;
    let n_faults = prior.faults.len();
    let n_masks = 1usize << n_faults;
    let total = n_stages * n_masks * n_bins;
    let mut policy = DsdpPolicy {
        bin_width: bw,
        depth_min,
        n_bins,
        n_stages,
        n_faults,
        thickness: h,
        v_prod,
        best_action: vec![0; total],
        best_steer: vec![0; total],
        value: vec![0.0; total],
    };

    let candidates: Vec<Vec<usize>> = prior.faults.iter().map(|f| f.candidate_points(prior.dx)).collect();
    let owner_of = |p: usize| candidates.iter().position(|c| c.contains(&p));
    let trend = prior.base_trend();
    let inside = |d: f64| -INSIDE_TOL <= d && d <= h + INSIDE_TOL;

    // value of stage j + 1, indexed [mask][bin]; zero after the last decision
    let mut next_value = vec![0.0; n_masks * n_bins];
    let interp = |values: &[f64], mask: usize, d: f64| -> f64 {
        let row = &values[mask * n_bins..(mask + 1) * n_bins];
        let t = ((d - depth_min) / bw).clamp(0.0, (n_bins - 1) as f64);
        let lo = t.floor() as usize;
        if lo + 1 >= n_bins {
            return row[n_bins - 1];
        }
        let f = t - lo as f64;
        row[lo] * (1.0 - f) + row[lo + 1] * f
    };

    for j in (0..n_stages).rev() {
        let next = j + 1;
        let dtrend = trend[next] - trend[j];
        let fault_here = owner_of(next);
        let throws: Vec<f64> = match fault_here {
            Some(k) => {
                let spec = &prior.faults[k];
                let normal = Normal::new(spec.displacement_mean, spec.displacement_sd)
                    .map_err(|e| Error::config(format!("faults[{k}]"), e.to_string()))?;
                let mut rng = derived(config.seed, &[j as u64, k as u64]);
                (0..config.mc_samples).map(|_| normal.sample(&mut rng)).collect()
            }
            None => Vec::new(),
        };
        let mut value = vec![0.0; n_masks * n_bins];
        for mask in 0..n_masks {
            // probability that the next point holds the pending fault
            let (p_fault, mask_after) = match fault_here {
                Some(k) if mask & (1 << k) == 0 => {
                    let ahead = candidates[k].iter().filter(|&&c| c > j).count();
                    (1.0 / ahead as f64, mask | (1 << k))
                }
                _ => (0.0, mask),
            };
            let outcome = |d_next: f64, m: usize| -> f64 {
                f64::from(u8::from(inside(d_next))) * v_prod + interp(&next_value, m, d_next)
            };
            for b in 0..n_bins {
                let d = depth_min + b as f64 * bw;
                let mut best = (0usize, f64::NEG_INFINITY);
                let mut best_steer = (0usize, f64::NEG_INFINITY);
                for (a, &delta) in ENV2_STEERS_M.iter().enumerate() {
                    let d_pre = d + delta - dtrend;
                    let mut q = (1.0 - p_fault) * outcome(d_pre, mask);
                    if p_fault > 0.0 {
                        let mean: f64 = throws.iter().map(|z| outcome(d_pre - z, mask_after)).sum::<f64>()
                            / throws.len() as f64;
                        q += p_fault * mean;
                    }
                    q -= costs.c_d;
                    if q > best_steer.1 + TIE_TOL {
                        best_steer = (a, q);
                    }
                }
                best = if best_steer.1 > best.1 { best_steer } else { best };
                if !inside(d) {
                    let mid = 0.5 * h;
                    let cont = (1.0 - p_fault) * interp(&next_value, mask, mid)
                        + p_fault * interp(&next_value, mask_after, mid);
                    let q = v_prod + cont - costs.c_d - costs.c_st;
                    if q > best.1 + TIE_TOL {
                        best = (SIDETRACK, q);
                    }
                }
                let i = policy.index(j, mask, b);
                policy.best_action[i] = best.0 as u8;
                policy.best_steer[i] = best_steer.0 as u8;
                policy.value[i] = best.1;
                value[mask * n_bins + b] = best.1;
            }
        }
        next_value = value;
    }
    Ok(policy)
}

/// Table lookup at the environment's current state.
pub fn dsdp_act(policy: &DsdpPolicy, env: &Env2) -> usize {
    let mask = env.fault_belief().occurred_mask();
    let depth = env.depth_below_top();
    let a = policy.action(env.point(), mask, depth);
    if a == SIDETRACK && !env.legal_actions()[SIDETRACK] {
        policy.steer_action(env.point(), mask, depth)
    } else {
        a
    }
}

//! Ground-truth geology for both environments.
//!
//! The layered reservoir is a pair of smoothed Gaussian random walks (top
//! boundary and thickness). The faulted reservoir is a prior trend offset by
//! fault throws whose locations come from discrete uniform candidate sets and
//! whose displacements are normally distributed.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Forward-function parameters for the layered reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardFnParams1 {
    pub n_points: usize,
    /// Horizontal spacing between points, m.
    pub dx: f64,
    /// Mean depth of the top boundary, m TVD.
    pub mean_top_depth: f64,
    /// Random-walk innovation of the top boundary per point, m.
    pub boundary_step_sd: f64,
    pub smoothing_window: usize,
    pub thickness_mean: f64,
    /// Random-walk innovation of the thickness per point, m.
    pub thickness_sd: f64,
    pub thickness_min: f64,
    /// Fraction of the reservoir (from the top) that is high quality.
    pub hq_fraction: f64,
    /// mD
    pub perm_high: f64,
    /// mD
    pub perm_low: f64,
}

impl Default for ForwardFnParams1 {
    fn default() -> Self {
        Self {
            n_points: 100,
            dx: 10.0,
            mean_top_depth: 1000.0,
            boundary_step_sd: 0.4,
            smoothing_window: 5,
            thickness_mean: 25.0,
            thickness_sd: 0.2,
            thickness_min: 10.0,
            hq_fraction: 0.4,
            perm_high: 200.0,
            perm_low: 100.0,
        }
    }
}

impl ForwardFnParams1 {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::config("n_points", "must be at least 2"));
        }
        if !(self.dx > 0.0) {
            return Err(Error::config("dx", "must be positive"));
        }
        if !(self.boundary_step_sd >= 0.0) {
            return Err(Error::config("boundary_step_sd", "must be non-negative"));
        }
        if self.smoothing_window == 0 {
            return Err(Error::config("smoothing_window", "must be at least 1"));
        }
        if !(self.thickness_sd >= 0.0) {
            return Err(Error::config("thickness_sd", "must be non-negative"));
        }
        if !(self.thickness_min > 0.0) {
            return Err(Error::config("thickness_min", "must be positive"));
        }
        if !(self.thickness_mean >= self.thickness_min) {
            return Err(Error::config(
                "thickness_mean",
                "must be at least thickness_min",
            ));
        }
        if !(self.hq_fraction > 0.0 && self.hq_fraction < 1.0) {
            return Err(Error::config("hq_fraction", "must lie in (0, 1)"));
        }
        if !(self.perm_low > 0.0) {
            return Err(Error::config("perm_low", "must be positive"));
        }
        if !(self.perm_high >= self.perm_low) {
            return Err(Error::config("perm_high", "must be at least perm_low"));
        }
        Ok(())
    }
}

/// One sampled layered reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoRealization1 {
    pub top: Vec<f64>,
    pub thickness: Vec<f64>,
    pub dx: f64,
    pub hq_fraction: f64,
    pub perm_high: f64,
    pub perm_low: f64,
}

impl GeoRealization1 {
    pub fn n_points(&self) -> usize {
        self.top.len()
    }

    pub fn bottom(&self, i: usize) -> f64 {
        self.top[i] + self.thickness[i]
    }

    pub fn hq_boundary(&self, i: usize) -> f64 {
        self.top[i] + self.hq_fraction * self.thickness[i]
    }

    pub fn mid(&self, i: usize) -> f64 {
        self.top[i] + 0.5 * self.thickness[i]
    }

    /// Columnar dump: index, x, top, bottom, hq.
    pub fn to_columnar(&self) -> String {
        let mut out = String::from("index,x_m,top_m,bottom_m,hq_m\n");
        for i in 0..self.n_points() {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6}",
                i,
                i as f64 * self.dx,
                self.top[i],
                self.bottom(i),
                self.hq_boundary(i)
            );
        }
        out
    }
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn random_walk(n: usize, start: f64, sd: f64, rng: &mut StreamRng) -> Vec<f64> {
    let mut walk = Vec::with_capacity(n);
    let mut level = start;
    walk.push(level);
    if sd > 0.0 {
        let innovation = Normal::new(0.0, sd).expect("sd validated");
        for _ in 1..n {
            level += innovation.sample(rng);
            walk.push(level);
        }
    } else {
        walk.resize(n, level);
    }
    walk
}

pub fn sample_realization_env1(
    params: &ForwardFnParams1,
    rng: &mut StreamRng,
) -> Result<GeoRealization1> {
    params.validate()?;
    let n = params.n_points;
    let top = moving_average(
        &random_walk(n, params.mean_top_depth, params.boundary_step_sd, rng),
        params.smoothing_window,
    );
    let thickness = moving_average(
        &random_walk(n, params.thickness_mean, params.thickness_sd, rng),
        params.smoothing_window,
    )
    .into_iter()
    .map(|h| h.max(params.thickness_min))
    .collect();
    Ok(GeoRealization1 {
        top,
        thickness,
        dx: params.dx,
        hq_fraction: params.hq_fraction,
        perm_high: params.perm_high,
        perm_low: params.perm_low,
    })
}

/// Prior for one fault: uniform over candidate locations, normal throw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Horizontal positions, m.
    pub candidate_locations: Vec<f64>,
    /// Positive is a downward shift of both boundaries, m.
    pub displacement_mean: f64,
    pub displacement_sd: f64,
}

impl FaultSpec {
    pub fn validate(&self, index: usize, dx: f64) -> Result<()> {
        let field = format!("faults[{index}]");
        if self.candidate_locations.is_empty() {
            return Err(Error::config(field, "candidate_locations is empty"));
        }
        for &loc in &self.candidate_locations {
            let steps = loc / dx;
            if !(loc >= 0.0) || (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::config(
                    field,
                    format!("location {loc} is not a non-negative multiple of {dx} m"),
                ));
            }
        }
        if !(self.displacement_sd >= 0.0) || !self.displacement_mean.is_finite() {
            return Err(Error::config(field, "displacement must be finite with sd >= 0"));
        }
        Ok(())
    }

    /// Grid indices of the candidate locations.
    pub fn candidate_points(&self, dx: f64) -> Vec<usize> {
        self.candidate_locations
            .iter()
            .map(|&loc| (loc / dx).round() as usize)
            .collect()
    }
}

/// Geometry and fault prior of the faulted reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultedPrior {
    pub n_points: usize,
    pub dx: f64,
    /// Depth of the upper boundary at the first point, m TVD.
    pub top_depth: f64,
    /// Prior dip of the upper boundary per point, m.
    pub trend_slope: f64,
    pub thickness: f64,
    pub faults: Vec<FaultSpec>,
}

impl Default for FaultedPrior {
    fn default() -> Self {
        Self {
            n_points: 30,
            dx: 30.0,
            top_depth: 2000.0,
            trend_slope: 0.1,
            thickness: 5.0,
            faults: vec![
                FaultSpec {
                    candidate_locations: vec![120.0, 150.0, 180.0],
                    displacement_mean: 3.0,
                    displacement_sd: 1.0,
                },
                // Faults 2 and 3 are placeholders: only the first fault of the
                // reference prior is quantified.
                FaultSpec {
                    candidate_locations: vec![360.0, 390.0, 420.0],
                    displacement_mean: 2.0,
                    displacement_sd: 1.0,
                },
                FaultSpec {
                    candidate_locations: vec![600.0, 660.0, 720.0],
                    displacement_mean: 4.0,
                    displacement_sd: 1.5,
                },
            ],
        }
    }
}

impl FaultedPrior {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::config("ex2_n_points", "must be at least 2"));
        }
        if !(self.dx > 0.0) {
            return Err(Error::config("ex2_dx", "must be positive"));
        }
        if !(self.thickness > 0.0) {
            return Err(Error::config("ex2_thickness", "must be positive"));
        }
        if !self.trend_slope.is_finite() || !self.top_depth.is_finite() {
            return Err(Error::config("ex2_trend_slope", "must be finite"));
        }
        for (k, fault) in self.faults.iter().enumerate() {
            fault.validate(k, self.dx)?;
            let last = (self.n_points - 1) as f64 * self.dx;
            if fault.candidate_locations.iter().any(|&l| l > last) {
                return Err(Error::config(
                    format!("faults[{k}]"),
                    "candidate location beyond the last point",
                ));
            }
        }
        Ok(())
    }

    pub fn base_trend(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|j| self.top_depth + self.trend_slope * j as f64)
            .collect()
    }

    /// Horizontal length from the first to the last point, m.
    pub fn length(&self) -> f64 {
        (self.n_points - 1) as f64 * self.dx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultDraw {
    pub location: f64,
    pub displacement: f64,
}

/// One sampled faulted reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoRealization2 {
    pub upper: Vec<f64>,
    pub trend: Vec<f64>,
    pub thickness: f64,
    pub dx: f64,
    /// One draw per fault of the prior, in prior order.
    pub fault_draws: Vec<FaultDraw>,
}

impl GeoRealization2 {
    pub fn n_points(&self) -> usize {
        self.upper.len()
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.upper[j] + self.thickness
    }

    pub fn mid(&self, j: usize) -> f64 {
        self.upper[j] + 0.5 * self.thickness
    }

    pub fn contains(&self, j: usize, tvd: f64) -> bool {
        self.upper[j] - INSIDE_TOL <= tvd && tvd <= self.lower(j) + INSIDE_TOL
    }

    /// Observed throw between points `j - 1` and `j` after removing the trend.
    pub fn offset_at(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        (self.upper[j] - self.upper[j - 1]) - (self.trend[j] - self.trend[j - 1])
    }

    /// Columnar dump: index, x, upper, lower, and a fault annotation column.
    pub fn to_columnar(&self) -> String {
        let mut out = String::from("index,x_m,upper_m,lower_m,faults\n");
        for j in 0..self.n_points() {
            let x = j as f64 * self.dx;
            let notes: Vec<String> = self
                .fault_draws
                .iter()
                .enumerate()
                .filter(|(_, d)| (d.location - x).abs() < 1e-9)
                .map(|(k, d)| format!("f{}:{:+.6}", k + 1, d.displacement))
                .collect();
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{}",
                j,
                x,
                self.upper[j],
                self.lower(j),
                notes.join(" ")
            );
        }
        out
    }
}

/// Tolerance for boundary membership tests, m.
pub const INSIDE_TOL: f64 = 1e-9;

pub fn sample_realization_env2(
    prior: &[FaultSpec],
    base_trend: &[f64],
    thickness: f64,
    dx: f64,
    rng: &mut StreamRng,
) -> Result<GeoRealization2> {
    if !(thickness > 0.0) {
        return Err(Error::config("thickness", "must be positive"));
    }
    if !(dx > 0.0) {
        return Err(Error::config("dx", "must be positive"));
    }
    for (k, fault) in prior.iter().enumerate() {
        fault.validate(k, dx)?;
    }
    let mut fault_draws = Vec::with_capacity(prior.len());
    for fault in prior {
        let pick = rng.random_range(0..fault.candidate_locations.len());
        let displacement = if fault.displacement_sd > 0.0 {
            Normal::new(fault.displacement_mean, fault.displacement_sd)
                .expect("sd validated")
                .sample(rng)
        } else {
            fault.displacement_mean
        };
        fault_draws.push(FaultDraw {
            location: fault.candidate_locations[pick],
            displacement,
        });
    }
    let upper = base_trend
        .iter()
        .enumerate()
        .map(|(j, &depth)| {
            let x = j as f64 * dx;
            depth
                + fault_draws
                    .iter()
                    .filter(|d| d.location <= x + 1e-9)
                    .map(|d| d.displacement)
                    .sum::<f64>()
        })
        .collect();
    Ok(GeoRealization2 {
        upper,
        trend: base_trend.to_vec(),
        thickness,
        dx,
        fault_draws,
    })
}

/// Samples a faulted realization from a full prior description.
pub fn sample_faulted(prior: &FaultedPrior, rng: &mut StreamRng) -> Result<GeoRealization2> {
    prior.validate()?;
    sample_realization_env2(
        &prior.faults,
        &prior.base_trend(),
        prior.thickness,
        prior.dx,
        rng,
    )
}

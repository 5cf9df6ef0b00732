//! Sensing-utility model: weights, coverage fields, the utility function and
//! the evaluation metrics built on top of them.

mod metrics;
mod relaxed;

pub use metrics::{
    actual_distribution, calibrate_beta, kl_divergence, ptd_to_weights, spatial_coverage_indicators, stwsu,
    target_distribution, twsu_and_tag, utility, utility_smoothed, CoverageIndicators, GridMetric,
};
pub use relaxed::{maximize_with_total, RelaxedAllocation};

use serde::{Deserialize, Serialize};

use crate::error::{DscError, Result};
use crate::grid::{GridIndex, TimeIndex};

/// Smoothing used inside solver gradients, `(N + eps)^beta`.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Tolerance beyond which loaded weights are reported as unnormalized.
pub const NORMALIZATION_WARN_TOL: f64 = 1e-6;
/// Weights whose sum is within this of 1 are stored untouched.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub beta: f64,
    pub epsilon_smooth: f64,
}

impl UtilityParams {
    pub fn new(beta: f64) -> Result<Self> {
        let params = UtilityParams { beta, epsilon_smooth: DEFAULT_EPSILON };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(DscError::Domain(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.epsilon_smooth >= 0.0) {
            return Err(DscError::Domain("epsilon_smooth must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Spatial and temporal sensing weights.
///
/// When `joint` is present it replaces the product `mu_t * w_g` everywhere,
/// which is how a prescribed target distribution is expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingWeights {
    spatial: Vec<f64>,
    temporal: Vec<f64>,
    joint: Option<Vec<f64>>,
}

fn check_nonnegative(values: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(DscError::Domain(format!("{what} weights must be finite and nonnegative, found {bad}")));
    }
    Ok(())
}

fn normalize(values: &mut [f64], what: &str) -> Result<()> {
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) {
        return Err(DscError::Domain(format!("{what} weights sum to zero")));
    }
    if (sum - 1.0).abs() > NORMALIZATION_WARN_TOL {
        log::warn!("{what} weights sum to {sum}; renormalizing");
    }
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

impl SensingWeights {
    /// Builds weights, renormalizing each vector to sum 1.
    pub fn new(mut spatial: Vec<f64>, mut temporal: Vec<f64>) -> Result<Self> {
        check_nonnegative(&spatial, "spatial")?;
        check_nonnegative(&temporal, "temporal")?;
        normalize(&mut spatial, "spatial")?;
        normalize(&mut temporal, "temporal")?;
        Ok(SensingWeights { spatial, temporal, joint: None })
    }

    pub fn uniform(n_grids: usize, n_windows: usize) -> Self {
        SensingWeights {
            spatial: vec![1.0 / n_grids as f64; n_grids],
            temporal: vec![1.0 / n_windows as f64; n_windows],
            joint: None,
        }
    }

    /// Joint weights `pi_{g,t}`, row-major by grid. The spatial and temporal
    /// vectors are set to the marginals of `pi`.
    pub fn from_joint(n_grids: usize, n_windows: usize, mut joint: Vec<f64>) -> Result<Self> {
        if joint.len() != n_grids * n_windows {
            return Err(DscError::DimensionMismatch {
                what: "joint weights",
                expected: n_grids * n_windows,
                got: joint.len(),
            });
        }
        check_nonnegative(&joint, "joint")?;
        normalize(&mut joint, "joint")?;
        let spatial = (0..n_grids).map(|g| joint[g * n_windows..(g + 1) * n_windows].iter().sum()).collect();
        let temporal = (0..n_windows).map(|t| (0..n_grids).map(|g| joint[g * n_windows + t]).sum()).collect();
        Ok(SensingWeights { spatial, temporal, joint: Some(joint) })
    }

    pub fn n_grids(&self) -> usize {
        self.spatial.len()
    }

    pub fn n_windows(&self) -> usize {
        self.temporal.len()
    }

    pub fn spatial(&self) -> &[f64] {
        &self.spatial
    }

    pub fn temporal(&self) -> &[f64] {
        &self.temporal
    }

    pub fn joint(&self) -> Option<&[f64]> {
        self.joint.as_deref()
    }

    pub fn is_joint(&self) -> bool {
        self.joint.is_some()
    }

    /// Weight of a single space-time cell, `mu_t * w_g` or `pi_{g,t}`.
    #[inline]
    pub fn cell(&self, g: usize, t: usize) -> f64 {
        match &self.joint {
            Some(joint) => joint[g * self.temporal.len() + t],
            None => self.temporal[t] * self.spatial[g],
        }
    }

    /// Spatial weight of one grid (the marginal for joint weights).
    pub fn grid_weight(&self, g: GridIndex) -> f64 {
        self.spatial[g.0]
    }

    pub fn window_weight(&self, t: TimeIndex) -> f64 {
        self.temporal[t.0]
    }

    /// Same temporal weights with a replacement spatial vector, renormalized.
    pub fn with_spatial(&self, spatial: Vec<f64>) -> Result<Self> {
        if spatial.len() != self.spatial.len() {
            return Err(DscError::DimensionMismatch {
                what: "spatial weights",
                expected: self.spatial.len(),
                got: spatial.len(),
            });
        }
        SensingWeights::new(spatial, self.temporal.clone())
    }
}

/// Expected vehicle counts `N_{g,t}`, dense and row-major by grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageField {
    n_grids: usize,
    n_windows: usize,
    values: Vec<f64>,
}

impl CoverageField {
    pub fn zeros(n_grids: usize, n_windows: usize) -> Self {
        CoverageField { n_grids, n_windows, values: vec![0.0; n_grids * n_windows] }
    }

    pub fn from_vec(n_grids: usize, n_windows: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_grids * n_windows {
            return Err(DscError::DimensionMismatch {
                what: "coverage field",
                expected: n_grids * n_windows,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(DscError::Domain(format!("coverage must be finite and nonnegative, found {bad}")));
        }
        Ok(CoverageField { n_grids, n_windows, values })
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, g: usize, t: usize) -> f64 {
        self.values[g * self.n_windows + t]
    }

    #[inline]
    pub fn set(&mut self, g: usize, t: usize, value: f64) {
        self.values[g * self.n_windows + t] = value;
    }

    #[inline]
    pub fn add_at(&mut self, g: usize, t: usize, value: f64) {
        self.values[g * self.n_windows + t] += value;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn same_shape(&self, other: &CoverageField) -> bool {
        self.n_grids == other.n_grids && self.n_windows == other.n_windows
    }

    /// Elementwise sum.
    pub fn plus(&self, other: &CoverageField) -> Result<CoverageField> {
        if !self.same_shape(other) {
            return Err(DscError::DimensionMismatch {
                what: "coverage field",
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(CoverageField {
            n_grids: self.n_grids,
            n_windows: self.n_windows,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> CoverageField {
        CoverageField {
            n_grids: self.n_grids,
            n_windows: self.n_windows,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// A probability distribution over space-time cells, row-major by grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n_grids: usize,
    pub n_windows: usize,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, g: usize, t: usize) -> f64 {
        self.probs[g * self.n_windows + t]
    }
}

/// Per-vehicle costs over the project period and the total budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStructure {
    pub taxi: f64,
    pub bus: f64,
    pub dv: f64,
    pub budget: f64,
}

impl CostStructure {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("taxi", self.taxi), ("bus", self.bus), ("dv", self.dv)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(DscError::InvalidScenario(format!("{name} cost must be positive, got {c}")));
            }
        }
        if !(self.budget >= 0.0) {
            return Err(DscError::InvalidScenario(format!("budget must be nonnegative, got {}", self.budget)));
        }
        Ok(())
    }

    pub fn spend(&self, n_taxi: u64, bus_sensors: u64, n_dv: u64) -> f64 {
        self.taxi * n_taxi as f64 + self.bus * bus_sensors as f64 + self.dv * n_dv as f64
    }
}

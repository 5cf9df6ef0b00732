use super::{CoverageField, Distribution, SensingWeights, UtilityParams};
use crate::error::{DscError, Result};

/// Sensing utility `n^beta`.
pub fn utility(n: f64, params: &UtilityParams) -> Result<f64> {
    params.validate()?;
    if !(n >= 0.0) {
        return Err(DscError::Domain(format!("utility needs n >= 0, got {n}")));
    }
    Ok(n.powf(params.beta))
}

/// `(n + eps)^beta`, the form used by solver gradients.
#[inline]
pub fn utility_smoothed(n: f64, params: &UtilityParams) -> f64 {
    (n + params.epsilon_smooth).powf(params.beta)
}

fn check_shape(field: &CoverageField, weights: &SensingWeights) -> Result<()> {
    if field.n_grids() != weights.n_grids() {
        return Err(DscError::DimensionMismatch { what: "grids", expected: weights.n_grids(), got: field.n_grids() });
    }
    if field.n_windows() != weights.n_windows() {
        return Err(DscError::DimensionMismatch {
            what: "windows",
            expected: weights.n_windows(),
            got: field.n_windows(),
        });
    }
    Ok(())
}

/// Space-time weighted sensing utility `sum_t mu_t sum_g w_g N^beta`.
pub fn stwsu(field: &CoverageField, weights: &SensingWeights, params: &UtilityParams) -> Result<f64> {
    check_shape(field, weights)?;
    params.validate()?;
    let mut phi = 0.0;
    for g in 0..field.n_grids() {
        for t in 0..field.n_windows() {
            let w = weights.cell(g, t);
            if w > 0.0 {
                phi += w * field.get(g, t).powf(params.beta);
            }
        }
    }
    Ok(phi)
}

/// Utility exponent from the coverage ratio `zeta` wanted between the most
/// and least important grids: `beta = 1 - log_zeta(w_max / w_min)`.
pub fn calibrate_beta(w_max: f64, w_min: f64, zeta: f64) -> Result<f64> {
    if !(w_min > 0.0 && w_max >= w_min && w_max.is_finite()) {
        return Err(DscError::Domain(format!(
            "calibration needs w_max >= w_min > 0, got w_max = {w_max}, w_min = {w_min}"
        )));
    }
    let ratio = w_max / w_min;
    if ratio == 1.0 {
        return Err(DscError::DegenerateCalibration);
    }
    if !(zeta > ratio) {
        return Err(DscError::CalibrationInfeasible { zeta, ratio });
    }
    Ok(1.0 - ratio.ln() / zeta.ln())
}

/// Closed-form optimal utility distribution of the resource-constrained problem.
pub fn target_distribution(weights: &SensingWeights, params: &UtilityParams) -> Result<Distribution> {
    params.validate()?;
    let exponent = params.beta / (1.0 - params.beta);
    let (ng, nt) = (weights.n_grids(), weights.n_windows());
    let mut probs = Vec::with_capacity(ng * nt);
    for g in 0..ng {
        for t in 0..nt {
            let w = weights.cell(g, t);
            probs.push(if w > 0.0 { w.powf(exponent) } else { 0.0 });
        }
    }
    let sum: f64 = probs.iter().sum();
    if !(sum > 0.0) {
        return Err(DscError::UndefinedDistribution("all weights are zero".into()));
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok(Distribution { n_grids: ng, n_windows: nt, probs })
}

/// Normalized utilities `xi(N) / sum xi(N)` of a coverage field.
pub fn actual_distribution(
    field: &CoverageField,
    weights: &SensingWeights,
    params: &UtilityParams,
) -> Result<Distribution> {
    check_shape(field, weights)?;
    params.validate()?;
    let mut probs: Vec<f64> = field.values().iter().map(|n| n.powf(params.beta)).collect();
    let sum: f64 = probs.iter().sum();
    if !(sum > 0.0) {
        return Err(DscError::UndefinedDistribution("coverage field is all zero".into()));
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok(Distribution { n_grids: field.n_grids(), n_windows: field.n_windows(), probs })
}

/// `KL(ad || td)` in nats. Cells with `ad = 0` contribute nothing; a cell
/// with `ad > 0` and `td = 0` makes the divergence infinite.
pub fn kl_divergence(ad: &Distribution, td: &Distribution) -> Result<f64> {
    if ad.probs.len() != td.probs.len() {
        return Err(DscError::DimensionMismatch {
            what: "distribution",
            expected: td.probs.len(),
            got: ad.probs.len(),
        });
    }
    let mut kl = 0.0;
    for (&a, &q) in ad.probs.iter().zip(&td.probs) {
        if a <= 0.0 {
            continue;
        }
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += a * (a / q).ln();
    }
    Ok(kl.max(0.0))
}

/// Per-grid time-weighted utility and time-averaged gap to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMetric {
    pub twsu: f64,
    /// Percent; `None` when no window has a positive target or the field is all zero.
    pub tag: Option<f64>,
    /// Windows excluded from the gap because the target is zero there.
    pub excluded_windows: usize,
}

pub fn twsu_and_tag(
    field: &CoverageField,
    weights: &SensingWeights,
    params: &UtilityParams,
) -> Result<Vec<GridMetric>> {
    check_shape(field, weights)?;
    let td = target_distribution(weights, params)?;
    let ad = actual_distribution(field, weights, params).ok();
    let nt = field.n_windows();
    let metrics = (0..field.n_grids())
        .map(|g| {
            let twsu = (0..nt)
                .map(|t| weights.window_weight(crate::grid::TimeIndex(t)) * field.get(g, t).powf(params.beta))
                .sum();
            let mut gap_sum = 0.0;
            let mut counted = 0usize;
            let mut excluded = 0usize;
            for t in 0..nt {
                let target = td.get(g, t);
                if target > 0.0 {
                    if let Some(ad) = &ad {
                        gap_sum += (ad.get(g, t) - target) / target;
                    }
                    counted += 1;
                } else {
                    excluded += 1;
                }
            }
            let tag = (ad.is_some() && counted > 0).then(|| gap_sum / counted as f64 * 100.0);
            GridMetric { twsu, tag, excluded_windows: excluded }
        })
        .collect();
    Ok(metrics)
}

/// Joint weights `pi_{g,t} = PTD^{1-beta}` (renormalized) whose optimum reproduces the PTD.
pub fn ptd_to_weights(ptd: &Distribution, params: &UtilityParams) -> Result<SensingWeights> {
    params.validate()?;
    let joint = ptd.probs.iter().map(|p| if *p > 0.0 { p.powf(1.0 - params.beta) } else { 0.0 }).collect();
    SensingWeights::from_joint(ptd.n_grids, ptd.n_windows, joint)
}

/// Spatial coverage indicators: weight mass reachable by each fleet combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageIndicators {
    pub taxi: f64,
    pub bus: f64,
    pub taxi_bus: f64,
    pub taxi_bus_dv: f64,
}

impl CoverageIndicators {
    /// Relative differences `(W(T+B)-W(T))/W(T)`, `(W(T+B)-W(B))/W(B)`, `(W(T+B+D)-W(T+B))/W(T+B)`.
    pub fn relative_differences(&self) -> [f64; 3] {
        [
            (self.taxi_bus - self.taxi) / self.taxi,
            (self.taxi_bus - self.bus) / self.bus,
            (self.taxi_bus_dv - self.taxi_bus) / self.taxi_bus,
        ]
    }
}

/// `taxi_coverage` ranks grids (any monotone per-grid score); the top
/// `ceil(percentile * n_grids)` grids with positive coverage count as taxi
/// covered. `on_bus_route` marks grids intersected by at least one line.
pub fn spatial_coverage_indicators(
    weights: &SensingWeights,
    taxi_coverage: &[f64],
    on_bus_route: &[bool],
    percentile: f64,
) -> Result<CoverageIndicators> {
    let n = weights.n_grids();
    if taxi_coverage.len() != n || on_bus_route.len() != n {
        return Err(DscError::DimensionMismatch {
            what: "coverage indicator inputs",
            expected: n,
            got: taxi_coverage.len().min(on_bus_route.len()),
        });
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(DscError::Domain(format!("percentile must lie in (0,1), got {percentile}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| taxi_coverage[b].total_cmp(&taxi_coverage[a]).then(a.cmp(&b)));
    let take = (percentile * n as f64).ceil() as usize;
    let mut taxi_covered = vec![false; n];
    for &g in order.iter().take(take) {
        if taxi_coverage[g] > 0.0 {
            taxi_covered[g] = true;
        }
    }
    let w = weights.spatial();
    let mass = |pred: &dyn Fn(usize) -> bool| (0..n).filter(|&g| pred(g)).map(|g| w[g]).sum::<f64>();
    Ok(CoverageIndicators {
        taxi: mass(&|g| taxi_covered[g]),
        bus: mass(&|g| on_bus_route[g]),
        taxi_bus: mass(&|g| taxi_covered[g] || on_bus_route[g]),
        taxi_bus_dv: 1.0,
    })
}

//! Bus-network degradation and the coverage-indicator transferability study.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SensingScenario;
use crate::bus::BusIncidence;
use crate::error::{DscError, Result};
use crate::joint::{linear_fit, solve_fleet_combination, FleetCombination};
use crate::model::spatial_coverage_indicators;

/// Copy of the scenario with `ceil(fraction * m)` bus lines removed, sampled
/// uniformly without replacement. Remaining lines keep their order.
pub fn degrade_bus_network(scenario: &SensingScenario, fraction: f64, seed: u64) -> Result<SensingScenario> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DscError::Domain(format!("removal fraction must lie in [0,1], got {fraction}")));
    }
    let m = scenario.lines.len();
    let remove = ((fraction * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drop = vec![false; m];
    for i in sample(&mut rng, m, remove.min(m)).iter() {
        drop[i] = true;
    }
    let mut out = scenario.clone();
    out.lines = scenario.lines.iter().zip(&drop).filter(|(_, d)| !**d).map(|(l, _)| l.clone()).collect();
    Ok(out)
}

/// One degraded network and its indicators and utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub variant: usize,
    pub fraction: f64,
    pub lines: usize,
    pub w_taxi: f64,
    pub w_bus: f64,
    pub w_taxi_bus: f64,
    pub phi_taxi: f64,
    pub phi_bus: f64,
    pub phi_taxi_bus: f64,
}

impl TransferRow {
    /// `(W(T+B)-W(T))/W(T)` against `(Phi(T+B)-Phi(T))/Phi(T)`.
    pub fn versus_taxi(&self) -> (f64, f64) {
        ((self.w_taxi_bus - self.w_taxi) / self.w_taxi, (self.phi_taxi_bus - self.phi_taxi) / self.phi_taxi)
    }

    /// `(W(T+B)-W(B))/W(B)` against `(Phi(T+B)-Phi(B))/Phi(B)`.
    pub fn versus_bus(&self) -> (f64, f64) {
        ((self.w_taxi_bus - self.w_bus) / self.w_bus, (self.phi_taxi_bus - self.phi_bus) / self.phi_bus)
    }
}

/// Least-squares line through the finite `(x, y)` pairs of one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub name: String,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl Regression {
    pub fn fit(name: &str, pairs: &[(f64, f64)]) -> Option<Regression> {
        let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        let (x, y): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
        linear_fit(&x, &y).map(|(slope, intercept, r2)| Regression {
            name: name.into(),
            points: kept.len(),
            slope,
            intercept,
            r2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferStudy {
    pub budget: f64,
    pub rows: Vec<TransferRow>,
    pub regressions: Vec<Regression>,
}

/// Removal fractions spread evenly over `[0, max_fraction]`.
pub fn variant_fractions(variants: usize, max_fraction: f64) -> Vec<f64> {
    match variants {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| max_fraction * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Degrades the bus network `variants` times and relates the coverage indicators
/// to the realised taxi/bus utilities. Variants run in parallel.
pub fn transfer_study(scenario: &SensingScenario, variants: usize, budget: f64) -> Result<TransferStudy> {
    let fractions = variant_fractions(variants, scenario.transfer.max_fraction);
    let taxi_rank = scenario.taxi.mean_over_windows();
    let rows = fractions
        .par_iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let variant = degrade_bus_network(scenario, fraction, scenario.seed.wrapping_add(i as u64))?;
            let mut variant = variant;
            variant.dv = None;
            let problem = variant.joint_problem()?;
            let on_route = BusIncidence::from_lines(&variant.lines, variant.n_grids()).covered();
            let sci =
                spatial_coverage_indicators(&variant.weights, &taxi_rank, &on_route, scenario.transfer.percentile)?;
            let phi = |combo| solve_fleet_combination(&problem, combo, budget).map(|s| s.phi);
            Ok(TransferRow {
                variant: i,
                fraction,
                lines: variant.lines.len(),
                w_taxi: sci.taxi,
                w_bus: sci.bus,
                w_taxi_bus: sci.taxi_bus,
                phi_taxi: phi(FleetCombination::Taxi)?,
                phi_bus: phi(FleetCombination::Bus)?,
                phi_taxi_bus: phi(FleetCombination::TaxiBus)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let vs_taxi: Vec<_> = rows.iter().map(TransferRow::versus_taxi).collect();
    let vs_bus: Vec<_> = rows.iter().map(TransferRow::versus_bus).collect();
    let regressions = [Regression::fit("taxi_bus_vs_taxi", &vs_taxi), Regression::fit("taxi_bus_vs_bus", &vs_bus)]
        .into_iter()
        .flatten()
        .collect();
    Ok(TransferStudy { budget, rows, regressions })
}

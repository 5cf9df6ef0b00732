//! Joint taxi-bus-DV allocation.
//!
//! The budget is split by the number of dedicated vehicles `n_D`. For each
//! split the taxi-bus allocation and the DV routes are improved in turn, each
//! with the other's coverage held fixed, while the total utility strictly
//! improves. The best split wins.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bus::bus_coverage;
use crate::error::{DscError, Result};
use crate::model::{actual_distribution, kl_divergence, stwsu, target_distribution, CoverageField};
use crate::router::{
    default_start_nodes, extend_round_trips, route_fleet, DvRoute, GridMap, RoadNetwork, RouterOptions, RoutingContext,
};
use crate::solver::{solve, FleetMode, SolverOptions, TaxiBusProblem, TaxiBusSolution};
use crate::taxi::taxi_coverage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FleetCombination {
    #[serde(rename = "taxi")]
    Taxi,
    #[serde(rename = "bus")]
    Bus,
    #[serde(rename = "taxi+bus")]
    TaxiBus,
    #[serde(rename = "taxi+bus+dv")]
    TaxiBusDv,
}

impl FleetCombination {
    pub const ALL: [FleetCombination; 4] =
        [FleetCombination::Taxi, FleetCombination::Bus, FleetCombination::TaxiBus, FleetCombination::TaxiBusDv];

    pub fn name(self) -> &'static str {
        match self {
            FleetCombination::Taxi => "taxi",
            FleetCombination::Bus => "bus",
            FleetCombination::TaxiBus => "taxi+bus",
            FleetCombination::TaxiBusDv => "taxi+bus+dv",
        }
    }
}

impl fmt::Display for FleetCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FleetCombination {
    type Err = DscError;

    fn from_str(s: &str) -> Result<Self> {
        FleetCombination::ALL.into_iter().find(|c| c.name() == s.trim()).ok_or_else(|| {
            DscError::InvalidScenario(format!(
                "unknown fleet combination {s:?} (expected taxi, bus, taxi+bus or taxi+bus+dv)"
            ))
        })
    }
}

/// Road network and operating rules for dedicated vehicles.
#[derive(Debug, Clone)]
pub struct DvSetup {
    pub network: RoadNetwork,
    pub map: GridMap,
    /// Windows in which DVs drive; one one-way trip per window.
    pub op_windows: Vec<usize>,
    /// Length of one trip, hours.
    pub trip_hours: f64,
    /// Explicit start nodes; missing ones default to the highest-weight grids.
    pub starts: Vec<usize>,
    pub router: RouterOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    pub solver: SolverOptions,
    /// Taxi-bus / routing alternations per split.
    pub max_iter: usize,
    /// Largest number of DVs considered.
    pub dv_cap: usize,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions { solver: SolverOptions::default(), max_iter: 5, dv_cap: 16 }
    }
}

/// The complete problem. `taxi_bus.budget` is ignored; budgets are passed per solve.
#[derive(Debug, Clone)]
pub struct JointProblem {
    pub taxi_bus: TaxiBusProblem,
    pub dv: Option<DvSetup>,
    pub options: JointOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DscSolution {
    pub combo: FleetCombination,
    pub budget: f64,
    pub n_taxi: u64,
    pub y: Vec<u64>,
    pub n_dv: usize,
    pub dv_routes: Vec<DvRoute>,
    pub phi: f64,
    /// `None` when nothing is covered, so the distribution is undefined.
    pub kl: Option<f64>,
    pub taxi_field: CoverageField,
    pub bus_field: CoverageField,
    pub dv_field: CoverageField,
    pub spent: f64,
    /// Accepted utility after each alternation of the chosen split.
    pub trace: Vec<f64>,
    /// Best utility per number of DVs examined.
    pub branches: Vec<(usize, f64)>,
    /// More DVs were affordable than the cap allowed.
    pub cap_breached: bool,
    /// Whether every relaxed taxi-bus solve reached the gap tolerance.
    pub converged: bool,
    /// Relaxed taxi-bus objective behind the integer allocation.
    pub relaxed_phi: f64,
}

impl DscSolution {
    pub fn total_field(&self) -> Result<CoverageField> {
        self.taxi_field.plus(&self.bus_field)?.plus(&self.dv_field)
    }

    pub fn bus_sensors(&self) -> u64 {
        self.y.iter().sum()
    }

    /// Budget and bound feasibility, and agreement of the stored utility with the stored fields.
    pub fn check(&self, problem: &JointProblem) -> Result<()> {
        let tb = &problem.taxi_bus;
        let spent = tb.costs.spend(self.n_taxi, self.bus_sensors(), self.n_dv as u64);
        if spent > self.budget * (1.0 + 1e-12) + 1e-9 {
            return Err(DscError::BoundViolation(format!("spent {spent} exceeds budget {}", self.budget)));
        }
        if self.n_taxi > tb.taxi.fleet_bound {
            return Err(DscError::BoundViolation(format!(
                "{} taxis exceed fleet {}",
                self.n_taxi, tb.taxi.fleet_bound
            )));
        }
        if self.y.len() != tb.lines.len() {
            return Err(DscError::DimensionMismatch {
                what: "bus sensors",
                expected: tb.lines.len(),
                got: self.y.len(),
            });
        }
        for (y, line) in self.y.iter().zip(&tb.lines) {
            if *y > line.fleet_size {
                return Err(DscError::BoundViolation(format!(
                    "line {}: {y} sensors exceed fleet {}",
                    line.id, line.fleet_size
                )));
            }
        }
        if self.dv_routes.len() != self.n_dv {
            return Err(DscError::BoundViolation("route count differs from DV count".into()));
        }
        let phi = stwsu(&self.total_field()?, &tb.weights, &tb.params)?;
        if (phi - self.phi).abs() > 1e-9 * (1.0 + phi.abs()) {
            return Err(DscError::BoundViolation(format!("stored utility {} differs from recomputed {phi}", self.phi)));
        }
        Ok(())
    }
}

struct Evaluated {
    phi: f64,
    kl: Option<f64>,
    taxi_field: CoverageField,
    bus_field: CoverageField,
}

fn evaluate(problem: &TaxiBusProblem, sol: &TaxiBusSolution, dv_field: &CoverageField) -> Result<Evaluated> {
    let taxi_field = taxi_coverage(&problem.taxi, sol.n_taxi_int as f64)?;
    let y: Vec<f64> = sol.y_int.iter().map(|&v| v as f64).collect();
    let bus_field = bus_coverage(&problem.lines, &problem.incidence, &y, problem.n_windows())?;
    let total = taxi_field.plus(&bus_field)?.plus(dv_field)?;
    let phi = stwsu(&total, &problem.weights, &problem.params)?;
    let kl = kl_of(&total, problem)?;
    Ok(Evaluated { phi, kl, taxi_field, bus_field })
}

/// KL divergence of a field's utility distribution from the target.
pub fn kl_of(field: &CoverageField, problem: &TaxiBusProblem) -> Result<Option<f64>> {
    let td = target_distribution(&problem.weights, &problem.params)?;
    match actual_distribution(field, &problem.weights, &problem.params) {
        Ok(ad) => Ok(Some(kl_divergence(&ad, &td)?)),
        Err(DscError::UndefinedDistribution(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(DscError::InvalidScenario(format!("budget must be nonnegative, got {budget}")));
    }
    Ok(())
}

fn taxi_bus_only(problem: &JointProblem, budget: f64, combo: FleetCombination, mode: FleetMode) -> Result<DscSolution> {
    let base = &problem.taxi_bus;
    let tb = base.with_budget(budget)?.with_background(CoverageField::zeros(base.n_grids(), base.n_windows()))?;
    let sol = solve(&tb, mode, &problem.options.solver)?;
    let zero = CoverageField::zeros(tb.n_grids(), tb.n_windows());
    let ev = evaluate(&tb, &sol, &zero)?;
    Ok(DscSolution {
        combo,
        budget,
        n_taxi: sol.n_taxi_int,
        y: sol.y_int.clone(),
        n_dv: 0,
        dv_routes: Vec::new(),
        phi: ev.phi,
        kl: ev.kl,
        taxi_field: ev.taxi_field,
        bus_field: ev.bus_field,
        dv_field: zero,
        spent: sol.rounded_cost(&tb.costs),
        trace: vec![ev.phi],
        branches: vec![(0, ev.phi)],
        cap_breached: false,
        converged: sol.converged,
        relaxed_phi: sol.objective_relaxed,
    })
}

fn start_nodes(dv: &DvSetup, problem: &TaxiBusProblem, n: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = dv.starts.iter().copied().take(n).collect();
    if starts.len() < n {
        let defaults = default_start_nodes(&dv.network, &dv.map, &problem.weights, n);
        starts.extend(defaults.into_iter().skip(starts.len()));
    }
    starts
}

/// Alternating taxi-bus solve and DV routing for a fixed number of DVs.
fn solve_branch(problem: &JointProblem, dv: &DvSetup, budget: f64, n_dv: usize) -> Result<DscSolution> {
    let base = &problem.taxi_bus;
    let (ng, nt) = (base.n_grids(), base.n_windows());
    let tb_budget = (budget - base.costs.dv * n_dv as f64).max(0.0);
    let tb = base.with_budget(tb_budget)?.with_background(CoverageField::zeros(ng, nt))?;
    let starts = start_nodes(dv, base, n_dv);
    if starts.len() < n_dv {
        return Err(DscError::Routing { leg: 0, reason: "road network has no routable start node".into() });
    }
    let mut options = problem.options.solver.clone();
    let mut sol = solve(&tb, FleetMode::TaxiBus, &options)?;
    let mut converged = sol.converged;
    let mut best: Option<(TaxiBusSolution, Vec<DvRoute>, CoverageField, Evaluated)> = None;
    let mut trace = Vec::new();
    for k in 0..problem.options.max_iter.max(1) {
        if k > 0 {
            // taxi-bus given the accepted DV coverage, warm-started from the accepted allocation
            let (prev, _, dv_field, _) = best.as_ref().unwrap();
            options.warm_start = Some((prev.n_taxi, prev.y.clone()));
            let with_bg = tb.clone().with_background(dv_field.clone())?;
            sol = solve(&with_bg, FleetMode::TaxiBus, &options)?;
            converged &= sol.converged;
        }
        let taxi_field = taxi_coverage(&tb.taxi, sol.n_taxi_int as f64)?;
        let y: Vec<f64> = sol.y_int.iter().map(|&v| v as f64).collect();
        let tb_field = taxi_field.plus(&bus_coverage(&tb.lines, &tb.incidence, &y, nt)?)?;
        let ctx =
            RoutingContext { weights: &tb.weights, params: &tb.params, base: &tb_field, op_windows: &dv.op_windows };
        let fleet = route_fleet(&dv.network, &dv.map, &ctx, &starts, dv.trip_hours, &dv.router)?;
        let dv_field = extend_round_trips(&fleet.routes, ng, nt, &dv.op_windows)?.field;
        let ev = evaluate(&tb, &sol, &dv_field)?;
        let improved = best.as_ref().is_none_or(|b| ev.phi > b.3.phi);
        if !improved {
            break;
        }
        trace.push(ev.phi);
        best = Some((sol.clone(), fleet.routes, dv_field, ev));
    }
    let (sol, routes, dv_field, ev) = best.expect("at least one alternation runs");
    Ok(DscSolution {
        combo: FleetCombination::TaxiBusDv,
        budget,
        n_taxi: sol.n_taxi_int,
        y: sol.y_int.clone(),
        n_dv,
        dv_routes: routes,
        phi: ev.phi,
        kl: ev.kl,
        taxi_field: ev.taxi_field,
        bus_field: ev.bus_field,
        dv_field,
        spent: sol.rounded_cost(&tb.costs) + base.costs.dv * n_dv as f64,
        trace,
        branches: Vec::new(),
        cap_breached: false,
        converged,
        relaxed_phi: sol.objective_relaxed,
    })
}

/// Full three-fleet solve: every affordable DV count up to the cap, best by utility
/// (fewest DVs on ties).
pub fn solve_dsc(problem: &JointProblem, budget: f64) -> Result<DscSolution> {
    check_budget(budget)?;
    let Some(dv) = &problem.dv else {
        let sol = taxi_bus_only(problem, budget, FleetCombination::TaxiBusDv, FleetMode::TaxiBus)?;
        sol.check(problem)?;
        return Ok(sol);
    };
    let costs = problem.taxi_bus.costs;
    let affordable = (budget / costs.dv + 1e-9).floor() as usize;
    let n_max = affordable.min(problem.options.dv_cap);
    let cap_breached = affordable > problem.options.dv_cap;
    if cap_breached {
        log::warn!("{affordable} DVs are affordable; only up to {} are examined", problem.options.dv_cap);
    }
    let branches: Vec<DscSolution> = (0..=n_max)
        .into_par_iter()
        .map(|n_dv| {
            if n_dv == 0 {
                taxi_bus_only(problem, budget, FleetCombination::TaxiBusDv, FleetMode::TaxiBus)
            } else {
                solve_branch(problem, dv, budget, n_dv)
            }
        })
        .collect::<Result<_>>()?;
    let summary: Vec<(usize, f64)> = branches.iter().map(|b| (b.n_dv, b.phi)).collect();
    for (n_dv, phi) in &summary {
        log::debug!("budget {budget}: {n_dv} DVs -> utility {phi}");
    }
    let mut best = branches
        .into_iter()
        .reduce(|a, b| if b.phi > a.phi { b } else { a })
        .expect("the zero-DV branch always exists");
    best.branches = summary;
    best.cap_breached = cap_breached;
    best.check(problem)?;
    Ok(best)
}

/// Solves one named fleet combination at the given budget.
pub fn solve_fleet_combination(problem: &JointProblem, combo: FleetCombination, budget: f64) -> Result<DscSolution> {
    check_budget(budget)?;
    let sol = match combo {
        FleetCombination::Taxi => taxi_bus_only(problem, budget, combo, FleetMode::TaxiOnly)?,
        FleetCombination::Bus => taxi_bus_only(problem, budget, combo, FleetMode::BusOnly)?,
        FleetCombination::TaxiBus => taxi_bus_only(problem, budget, combo, FleetMode::TaxiBus)?,
        FleetCombination::TaxiBusDv => solve_dsc(problem, budget)?,
    };
    sol.check(problem)?;
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub combo: FleetCombination,
    pub budget: f64,
    pub phi: f64,
    pub kl: Option<f64>,
    pub n_taxi: u64,
    pub bus_sensors: u64,
    pub n_dv: usize,
    pub spent: f64,
    /// The solution of a smaller budget was better and was kept.
    pub carried: bool,
}

/// Least-squares fit `phi = a M^beta + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub combo: FleetCombination,
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<PowerFit>,
}

impl SweepTable {
    pub fn curve(&self, combo: FleetCombination) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.combo == combo).collect()
    }
}

/// Ordinary least squares `y = a x + b`, with the coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a * u - b).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Some((a, b, r2))
}

/// Utility per combination over ascending budgets.
///
/// A larger budget can always afford the allocation of a smaller one, so when
/// the fresh solve scores lower the smaller budget's allocation is reported
/// instead (flagged `carried`) and every curve is non-decreasing.
pub fn budget_sweep(problem: &JointProblem, combos: &[FleetCombination], budgets: &[f64]) -> Result<SweepTable> {
    if budgets.windows(2).any(|w| w[1] < w[0]) {
        return Err(DscError::Domain("sweep budgets must be sorted ascending".into()));
    }
    let beta = problem.taxi_bus.params.beta;
    let per_combo: Vec<Vec<SweepRow>> = combos
        .par_iter()
        .map(|&combo| {
            let mut rows: Vec<SweepRow> = Vec::with_capacity(budgets.len());
            for &budget in budgets {
                let sol = solve_fleet_combination(problem, combo, budget)?;
                log::info!("{combo} at budget {budget}: utility {}", sol.phi);
                let fresh = SweepRow {
                    combo,
                    budget,
                    phi: sol.phi,
                    kl: sol.kl,
                    n_taxi: sol.n_taxi,
                    bus_sensors: sol.bus_sensors(),
                    n_dv: sol.n_dv,
                    spent: sol.spent,
                    carried: false,
                };
                let row = match rows.last() {
                    Some(prev) if prev.phi > fresh.phi => SweepRow { budget, carried: true, ..prev.clone() },
                    _ => fresh,
                };
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = SweepTable::default();
    for (combo, rows) in combos.iter().zip(per_combo) {
        let x: Vec<f64> = rows.iter().map(|r| r.budget.powf(beta)).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.phi).collect();
        if let Some((a, b, r2)) = linear_fit(&x, &y) {
            table.fits.push(PowerFit { combo: *combo, a, b, r2 });
        }
        table.rows.extend(rows);
    }
    Ok(table)
}

/// Smallest budget reaching `target` utility for `combo`, by bisection between
/// the sweep points that bracket it. `None` if the sweep never reaches it.
pub fn inverse_budget(
    problem: &JointProblem,
    combo: FleetCombination,
    sweep: &SweepTable,
    target: f64,
    budget_tol: f64,
) -> Result<Option<f64>> {
    let curve = sweep.curve(combo);
    let Some(i) = curve.iter().position(|r| r.phi >= target) else {
        return Ok(None);
    };
    if i == 0 {
        return Ok(Some(curve[0].budget));
    }
    let (mut lo, mut hi) = (curve[i - 1].budget, curve[i].budget);
    while hi - lo > budget_tol.max(1e-12 * hi) {
        let mid = 0.5 * (lo + hi);
        if solve_fleet_combination(problem, combo, mid)?.phi >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::BusLine;
    use crate::grid::{GridIndex, GridSpec};
    use crate::model::{CostStructure, SensingWeights, UtilityParams};
    use crate::router::lattice_network;
    use crate::taxi::TaxiModel;

    fn small_problem(with_dv: bool, p_scale: f64, lines: bool) -> JointProblem {
        let grid = GridSpec::planar(4, 4, 1.0);
        let nt = 2;
        let spatial: Vec<f64> = (0..16).map(|g| 1.0 + (g % 5) as f64).collect();
        let weights = SensingWeights::new(spatial, vec![0.5, 0.5]).unwrap();
        let p: Vec<f64> = (0..32).map(|i| p_scale * (0.05 + 0.02 * (i % 7) as f64)).collect();
        let taxi = TaxiModel::new(16, nt, p, 50).unwrap();
        let mk = |id: &str, grids: &[usize]| BusLine {
            id: id.into(),
            route_grids: grids.iter().map(|&g| GridIndex(g)).collect(),
            fleet_size: 6,
            service_time: vec![0.8; nt],
            turnaround_time: vec![0.2; nt],
            in_service: vec![4.0; nt],
            synthetic: vec![false; nt],
        };
        let bus_lines = if lines { vec![mk("a", &[0, 1, 2, 3]), mk("b", &[3, 7, 11, 15])] } else { vec![] };
        let costs = CostStructure { taxi: 1.0, bus: 1.5, dv: 6.0, budget: 0.0 };
        let tb = TaxiBusProblem::new(taxi, bus_lines, weights, UtilityParams::new(0.5).unwrap(), costs, 0.0).unwrap();
        let dv = with_dv.then(|| {
            let network = lattice_network(&grid, 30.0).unwrap();
            let map = GridMap::new(&grid, &network);
            DvSetup {
                network,
                map,
                op_windows: vec![0, 1],
                trip_hours: 0.2,
                starts: vec![],
                router: RouterOptions::default(),
            }
        });
        JointProblem { taxi_bus: tb, dv, options: JointOptions { dv_cap: 2, ..Default::default() } }
    }

    #[test]
    fn combination_names_round_trip() {
        for c in FleetCombination::ALL {
            assert_eq!(c.name().parse::<FleetCombination>().unwrap(), c);
        }
        assert!("car".parse::<FleetCombination>().is_err());
    }

    #[test]
    fn small_budget_excludes_dvs() {
        let problem = small_problem(true, 1.0, true);
        let joint = solve_dsc(&problem, 5.0).unwrap();
        let tb = solve_fleet_combination(&problem, FleetCombination::TaxiBus, 5.0).unwrap();
        assert_eq!(joint.n_dv, 0);
        assert_eq!(joint.branches.len(), 1);
        assert_eq!((joint.n_taxi, &joint.y), (tb.n_taxi, &tb.y));
        assert_eq!(joint.phi, tb.phi);
    }

    #[test]
    fn without_taxis_or_buses_budget_goes_to_dvs() {
        let problem = small_problem(true, 0.0, false);
        let joint = solve_dsc(&problem, 12.0).unwrap();
        assert_eq!(joint.n_taxi, 0);
        assert_eq!(joint.n_dv, 2);
        assert!(joint.phi > 0.0);
        let best_branch = joint.branches.iter().map(|b| b.1).fold(0.0, f64::max);
        assert_eq!(joint.phi, best_branch);
    }

    #[test]
    fn nested_combinations_dominate() {
        let problem = small_problem(true, 1.0, true);
        for budget in [8.0, 13.0] {
            let phi = |c| solve_fleet_combination(&problem, c, budget).unwrap().phi;
            let (t, b, tb, all) = (
                phi(FleetCombination::Taxi),
                phi(FleetCombination::Bus),
                phi(FleetCombination::TaxiBus),
                phi(FleetCombination::TaxiBusDv),
            );
            assert!(tb >= t.max(b) - 1e-9, "{tb} vs {t}, {b}");
            assert!(all >= tb - 1e-9);
        }
    }

    #[test]
    fn inner_trace_strictly_increases() {
        let problem = small_problem(true, 1.0, true);
        let sol = solve_dsc(&problem, 14.0).unwrap();
        assert!(sol.trace.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*sol.trace.last().unwrap(), sol.phi);
        sol.check(&problem).unwrap();
        // determinism
        assert_eq!(solve_dsc(&problem, 14.0).unwrap(), sol);
    }

    #[test]
    fn zero_budget_sweep_is_flagged_undefined() {
        let problem = small_problem(true, 1.0, true);
        let table = budget_sweep(&problem, &FleetCombination::ALL, &[0.0]).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.rows.iter().all(|r| r.phi == 0.0 && r.kl.is_none()));
        assert!(table.fits.is_empty());
    }

    #[test]
    fn sweep_is_monotone_and_inverse_is_bracketed() {
        let problem = small_problem(false, 1.0, true);
        let budgets: Vec<f64> = (1..=6).map(|k| 3.0 * k as f64).collect();
        let combos = [FleetCombination::Taxi, FleetCombination::TaxiBus];
        let table = budget_sweep(&problem, &combos, &budgets).unwrap();
        for c in combos {
            let curve = table.curve(c);
            assert!(curve.windows(2).all(|w| w[1].phi >= w[0].phi));
        }
        let curve = table.curve(FleetCombination::TaxiBus);
        let target = 0.5 * (curve[2].phi + curve[3].phi);
        let m = inverse_budget(&problem, FleetCombination::TaxiBus, &table, target, 1e-3).unwrap().unwrap();
        assert!(m > curve[2].budget && m <= curve[3].budget);
        assert!(solve_fleet_combination(&problem, FleetCombination::TaxiBus, m).unwrap().phi >= target);
        assert_eq!(inverse_budget(&problem, FleetCombination::TaxiBus, &table, 1e9, 1e-3).unwrap(), None);
    }

    #[test]
    fn perfect_line_has_unit_r2() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let (a, b, r2) = linear_fit(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}

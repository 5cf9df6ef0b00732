//! Dedicated-vehicle routing: destination search, time-budgeted single-vehicle
//! routes, sequential fleet routing with adjustment, and round-trip coverage.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{GridMap, RoadNetwork};
use super::paths::{execute_g_route, grid_astar, ExecutedRoute, GRoute, NRoute};
use crate::error::{DscError, Result};
use crate::grid::GridIndex;
use crate::model::{CoverageField, SensingWeights, UtilityParams};

/// How the numerator of the utility efficiency is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiForm {
    /// `sum eta_g`; the spatial weight is already inside `eta_g`.
    #[default]
    Single,
    /// `sum w_g eta_g`, weighting the spatial weight twice.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterOptions {
    pub radius_km: f64,
    /// How many times an empty or worthless search doubles the radius.
    pub widenings: usize,
    pub psi_form: PsiForm,
    /// Added to `eta` before inverting into an impedance.
    pub impedance_floor: f64,
    /// Adjustment passes over the fleet.
    pub adjust_iters: usize,
}

impl Default for RouterOptions {
    fn default() -> Self {
        RouterOptions {
            radius_km: 5.0,
            widenings: 2,
            psi_form: PsiForm::Single,
            impedance_floor: 1e-6,
            adjust_iters: 3,
        }
    }
}

/// Marginal utility of one more coverage per grid, aggregated over the DV
/// operating windows, with the current vehicle's visited grids zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalUtilityField {
    eta: Vec<f64>,
    spatial: Vec<f64>,
    visited: Vec<bool>,
}

impl MarginalUtilityField {
    /// `eta_g = sum_{t in ops} pi_{g,t} (xi(N_{g,t} + 1) - xi(N_{g,t}))`.
    pub fn from_coverage(
        weights: &SensingWeights,
        params: &UtilityParams,
        coverage: &CoverageField,
        op_windows: &[usize],
    ) -> Self {
        let ng = weights.n_grids();
        let beta = params.beta;
        let eta = (0..ng)
            .map(|g| {
                op_windows
                    .iter()
                    .map(|&t| {
                        let n = coverage.get(g, t);
                        weights.cell(g, t) * ((n + 1.0).powf(beta) - n.powf(beta))
                    })
                    .sum()
            })
            .collect();
        MarginalUtilityField { eta, spatial: weights.spatial().to_vec(), visited: vec![false; ng] }
    }

    /// A field with hand-set values, for constructed instances.
    pub fn from_values(eta: Vec<f64>, spatial: Vec<f64>) -> Result<Self> {
        if eta.len() != spatial.len() {
            return Err(DscError::DimensionMismatch {
                what: "marginal utility",
                expected: spatial.len(),
                got: eta.len(),
            });
        }
        if eta.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(DscError::Domain("marginal utilities must be finite and nonnegative".into()));
        }
        let n = eta.len();
        Ok(MarginalUtilityField { eta, spatial, visited: vec![false; n] })
    }

    pub fn n_grids(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self, g: GridIndex) -> f64 {
        if self.visited[g.0] {
            0.0
        } else {
            self.eta[g.0]
        }
    }

    pub fn is_visited(&self, g: GridIndex) -> bool {
        self.visited[g.0]
    }

    /// Marks `g` covered by this vehicle and returns the utility gained.
    pub fn visit(&mut self, g: GridIndex) -> f64 {
        let gain = self.eta(g);
        self.visited[g.0] = true;
        gain
    }

    fn score(&self, g: GridIndex, form: PsiForm) -> f64 {
        match form {
            PsiForm::Single => self.eta(g),
            PsiForm::Literal => self.spatial[g.0] * self.eta(g),
        }
    }

    fn impedances(&self, floor: f64) -> Vec<f64> {
        (0..self.eta.len()).map(|g| 1.0 / (self.eta(GridIndex(g)) + floor)).collect()
    }
}

/// One destination leg produced by the local search.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub dest: GridIndex,
    pub planned: GRoute,
    pub executed: ExecutedRoute,
    /// Utility efficiency: efficiency numerator over travel time.
    pub psi: f64,
    /// Unweighted utility the leg would collect.
    pub gain: f64,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_candidate(
    network: &RoadNetwork,
    map: &GridMap,
    field: &MarginalUtilityField,
    impedance: &[f64],
    origin: usize,
    origin_grid: GridIndex,
    dest: GridIndex,
    form: PsiForm,
) -> Option<Leg> {
    let planned = grid_astar(&map.graph, origin_grid, dest, impedance).ok()?;
    let executed = execute_g_route(network, map, &planned, origin).ok()?;
    if !(executed.nroute.time_h > 0.0) {
        return None;
    }
    let grids = executed.actual.unique_grids();
    let numerator: f64 = grids.iter().map(|&g| field.score(g, form)).sum();
    let gain: f64 = grids.iter().map(|&g| field.eta(g)).sum();
    Some(Leg { dest, psi: numerator / executed.nroute.time_h, gain, planned, executed })
}

/// Best destination grid within `radius_km` of the origin grid by utility efficiency.
///
/// Candidates are scored in parallel; the highest efficiency wins and equal
/// efficiencies go to the lowest grid id.
pub fn local_destination_search(
    network: &RoadNetwork,
    map: &GridMap,
    field: &MarginalUtilityField,
    origin: usize,
    radius_km: f64,
    options: &RouterOptions,
) -> Result<Leg> {
    if !(radius_km > 0.0) {
        return Err(DscError::Domain(format!("search radius must be positive, got {radius_km}")));
    }
    let origin_grid = map
        .grid_of(origin)
        .ok_or_else(|| DscError::Routing { leg: 0, reason: format!("origin node {origin} is not routable") })?;
    let grid = map.grid();
    let candidates: Vec<GridIndex> = map
        .graph
        .covered_grids()
        .into_iter()
        .filter(|&g| g != origin_grid && grid.centroid_distance_km(g, origin_grid) <= radius_km + 1e-12)
        .collect();
    let impedance = field.impedances(options.impedance_floor);
    let legs: Vec<Leg> = candidates
        .par_iter()
        .filter_map(|&dest| {
            evaluate_candidate(network, map, field, &impedance, origin, origin_grid, dest, options.psi_form)
        })
        .collect();
    let mut best: Option<Leg> = None;
    for leg in legs {
        if best.as_ref().is_none_or(|b| leg.psi > b.psi) {
            best = Some(leg);
        }
    }
    best.ok_or(DscError::EmptySearch { radius_km })
}

/// A single vehicle's route over one operating window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvRoute {
    pub start: usize,
    pub nroute: NRoute,
    /// Grids the route traverses.
    pub groute: GRoute,
    pub collected: f64,
    pub legs: usize,
    pub truncated: bool,
    /// The search found no reachable candidate even after widening.
    pub starved: bool,
}

impl DvRoute {
    pub fn grids(&self) -> Vec<GridIndex> {
        self.groute.unique_grids()
    }
}

/// Routes one vehicle for `duration_h` hours from `start`, marking the grids
/// it covers in `field`.
pub fn route_single_dv(
    network: &RoadNetwork,
    map: &GridMap,
    field: &mut MarginalUtilityField,
    start: usize,
    duration_h: f64,
    options: &RouterOptions,
) -> Result<DvRoute> {
    if !(duration_h > 0.0) {
        return Err(DscError::Domain(format!("routing window must be positive, got {duration_h} h")));
    }
    let origin_grid = map
        .grid_of(start)
        .ok_or_else(|| DscError::Routing { leg: 0, reason: format!("start node {start} is not routable") })?;
    let mut collected = field.visit(origin_grid);
    let mut nroute = NRoute::single(start);
    let mut cur = start;
    let mut legs = 0;
    let mut truncated = false;
    let mut starved = false;
    while nroute.time_h < duration_h {
        let mut radius = options.radius_km;
        let mut found = None;
        let mut saw_candidate = false;
        for _ in 0..=options.widenings {
            match local_destination_search(network, map, field, cur, radius, options) {
                Ok(leg) if leg.psi > 0.0 => {
                    found = Some(leg);
                    break;
                }
                Ok(_) => saw_candidate = true,
                Err(DscError::EmptySearch { .. }) => {}
                Err(e) => return Err(e),
            }
            radius *= 2.0;
        }
        let Some(leg) = found else {
            // nothing worth collecting nearby: the route stays as is
            starved = !saw_candidate;
            break;
        };
        legs += 1;
        let path = &leg.executed.nroute;
        if nroute.time_h + path.time_h >= duration_h {
            let arrivals = path.arrival_times(network)?;
            let remaining = duration_h - nroute.time_h;
            let cut = (0..arrivals.len())
                .min_by(|&a, &b| (arrivals[a] - remaining).abs().total_cmp(&(arrivals[b] - remaining).abs()))
                .unwrap_or(0);
            let partial = NRoute { nodes: path.nodes[..=cut].to_vec(), time_h: arrivals[cut] };
            for &v in &partial.nodes {
                if let Some(g) = map.grid_of(v) {
                    collected += field.visit(g);
                }
            }
            nroute.extend(&partial);
            truncated = true;
            break;
        }
        for g in leg.executed.actual.unique_grids() {
            collected += field.visit(g);
        }
        nroute.extend(path);
        cur = leg.executed.end;
    }
    let groute = nroute.grid_route(map);
    Ok(DvRoute { start, nroute, groute, collected, legs, truncated, starved })
}

/// Uniform random walk of (about) `duration_h` hours, for baseline comparison.
/// Returns the route and the utility it would collect.
pub fn random_walk<R: Rng>(
    network: &RoadNetwork,
    map: &GridMap,
    field: &MarginalUtilityField,
    start: usize,
    duration_h: f64,
    rng: &mut R,
) -> (NRoute, f64) {
    let mut route = NRoute::single(start);
    let mut cur = start;
    while let Some(&(next, dt)) = network.out_edges(cur).choose(rng) {
        if route.time_h + dt >= duration_h {
            // same nearest-arrival cut as the planner
            if (route.time_h + dt - duration_h).abs() < (duration_h - route.time_h).abs() {
                route.nodes.push(next);
                route.time_h += dt;
            }
            break;
        }
        route.nodes.push(next);
        route.time_h += dt;
        cur = next;
    }
    let utility = route.grid_route(map).unique_grids().iter().map(|&g| field.eta(g)).sum();
    (route, utility)
}

/// Coverage context for DV routing: what taxis and buses already provide.
#[derive(Debug, Clone, Copy)]
pub struct RoutingContext<'a> {
    pub weights: &'a SensingWeights,
    pub params: &'a UtilityParams,
    pub base: &'a CoverageField,
    pub op_windows: &'a [usize],
}

impl RoutingContext<'_> {
    /// Marginal field on top of `base` plus `counts[g]` DVs in every operating window.
    pub fn field_with(&self, counts: &[u32]) -> MarginalUtilityField {
        let beta = self.params.beta;
        let ng = self.weights.n_grids();
        let eta = (0..ng)
            .map(|g| {
                let c = counts[g] as f64;
                self.op_windows
                    .iter()
                    .map(|&t| {
                        let n = self.base.get(g, t) + c;
                        self.weights.cell(g, t) * ((n + 1.0).powf(beta) - n.powf(beta))
                    })
                    .sum()
            })
            .collect();
        MarginalUtilityField { eta, spatial: self.weights.spatial().to_vec(), visited: vec![false; ng] }
    }

    /// Utility added by `counts[g]` DVs per grid in every operating window.
    pub fn gain_of(&self, counts: &[u32]) -> f64 {
        let beta = self.params.beta;
        let mut total = 0.0;
        for (g, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &t in self.op_windows {
                let n = self.base.get(g, t);
                total += self.weights.cell(g, t) * ((n + c as f64).powf(beta) - n.powf(beta));
            }
        }
        total
    }
}

fn grid_counts(routes: &[DvRoute], n_grids: usize, skip: Option<usize>) -> Vec<u32> {
    let mut counts = vec![0u32; n_grids];
    for (k, r) in routes.iter().enumerate() {
        if Some(k) != skip {
            for g in r.grids() {
                counts[g.0] += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetRoutes {
    pub routes: Vec<DvRoute>,
    /// Utility the fleet adds over the base coverage.
    pub total: f64,
    /// Total after sequential routing, then after each adjustment pass.
    pub trace: Vec<f64>,
    pub accepted_adjustments: usize,
}

/// Routes vehicles one after another on a shared context, then repeatedly
/// re-routes each vehicle against the others' coverage, keeping a new route
/// only if the fleet total strictly improves.
pub fn route_fleet(
    network: &RoadNetwork,
    map: &GridMap,
    ctx: &RoutingContext,
    starts: &[usize],
    duration_h: f64,
    options: &RouterOptions,
) -> Result<FleetRoutes> {
    let ng = ctx.weights.n_grids();
    let mut routes: Vec<DvRoute> = Vec::with_capacity(starts.len());
    for &s in starts {
        let mut field = ctx.field_with(&grid_counts(&routes, ng, None));
        routes.push(route_single_dv(network, map, &mut field, s, duration_h, options)?);
    }
    let mut total = ctx.gain_of(&grid_counts(&routes, ng, None));
    let mut trace = vec![total];
    let mut accepted_adjustments = 0;
    if starts.len() > 1 {
        for _ in 0..options.adjust_iters {
            let mut accepted = false;
            for k in 0..routes.len() {
                let mut field = ctx.field_with(&grid_counts(&routes, ng, Some(k)));
                let candidate = route_single_dv(network, map, &mut field, starts[k], duration_h, options)?;
                let previous = std::mem::replace(&mut routes[k], candidate);
                let new_total = ctx.gain_of(&grid_counts(&routes, ng, None));
                if new_total > total + 1e-12 * (1.0 + total.abs()) {
                    total = new_total;
                    accepted = true;
                    accepted_adjustments += 1;
                } else {
                    routes[k] = previous;
                }
            }
            trace.push(total);
            if !accepted {
                break;
            }
        }
    }
    Ok(FleetRoutes { routes, total, trace, accepted_adjustments })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Repeated one-way trips over the operating windows and the coverage they give.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrips {
    pub field: CoverageField,
    /// Per vehicle, per operating window: the direction driven.
    pub schedule: Vec<Vec<(usize, Direction)>>,
}

/// Turns each route into a shuttle: forward in the first, third, .. operating
/// window and reversed in between (roads are assumed two-way). Each vehicle
/// covers each grid on its route once per operating window.
pub fn extend_round_trips(
    routes: &[DvRoute],
    n_grids: usize,
    n_windows: usize,
    op_windows: &[usize],
) -> Result<RoundTrips> {
    if let Some(t) = op_windows.iter().find(|&&t| t >= n_windows) {
        return Err(DscError::Domain(format!("operating window {t} out of range")));
    }
    let mut field = CoverageField::zeros(n_grids, n_windows);
    let mut schedule = Vec::with_capacity(routes.len());
    for r in routes {
        for g in r.grids() {
            for &t in op_windows {
                field.add_at(g.0, t, 1.0);
            }
        }
        schedule.push(
            op_windows
                .iter()
                .enumerate()
                .map(|(i, &t)| (t, if i % 2 == 0 { Direction::Forward } else { Direction::Reverse }))
                .collect(),
        );
    }
    Ok(RoundTrips { field, schedule })
}

/// Nodes nearest the centroids of the `n` highest-weight road-covered grids
/// (cycling if there are fewer such grids than vehicles).
pub fn default_start_nodes(network: &RoadNetwork, map: &GridMap, weights: &SensingWeights, n: usize) -> Vec<usize> {
    let mut grids = map.graph.covered_grids();
    grids.sort_by(|a, b| weights.spatial()[b.0].total_cmp(&weights.spatial()[a.0]).then(a.cmp(b)));
    if grids.is_empty() {
        return Vec::new();
    }
    (0..n).filter_map(|k| map.central_node(grids[k % grids.len()], network)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::stwsu;
    use crate::router::network::lattice_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lattice(n: usize) -> (GridSpec, RoadNetwork, GridMap) {
        let grid = GridSpec::planar(n, n, 1.0);
        let net = lattice_network(&grid, 30.0).unwrap();
        let map = GridMap::new(&grid, &net);
        (grid, net, map)
    }

    #[test]
    fn single_candidate_is_selected() {
        let (_, net, map) = lattice(2);
        let field = MarginalUtilityField::from_values(vec![0.0, 1.0, 0.0, 0.0], vec![0.25; 4]).unwrap();
        let leg = local_destination_search(&net, &map, &field, 0, 1.0, &RouterOptions::default()).unwrap();
        assert_eq!(leg.dest, GridIndex(1));
        assert!((leg.psi - 30.0).abs() < 1e-9);
        assert!(matches!(
            local_destination_search(&net, &map, &field, 0, 0.5, &RouterOptions::default()),
            Err(DscError::EmptySearch { .. })
        ));
    }

    #[test]
    fn higher_utility_wins_at_equal_time() {
        let (_, net, map) = lattice(3);
        // from the centre, grids 1 and 3 are both one edge away
        let mut eta = vec![0.0; 9];
        eta[1] = 1.0;
        eta[3] = 2.0;
        let field = MarginalUtilityField::from_values(eta, vec![1.0 / 9.0; 9]).unwrap();
        let leg = local_destination_search(&net, &map, &field, 4, 1.0, &RouterOptions::default()).unwrap();
        assert_eq!(leg.dest, GridIndex(3));
    }

    #[test]
    fn search_matches_exhaustive_candidate_scan() {
        let (grid, net, map) = lattice(5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let eta: Vec<f64> = (0..25).map(|_| rng.gen_range(0.0..1.0)).collect();
            let field = MarginalUtilityField::from_values(eta, vec![0.04; 25]).unwrap();
            let origin = rng.gen_range(0..25);
            let opts = RouterOptions::default();
            let leg = local_destination_search(&net, &map, &field, origin, 2.5, &opts).unwrap();
            let imp = field.impedances(opts.impedance_floor);
            let og = map.grid_of(origin).unwrap();
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for g in 0..25 {
                let g = GridIndex(g);
                if g == og || grid.centroid_distance_km(g, og) > 2.5 {
                    continue;
                }
                let planned = grid_astar(&map.graph, og, g, &imp).unwrap();
                let ex = execute_g_route(&net, &map, &planned, origin).unwrap();
                let s: f64 = ex.actual.unique_grids().iter().map(|&h| field.eta(h)).sum();
                let psi = s / ex.nroute.time_h;
                if psi > best.0 {
                    best = (psi, g.0);
                }
            }
            assert_eq!(leg.dest.0, best.1);
            assert!((leg.psi - best.0).abs() < 1e-12);
        }
    }

    #[test]
    fn short_window_truncates_inside_first_leg() {
        let (_, net, map) = lattice(4);
        let mut eta = vec![0.0; 16];
        eta[15] = 5.0;
        let mut field = MarginalUtilityField::from_values(eta, vec![1.0 / 16.0; 16]).unwrap();
        // one edge takes 2 minutes; allow 5 minutes
        let r = route_single_dv(&net, &map, &mut field, 0, 5.0 / 60.0, &RouterOptions::default()).unwrap();
        assert!(r.truncated);
        assert!((r.nroute.time_h - 2.0 / 30.0).abs() < 1e-12 || (r.nroute.time_h - 3.0 / 30.0).abs() < 1e-12);
        assert!(r.nroute.time_h <= 5.0 / 60.0 + 1.0 / 30.0);
    }

    #[test]
    fn nothing_to_collect_keeps_route_minimal() {
        let (_, net, map) = lattice(4);
        let mut eta = vec![0.0; 16];
        eta[0] = 3.0;
        let mut field = MarginalUtilityField::from_values(eta, vec![1.0 / 16.0; 16]).unwrap();
        let r = route_single_dv(&net, &map, &mut field, 0, 1.0, &RouterOptions::default()).unwrap();
        assert_eq!(r.nroute.nodes, vec![0]);
        assert_eq!(r.collected, 3.0);
        assert!(!r.starved);
        assert!(field.is_visited(GridIndex(0)));
    }

    #[test]
    fn planned_route_beats_random_walks() {
        let (grid, net, map) = lattice(6);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spatial: Vec<f64> = (0..36).map(|_| rng.gen_range(0.1..1.0)).collect();
        let weights = SensingWeights::new(spatial, vec![1.0]).unwrap();
        let params = UtilityParams::new(0.5).unwrap();
        let base = CoverageField::zeros(36, 1);
        let field = MarginalUtilityField::from_coverage(&weights, &params, &base, &[0]);
        let start = map.central_node(grid.index(2, 2), &net).unwrap();
        let mut planned_field = field.clone();
        let planned = route_single_dv(&net, &map, &mut planned_field, start, 0.3, &RouterOptions::default()).unwrap();
        let walks: f64 = (0..100).map(|_| random_walk(&net, &map, &field, start, 0.3, &mut rng).1).sum::<f64>() / 100.0;
        assert!(planned.collected > walks, "{} vs {walks}", planned.collected);
        // the time budget holds up to one edge
        assert!(planned.nroute.time_h <= 0.3 + 1.0 / 30.0 + 1e-12);
        let arrivals = planned.nroute.arrival_times(&net).unwrap();
        assert!((arrivals.last().unwrap() - planned.nroute.time_h).abs() < 1e-9);
    }

    #[test]
    fn incremental_utility_matches_objective_difference() {
        let (_, net, map) = lattice(6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spatial: Vec<f64> = (0..36).map(|_| rng.gen_range(0.1..1.0)).collect();
        let weights = SensingWeights::new(spatial, vec![0.5, 0.3, 0.2]).unwrap();
        let params = UtilityParams::new(0.4).unwrap();
        let base = CoverageField::from_vec(36, 3, (0..108).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        let ops = [0usize, 1];
        let ctx = RoutingContext { weights: &weights, params: &params, base: &base, op_windows: &ops };
        let fleet = route_fleet(&net, &map, &ctx, &[0, 35], 0.4, &RouterOptions::default()).unwrap();
        let trips = extend_round_trips(&fleet.routes, 36, 3, &ops).unwrap();
        let with = stwsu(&base.plus(&trips.field).unwrap(), &weights, &params).unwrap();
        let without = stwsu(&base, &weights, &params).unwrap();
        assert!((with - without - fleet.total).abs() < 1e-9);
        assert!(fleet.trace.windows(2).all(|w| w[1] >= w[0]));
        // for a single vehicle the collected sum is the same difference
        let solo = route_fleet(&net, &map, &ctx, &[0], 0.4, &RouterOptions::default()).unwrap();
        assert!((solo.routes[0].collected - solo.total).abs() < 1e-9);
    }

    #[test]
    fn one_vehicle_fleet_equals_single_route() {
        let (_, net, map) = lattice(5);
        let weights = SensingWeights::uniform(25, 1);
        let params = UtilityParams::new(0.5).unwrap();
        let base = CoverageField::zeros(25, 1);
        let ctx = RoutingContext { weights: &weights, params: &params, base: &base, op_windows: &[0] };
        let fleet = route_fleet(&net, &map, &ctx, &[7], 0.5, &RouterOptions::default()).unwrap();
        let mut field = MarginalUtilityField::from_coverage(&weights, &params, &base, &[0]);
        let single = route_single_dv(&net, &map, &mut field, 7, 0.5, &RouterOptions::default()).unwrap();
        assert_eq!(fleet.routes, vec![single]);
    }

    #[test]
    fn disjoint_clusters_get_separate_vehicles() {
        let (grid, net, map) = lattice(8);
        let mut spatial = vec![0.001; 64];
        for (c, r) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            spatial[grid.index(c, r).0] = 1.0;
            spatial[grid.index(7 - c, 7 - r).0] = 1.0;
        }
        let weights = SensingWeights::new(spatial, vec![1.0]).unwrap();
        let params = UtilityParams::new(0.5).unwrap();
        let base = CoverageField::zeros(64, 1);
        let ctx = RoutingContext { weights: &weights, params: &params, base: &base, op_windows: &[0] };
        let starts = [grid.index(2, 2).0, grid.index(5, 5).0];
        let fleet = route_fleet(&net, &map, &ctx, &starts, 0.15, &RouterOptions::default()).unwrap();
        let cluster = |g: GridIndex| {
            let (c, r) = grid.col_row(g);
            if c <= 1 && r <= 1 {
                Some(0)
            } else if c >= 6 && r >= 6 {
                Some(1)
            } else {
                None
            }
        };
        let a: Vec<_> = fleet.routes[0].grids().into_iter().filter_map(cluster).collect();
        let b: Vec<_> = fleet.routes[1].grids().into_iter().filter_map(cluster).collect();
        assert!(!a.is_empty() && a.iter().all(|&c| c == 0), "{a:?}");
        assert!(!b.is_empty() && b.iter().all(|&c| c == 1), "{b:?}");
    }

    #[test]
    fn round_trip_coverage_examples() {
        let mk = |grids: &[usize]| DvRoute {
            start: 0,
            nroute: NRoute::single(0),
            groute: GRoute(grids.iter().map(|&g| GridIndex(g)).collect()),
            collected: 0.0,
            legs: 0,
            truncated: false,
            starved: false,
        };
        let ops: Vec<usize> = (8..20).collect();
        let trips = extend_round_trips(&[mk(&[0, 1, 2])], 4, 24, &ops).unwrap();
        for t in 0..24 {
            let expect = if (8..20).contains(&t) { 1.0 } else { 0.0 };
            for g in 0..3 {
                assert_eq!(trips.field.get(g, t), expect);
            }
            assert_eq!(trips.field.get(3, t), 0.0);
        }
        assert_eq!(trips.schedule[0][0], (8, Direction::Forward));
        assert_eq!(trips.schedule[0][1], (9, Direction::Reverse));
        assert!(extend_round_trips(&[], 4, 24, &ops).unwrap().field.is_zero());
        // revisiting a grid adds nothing; sharing a grid adds up
        let trips = extend_round_trips(&[mk(&[0, 1, 0]), mk(&[0, 3])], 4, 24, &ops).unwrap();
        assert_eq!(trips.field.get(0, 10), 2.0);
        assert_eq!(trips.field.get(1, 10), 1.0);
    }
}

//! Seeded synthetic scenarios with a known ground truth.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{
    dv_data, temporal_weights, write_geometry, BusConfig, CostsConfig, DvConfig, GridConfig, HorizonConfig,
    LineGeometry, ScenarioConfig, SensingScenario, SolverConfig, TaxiConfig, TemporalProfile, TransferConfig,
    UtilityConfig, WeightsConfig,
};
use crate::bus::{estimate_line_params, rasterize_polyline, write_bus_trips, BusLine, BusTrip};
use crate::error::{DscError, Result};
use crate::grid::{GridIndex, GridSpec, Horizon, TimeIndex};
use crate::model::{CostStructure, SensingWeights, UtilityParams};
use crate::router::{RoadEdge, RoadNetwork, RoadNode, DEFAULT_SPEED_KMH};
use crate::taxi::{TaxiModel, TaxiTraceSet, TaxiVisit};
use crate::textio::{fmt_num, CsvOut};

/// Parameters of a synthetic instance. Every product is a pure function of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub name: String,
    pub seed: u64,
    pub cols: usize,
    pub rows: usize,
    pub cell_size_km: f64,
    pub n_windows: usize,
    pub window_hours: f64,
    pub start_hour: f64,
    pub profile: TemporalProfile,
    /// Probability that a lattice road outside the random spanning tree is kept.
    pub road_density: f64,
    pub n_lines: usize,
    /// Vehicles per bus line.
    pub bus_fleet: u64,
    pub bus_speed_kmh: f64,
    pub turnaround_hours: f64,
    /// Taxi demand hotspots shaping the visit probabilities.
    pub hotspots: usize,
    pub hotspot_sigma_km: f64,
    /// Visit-probability range before the daily profile and noise. A taxi at urban
    /// speed is almost certain to cross its busiest 1 km cells every hour, so the
    /// default top end is close to one.
    pub p_min: f64,
    pub p_max: f64,
    /// Relative multiplicative noise on the probabilities.
    pub noise: f64,
    /// `w_max / w_min` of the spatial weights.
    pub weight_ratio: f64,
    pub vehicles: usize,
    pub days: usize,
    pub beta: f64,
    pub cost_taxi: f64,
    pub cost_bus: f64,
    pub cost_dv: f64,
    pub budget: f64,
    pub dv: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            name: "synthetic".into(),
            seed: 0,
            cols: 6,
            rows: 6,
            cell_size_km: 1.0,
            n_windows: 12,
            window_hours: 1.0,
            start_hour: 8.0,
            profile: TemporalProfile::Uniform,
            road_density: 0.5,
            n_lines: 3,
            bus_fleet: 4,
            bus_speed_kmh: 20.0,
            turnaround_hours: 0.1,
            hotspots: 2,
            hotspot_sigma_km: 1.5,
            p_min: 0.02,
            p_max: 0.9,
            noise: 0.1,
            weight_ratio: 2.35,
            vehicles: 200,
            days: 5,
            beta: 0.5,
            cost_taxi: 2.0e4,
            cost_bus: 1.5e4,
            cost_dv: 2.5e5,
            budget: 2.0e6,
            dv: true,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DscError::InvalidScenario(format!("synthetic spec: {m}")));
        if self.cols == 0 || self.rows == 0 || self.n_windows == 0 || self.vehicles == 0 || self.days == 0 {
            return bad("dimensions, vehicles and days must be positive");
        }
        if !(self.cell_size_km > 0.0 && self.window_hours > 0.0 && self.bus_speed_kmh > 0.0) {
            return bad("cell size, window length and bus speed must be positive");
        }
        if !(0.0..=1.0).contains(&self.road_density) || !(0.0..=1.0).contains(&self.noise) {
            return bad("road_density and noise must lie in [0,1]");
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return bad("need 0 <= p_min <= p_max <= 1");
        }
        if !(self.weight_ratio >= 1.0 && self.weight_ratio.is_finite()) {
            return bad("weight_ratio must be at least 1");
        }
        if !(self.hotspot_sigma_km > 0.0 && self.turnaround_hours >= 0.0) {
            return bad("hotspot_sigma_km must be positive and turnaround_hours nonnegative");
        }
        if self.n_lines > 0 && self.bus_fleet == 0 {
            return bad("bus_fleet must be positive when there are lines");
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::planar(self.cols, self.rows, self.cell_size_km)
    }

    pub fn horizon(&self) -> Horizon {
        Horizon::new(self.n_windows, self.window_hours, self.start_hour)
    }
}

/// Everything a synthetic instance consists of, before it is written to disk.
#[derive(Debug, Clone)]
pub struct SyntheticBundle {
    pub spec: SyntheticSpec,
    pub config: ScenarioConfig,
    pub truth: TaxiModel,
    pub traces: TaxiTraceSet,
    pub spatial: Vec<f64>,
    pub network: RoadNetwork,
    pub geometry: Vec<LineGeometry>,
    /// Lines with parameters estimated from `trips`.
    pub lines: Vec<BusLine>,
    pub trips: Vec<BusTrip>,
}

fn hotspot_field(spec: &SyntheticSpec, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = grid.n_grids();
    let centres: Vec<(f64, f64)> = (0..spec.hotspots.max(1))
        .map(|_| {
            (
                rng.gen_range(0.0..spec.cols as f64 * spec.cell_size_km),
                rng.gen_range(0.0..spec.rows as f64 * spec.cell_size_km),
            )
        })
        .collect();
    let s2 = 2.0 * spec.hotspot_sigma_km * spec.hotspot_sigma_km;
    (0..n)
        .map(|g| {
            let (x, y) = grid.centroid(GridIndex(g));
            centres.iter().map(|(cx, cy)| (-((x - cx).powi(2) + (y - cy).powi(2)) / s2).exp()).fold(0.0, f64::max)
        })
        .collect()
}

fn rescale_unit(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// One node per cell centroid; a random spanning tree of the 4-neighbour lattice
/// plus each remaining lattice road with probability `road_density`. Roads are two-way.
fn road_lattice(spec: &SyntheticSpec, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<RoadNetwork> {
    let n = grid.n_grids();
    let nodes = (0..n)
        .map(|g| {
            let (x, y) = grid.centroid(GridIndex(g));
            RoadNode { id: format!("n{g}"), x, y }
        })
        .collect();
    let mut pairs = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let g = grid.index(c, r).0;
            if c + 1 < spec.cols {
                pairs.push((g, grid.index(c + 1, r).0));
            }
            if r + 1 < spec.rows {
                pairs.push((g, grid.index(c, r + 1).0));
            }
        }
    }
    pairs.shuffle(rng);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut kept = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let keep = if ra != rb {
            parent[ra] = rb;
            true
        } else {
            rng.gen_bool(spec.road_density)
        };
        if keep {
            kept.push((a.min(b), a.max(b)));
        }
    }
    kept.sort_unstable();
    let edges = kept
        .into_iter()
        .flat_map(|(a, b)| {
            [(a, b), (b, a)].map(|(from, to)| RoadEdge { from, to, length_km: spec.cell_size_km, speed_kmh: None })
        })
        .collect();
    RoadNetwork::new(nodes, edges, DEFAULT_SPEED_KMH)
}

/// L-shaped polylines through cell centroids, at least two cells long.
fn bus_geometry(spec: &SyntheticSpec, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<LineGeometry> {
    if spec.cols * spec.rows < 2 {
        return Vec::new();
    }
    (0..spec.n_lines)
        .map(|i| {
            let (a, b) = loop {
                let a = (rng.gen_range(0..spec.cols), rng.gen_range(0..spec.rows));
                let b = (rng.gen_range(0..spec.cols), rng.gen_range(0..spec.rows));
                if a != b {
                    break (a, b);
                }
            };
            let corner = if rng.gen_bool(0.5) { (b.0, a.1) } else { (a.0, b.1) };
            let pts = [a, corner, b].iter().map(|&(c, r)| grid.centroid(grid.index(c, r))).collect::<Vec<_>>();
            let mut pts = pts;
            pts.dedup();
            (format!("L{:02}", i + 1), pts)
        })
        .collect()
}

/// Back-to-back trips for every vehicle over the whole horizon, starts staggered
/// evenly over one cycle.
fn bus_trips(spec: &SyntheticSpec, horizon: &Horizon, lines: &[(String, usize)]) -> Vec<BusTrip> {
    let end = horizon.start_hour + horizon.n_windows as f64 * horizon.window_hours;
    let mut trips = Vec::new();
    for (id, cells) in lines {
        let ts = *cells as f64 * spec.cell_size_km / spec.bus_speed_kmh;
        let period = ts + spec.turnaround_hours;
        for day in 0..spec.days as i64 {
            for v in 0..spec.bus_fleet {
                let mut t = horizon.start_hour + period * v as f64 / spec.bus_fleet as f64;
                while t + ts <= end + 1e-9 {
                    trips.push(BusTrip {
                        line: id.clone(),
                        vehicle: format!("{id}-{v}"),
                        day,
                        start_hour: t,
                        end_hour: t + ts,
                    });
                    t += period;
                }
            }
        }
    }
    trips
}

/// Ground-truth visit probabilities: hotspot shape, a smooth daily profile and noise.
fn truth_field(spec: &SyntheticSpec, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<TaxiModel> {
    let shape = rescale_unit(&hotspot_field(spec, grid, rng));
    let nt = spec.n_windows;
    let mut p = Vec::with_capacity(shape.len() * nt);
    for s in &shape {
        for t in 0..nt {
            let daily = 0.7 + 0.3 * (std::f64::consts::PI * (t as f64 + 0.5) / nt as f64).sin();
            let noise = 1.0 + spec.noise * rng.gen_range(-1.0..=1.0);
            let v = (spec.p_min + (spec.p_max - spec.p_min) * s) * daily * noise;
            p.push(v.clamp(0.0, 1.0));
        }
    }
    TaxiModel::new(grid.n_grids(), nt, p, spec.vehicles as u64)
}

/// Each vehicle visits each cell independently with its ground-truth probability.
pub fn sample_taxi_traces(truth: &TaxiModel, vehicles: usize, days: usize, seed: u64) -> Result<TaxiTraceSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ng, nt) = (truth.n_grids(), truth.n_windows());
    let mut records = Vec::new();
    for v in 0..vehicles {
        for day in 0..days as i64 {
            for t in 0..nt {
                let grids: BTreeSet<GridIndex> =
                    (0..ng).filter(|&g| rng.gen_bool(truth.p(g, t))).map(GridIndex).collect();
                if !grids.is_empty() {
                    records.push(TaxiVisit {
                        vehicle: format!("taxi{v:05}"),
                        day,
                        window: TimeIndex(t),
                        grids,
                        operator: None,
                    });
                }
            }
        }
    }
    TaxiTraceSet::new(ng, nt, records)
}

/// Builds a synthetic instance in memory.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticBundle> {
    spec.validate()?;
    let grid = spec.grid();
    let horizon = spec.horizon();
    // independent streams so that changing one product's size leaves the others unchanged
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k));
    let truth = truth_field(spec, &grid, &mut stream(1))?;
    let weight_shape = rescale_unit(&hotspot_field(spec, &grid, &mut stream(2)));
    let raw: Vec<f64> = weight_shape.iter().map(|h| 1.0 + (spec.weight_ratio - 1.0) * h).collect();
    let total: f64 = raw.iter().sum();
    let spatial: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let network = road_lattice(spec, &grid, &mut stream(3))?;
    let geometry = bus_geometry(spec, &grid, &mut stream(4));
    let cells: Vec<(String, usize)> =
        geometry.iter().map(|(id, pts)| (id.clone(), rasterize_polyline(&grid, pts).len())).collect();
    let trips = bus_trips(spec, &horizon, &cells);
    let ids: Vec<String> = cells.iter().map(|c| c.0.clone()).collect();
    let estimates = estimate_line_params(&trips, &ids, &horizon);
    let lines = geometry
        .iter()
        .zip(estimates.estimates)
        .map(|((id, pts), e)| BusLine {
            id: id.clone(),
            route_grids: rasterize_polyline(&grid, pts),
            fleet_size: spec.bus_fleet,
            service_time: e.service_time,
            turnaround_time: e.turnaround_time,
            in_service: e.in_service,
            synthetic: e.synthetic,
        })
        .collect();
    let traces = sample_taxi_traces(&truth, spec.vehicles, spec.days, spec.seed.wrapping_add(5))?;

    let has_lines = spec.n_lines > 0;
    let config = ScenarioConfig {
        name: spec.name.clone(),
        seed: spec.seed,
        grid: GridConfig {
            origin: (0.0, 0.0),
            cell_size_km: spec.cell_size_km,
            cols: spec.cols,
            rows: spec.rows,
            coords: Default::default(),
        },
        horizon: HorizonConfig {
            n_windows: spec.n_windows,
            window_hours: spec.window_hours,
            start_hour: spec.start_hour,
        },
        weights: WeightsConfig {
            spatial_file: Some("weights.csv".into()),
            profile: spec.profile,
            ..WeightsConfig::default()
        },
        utility: UtilityConfig { beta: Some(spec.beta), zeta: None },
        costs: CostsConfig { taxi: spec.cost_taxi, bus: spec.cost_bus, dv: spec.cost_dv, budget: spec.budget },
        taxi: TaxiConfig {
            traces: Some("taxi_traces.csv".into()),
            fleet_bound: Some(spec.vehicles as u64),
            ..TaxiConfig::default()
        },
        bus: BusConfig {
            lines: Some("bus_lines.csv".into()),
            geometry: Some("bus_geometry.csv".into()),
            trips: has_lines.then(|| "bus_trips.csv".into()),
            ..BusConfig::default()
        },
        dv: spec.dv.then(|| DvConfig {
            nodes: Some("road_nodes.csv".into()),
            edges: Some("road_edges.csv".into()),
            op_start_hour: spec.start_hour,
            op_end_hour: spec.start_hour + spec.n_windows as f64 * spec.window_hours,
            ..DvConfig::default()
        }),
        solver: SolverConfig::default(),
        transfer: TransferConfig::default(),
    };
    Ok(SyntheticBundle { spec: spec.clone(), config, truth, traces, spatial, network, geometry, lines, trips })
}

impl SyntheticBundle {
    /// The scenario built directly from the ground truth, without refitting the taxi traces.
    pub fn scenario(&self) -> Result<SensingScenario> {
        let grid = self.spec.grid();
        let horizon = self.spec.horizon();
        let temporal = temporal_weights(&self.config.weights, &horizon);
        let mut warnings = Vec::new();
        let dv = match &self.config.dv {
            Some(d) => Some(dv_data(d, self.network.clone(), &horizon, &mut warnings)?),
            None => None,
        };
        let c = &self.config.costs;
        Ok(SensingScenario {
            name: self.spec.name.clone(),
            seed: self.spec.seed,
            grid,
            horizon,
            weights: SensingWeights::new(
                self.spatial.clone(),
                temporal.iter().map(|t| t / temporal.iter().sum::<f64>()).collect(),
            )?,
            params: UtilityParams::new(self.spec.beta)?,
            costs: CostStructure { taxi: c.taxi, bus: c.bus, dv: c.dv, budget: c.budget },
            taxi: self.truth.clone(),
            lines: self.lines.clone(),
            dv,
            solver: self.config.solver.clone(),
            transfer: self.config.transfer.clone(),
            warnings,
        })
    }

    /// Writes the bundle into `dir` and returns the scenario file path. The
    /// ground-truth probabilities go to `taxi_p_truth.csv`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| DscError::io(dir, e))?;
        let mut out = CsvOut::create(&dir.join("weights.csv"), &["grid_id", "weight"])?;
        for (g, w) in self.spatial.iter().enumerate() {
            out.row([g.to_string(), fmt_num(*w)])?;
        }
        out.finish()?;
        self.traces.write(&dir.join("taxi_traces.csv"))?;
        self.truth.write(&dir.join("taxi_p_truth.csv"))?;
        let mut out = CsvOut::create(&dir.join("bus_lines.csv"), &["line_id", "fleet_size"])?;
        for l in &self.lines {
            out.row([l.id.clone(), l.fleet_size.to_string()])?;
        }
        out.finish()?;
        write_geometry(&dir.join("bus_geometry.csv"), &self.geometry)?;
        if !self.lines.is_empty() {
            write_bus_trips(&dir.join("bus_trips.csv"), &self.trips)?;
        }
        if self.config.dv.is_some() {
            self.network.write(&dir.join("road_nodes.csv"), &dir.join("road_edges.csv"))?;
        }
        let spec_path = dir.join("synthetic.toml");
        let spec_text = toml::to_string(&self.spec)
            .map_err(|e| DscError::InvalidScenario(format!("cannot serialize synthetic spec: {e}")))?;
        std::fs::write(&spec_path, spec_text).map_err(|e| DscError::io(&spec_path, e))?;
        let path = dir.join("scenario.toml");
        std::fs::write(&path, self.config.to_toml()?).map_err(|e| DscError::io(&path, e))?;
        Ok(path)
    }
}

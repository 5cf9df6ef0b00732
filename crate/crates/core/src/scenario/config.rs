//! Scenario configuration file and the validated in-memory scenario.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bus::{
    apply_line_params, estimate_line_params, rasterize_polyline, read_bus_trips, read_line_params, write_line_params,
    BusLine,
};
use crate::error::{DscError, Result};
use crate::grid::{CoordSystem, GridIndex, GridSpec, Horizon, TimeIndex};
use crate::joint::{DvSetup, JointOptions, JointProblem};
use crate::model::{
    calibrate_beta, ptd_to_weights, CostStructure, Distribution, SensingWeights, UtilityParams, NORMALIZATION_WARN_TOL,
};
use crate::router::{GridMap, PsiForm, RoadNetwork, RouterOptions, DEFAULT_SPEED_KMH};
use crate::solver::{SolverOptions, TaxiBusProblem};
use crate::taxi::{fit_p, read_taxi_traces, FitOptions, TaxiModel};
use crate::textio::{fmt_num, CsvOut, Table};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub origin: (f64, f64),
    #[serde(default = "GridConfig::default_cell")]
    pub cell_size_km: f64,
    pub cols: usize,
    pub rows: usize,
    #[serde(default)]
    pub coords: CoordSystem,
}

impl GridConfig {
    fn default_cell() -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(default = "HorizonConfig::default_windows")]
    pub n_windows: usize,
    #[serde(default = "HorizonConfig::default_hours")]
    pub window_hours: f64,
    #[serde(default = "HorizonConfig::default_start")]
    pub start_hour: f64,
}

impl HorizonConfig {
    fn default_windows() -> usize {
        12
    }
    fn default_hours() -> f64 {
        1.0
    }
    fn default_start() -> f64 {
        8.0
    }
}

impl Default for HorizonConfig {
    fn default() -> Self {
        HorizonConfig { n_windows: 12, window_hours: 1.0, start_hour: 8.0 }
    }
}

/// Built-in temporal weight profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalProfile {
    #[default]
    Uniform,
    /// Day windows (start hour in `[day_start, day_end)`) weigh `day_factor` times night windows.
    DayNight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    /// `grid_id,weight`; uniform when absent.
    pub spatial_file: Option<String>,
    /// Explicit temporal weights; overrides `profile`.
    pub temporal: Option<Vec<f64>>,
    #[serde(default)]
    pub profile: TemporalProfile,
    #[serde(default = "WeightsConfig::default_day_factor")]
    pub day_factor: f64,
    #[serde(default = "WeightsConfig::default_day_start")]
    pub day_start_hour: f64,
    #[serde(default = "WeightsConfig::default_day_end")]
    pub day_end_hour: f64,
    /// `grid_id,window,prob`: a prescribed target distribution, converted to joint weights.
    pub ptd_file: Option<String>,
    /// `grid_id,window,weight`: joint weights used as given.
    pub joint_file: Option<String>,
}

impl WeightsConfig {
    fn default_day_factor() -> f64 {
        4.0
    }
    fn default_day_start() -> f64 {
        8.0
    }
    fn default_day_end() -> f64 {
        20.0
    }
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            spatial_file: None,
            temporal: None,
            profile: TemporalProfile::Uniform,
            day_factor: 4.0,
            day_start_hour: 8.0,
            day_end_hour: 20.0,
            ptd_file: None,
            joint_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub beta: Option<f64>,
    /// Calibrate beta from this density-normalized weight ratio instead.
    pub zeta: Option<f64>,
}

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsConfig {
    pub taxi: f64,
    pub bus: f64,
    pub dv: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxiConfig {
    /// Trace file to fit the probability field from.
    pub traces: Option<String>,
    /// Precomputed `grid_id,window,p`; takes precedence over `traces`.
    pub p_file: Option<String>,
    /// Taxis available for sensors; defaults to the distinct vehicles in the traces.
    pub fleet_bound: Option<u64>,
    #[serde(default = "TaxiConfig::default_draws")]
    pub draws: usize,
    pub subset_sizes: Option<Vec<usize>>,
}

impl TaxiConfig {
    fn default_draws() -> usize {
        20
    }
}

impl Default for TaxiConfig {
    fn default() -> Self {
        TaxiConfig { traces: None, p_file: None, fleet_bound: None, draws: 20, subset_sizes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusConfig {
    /// `line_id,fleet_size`.
    pub lines: Option<String>,
    /// `line_id,seq,x,y` polylines, rasterized onto the grid.
    pub geometry: Option<String>,
    /// `line_id,seq,grid_id` route grids; takes precedence over `geometry`.
    pub routes: Option<String>,
    /// `line_id,vehicle_id,day,start_hour,end_hour` observed trips.
    pub trips: Option<String>,
    /// `line_id,window,service_time,turnaround_time,in_service` overrides.
    pub params: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// `node_id,x,y`.
    pub nodes: Option<String>,
    /// `from,to,length_km[,speed_kmh]`.
    pub edges: Option<String>,
    #[serde(default = "DvConfig::default_speed")]
    pub speed_kmh: f64,
    #[serde(default = "DvConfig::default_op_start")]
    pub op_start_hour: f64,
    #[serde(default = "DvConfig::default_op_end")]
    pub op_end_hour: f64,
    /// One-way trip length, hours; defaults to the window length.
    pub trip_hours: Option<f64>,
    #[serde(default = "DvConfig::default_radius")]
    pub radius_km: f64,
    #[serde(default = "DvConfig::default_widenings")]
    pub widenings: usize,
    #[serde(default)]
    pub psi_form: PsiForm,
    #[serde(default = "DvConfig::default_adjust")]
    pub adjust_iters: usize,
    /// Start node ids; the rest default to the highest-weight grids.
    #[serde(default)]
    pub starts: Vec<String>,
}

impl DvConfig {
    fn default_speed() -> f64 {
        DEFAULT_SPEED_KMH
    }
    fn default_op_start() -> f64 {
        8.0
    }
    fn default_op_end() -> f64 {
        20.0
    }
    fn default_radius() -> f64 {
        5.0
    }
    fn default_widenings() -> usize {
        2
    }
    fn default_adjust() -> usize {
        3
    }
}

impl Default for DvConfig {
    fn default() -> Self {
        DvConfig {
            enabled: true,
            nodes: None,
            edges: None,
            speed_kmh: DEFAULT_SPEED_KMH,
            op_start_hour: 8.0,
            op_end_hour: 20.0,
            trip_hours: None,
            radius_km: 5.0,
            widenings: 2,
            psi_form: PsiForm::Single,
            adjust_iters: 3,
            starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "SolverConfig::default_tol")]
    pub tol: f64,
    #[serde(default = "SolverConfig::default_max_iters")]
    pub max_iters: usize,
    /// Taxi-bus / DV alternations per DV count.
    #[serde(default = "SolverConfig::default_alternations")]
    pub max_iter: usize,
    #[serde(default = "SolverConfig::default_cap")]
    pub dv_cap: usize,
}

impl SolverConfig {
    fn default_tol() -> f64 {
        1e-6
    }
    fn default_max_iters() -> usize {
        5000
    }
    fn default_alternations() -> usize {
        5
    }
    fn default_cap() -> usize {
        16
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-6, max_iters: 5000, max_iter: 5, dv_cap: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    #[serde(default = "TransferConfig::default_variants")]
    pub variants: usize,
    #[serde(default = "TransferConfig::default_percentile")]
    pub percentile: f64,
    /// Variants remove fractions spread evenly over `[0, max_fraction]`.
    #[serde(default = "TransferConfig::default_max_fraction")]
    pub max_fraction: f64,
    /// Budget of every variant solve; defaults to the scenario budget.
    pub budget: Option<f64>,
}

impl TransferConfig {
    fn default_variants() -> usize {
        30
    }
    fn default_percentile() -> f64 {
        0.6
    }
    fn default_max_fraction() -> f64 {
        0.9
    }
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { variants: 30, percentile: 0.6, max_fraction: 0.9, budget: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub utility: UtilityConfig,
    pub costs: CostsConfig,
    #[serde(default)]
    pub taxi: TaxiConfig,
    #[serde(default)]
    pub bus: BusConfig,
    pub dv: Option<DvConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| DscError::parse(path, e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DscError::InvalidScenario(format!("cannot serialize scenario: {e}")))
    }
}

/// Road network and DV operating rules of a scenario.
#[derive(Debug, Clone)]
pub struct DvData {
    pub network: RoadNetwork,
    pub op_windows: Vec<usize>,
    pub trip_hours: f64,
    pub starts: Vec<usize>,
    pub router: RouterOptions,
    pub op_start_hour: f64,
    pub op_end_hour: f64,
}

/// A fully loaded and validated scenario.
#[derive(Debug, Clone)]
pub struct SensingScenario {
    pub name: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub horizon: Horizon,
    pub weights: SensingWeights,
    pub params: UtilityParams,
    pub costs: CostStructure,
    pub taxi: TaxiModel,
    pub lines: Vec<BusLine>,
    pub dv: Option<DvData>,
    pub solver: SolverConfig,
    pub transfer: TransferConfig,
    /// Non-fatal issues found while loading.
    pub warnings: Vec<String>,
}

impl SensingScenario {
    pub fn n_grids(&self) -> usize {
        self.grid.n_grids()
    }

    pub fn n_windows(&self) -> usize {
        self.horizon.n_windows
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iters: self.solver.max_iters, warm_start: None }
    }

    pub fn taxi_bus_problem(&self) -> Result<TaxiBusProblem> {
        TaxiBusProblem::new(
            self.taxi.clone(),
            self.lines.clone(),
            self.weights.clone(),
            self.params,
            self.costs,
            self.costs.budget,
        )
    }

    pub fn joint_problem(&self) -> Result<JointProblem> {
        let dv = self.dv.as_ref().map(|d| DvSetup {
            map: GridMap::new(&self.grid, &d.network),
            network: d.network.clone(),
            op_windows: d.op_windows.clone(),
            trip_hours: d.trip_hours,
            starts: d.starts.clone(),
            router: d.router.clone(),
        });
        Ok(JointProblem {
            taxi_bus: self.taxi_bus_problem()?,
            dv,
            options: JointOptions {
                solver: self.solver_options(),
                max_iter: self.solver.max_iter,
                dv_cap: self.solver.dv_cap,
            },
        })
    }

    /// Same scenario with a different utility exponent.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.params = UtilityParams::new(beta)?;
        Ok(self)
    }
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn existing(base: &Path, file: &str) -> Result<PathBuf> {
    let p = resolve(base, file);
    if !p.exists() {
        return Err(DscError::MissingFile(p));
    }
    Ok(p)
}

fn read_spatial(path: &Path, n_grids: usize) -> Result<Vec<f64>> {
    let table = Table::read(path)?;
    let g = table.require(&["grid_id", "grid"])?;
    let w = table.require(&["weight", "w"])?;
    let mut out = vec![0.0; n_grids];
    for r in 0..table.rows.len() {
        let id = table.usize_at(r, g)?;
        if id >= n_grids {
            return Err(DscError::parse(path, format!("row {}: grid {id} outside lattice", r + 2)));
        }
        let v = table.f64_at(r, w)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DscError::parse(path, format!("row {}: weight must be nonnegative, got {v}", r + 2)));
        }
        out[id] = v;
    }
    Ok(out)
}

fn read_cell_values(path: &Path, n_grids: usize, n_windows: usize, value: &[&str]) -> Result<Vec<f64>> {
    let table = Table::read(path)?;
    let g = table.require(&["grid_id", "grid"])?;
    let t = table.require(&["window", "window_id"])?;
    let v = table.require(value)?;
    let mut out = vec![0.0; n_grids * n_windows];
    for r in 0..table.rows.len() {
        let (gi, ti) = (table.usize_at(r, g)?, table.usize_at(r, t)?);
        if gi >= n_grids || ti >= n_windows {
            return Err(DscError::parse(path, format!("row {}: cell ({gi}, {ti}) out of range", r + 2)));
        }
        let x = table.f64_at(r, v)?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(DscError::parse(path, format!("row {}: value must be nonnegative, got {x}", r + 2)));
        }
        out[gi * n_windows + ti] = x;
    }
    Ok(out)
}

fn note_normalization(what: &str, values: &[f64], warnings: &mut Vec<String>) {
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_WARN_TOL {
        warnings.push(format!("{what} weights sum to {}; renormalized", fmt_num(sum)));
    }
}

/// Scales to sum 1; all-zero input is left for the weight constructors to reject.
fn unit_sum(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    v
}

/// Temporal weights from the configured profile, before normalization.
pub fn temporal_weights(cfg: &WeightsConfig, horizon: &Horizon) -> Vec<f64> {
    if let Some(t) = &cfg.temporal {
        return t.clone();
    }
    match cfg.profile {
        TemporalProfile::Uniform => vec![1.0; horizon.n_windows],
        TemporalProfile::DayNight => (0..horizon.n_windows)
            .map(|t| {
                let h = horizon.window_start_hour(TimeIndex(t));
                if h >= cfg.day_start_hour - 1e-9 && h < cfg.day_end_hour - 1e-9 {
                    cfg.day_factor
                } else {
                    1.0
                }
            })
            .collect(),
    }
}

fn read_bus_lines(cfg: &BusConfig, base: &Path, grid: &GridSpec, horizon: &Horizon) -> Result<Vec<BusLine>> {
    let Some(lines_file) = &cfg.lines else {
        if cfg.geometry.is_some() || cfg.routes.is_some() || cfg.trips.is_some() {
            return Err(DscError::InvalidScenario("bus data given without a [bus] lines file".into()));
        }
        return Ok(Vec::new());
    };
    let path = existing(base, lines_file)?;
    let table = Table::read(&path)?;
    let id = table.require(&["line_id", "line"])?;
    let fleet = table.require(&["fleet_size", "fleet"])?;
    let nt = horizon.n_windows;
    let mut lines: Vec<BusLine> = Vec::with_capacity(table.rows.len());
    for r in 0..table.rows.len() {
        let name = table.str_at(r, id).to_string();
        if lines.iter().any(|l| l.id == name) {
            return Err(DscError::parse(&path, format!("duplicate line id {name}")));
        }
        lines.push(BusLine {
            id: name,
            route_grids: Vec::new(),
            fleet_size: table.usize_at(r, fleet)? as u64,
            service_time: vec![f64::NAN; nt],
            turnaround_time: vec![f64::NAN; nt],
            in_service: vec![f64::NAN; nt],
            synthetic: vec![false; nt],
        });
    }
    if let Some(routes) = &cfg.routes {
        let path = existing(base, routes)?;
        let table = Table::read(&path)?;
        let id = table.require(&["line_id", "line"])?;
        let seq = table.require(&["seq", "order"])?;
        let g = table.require(&["grid_id", "grid"])?;
        let mut per: BTreeMap<String, Vec<(usize, GridIndex)>> = BTreeMap::new();
        for r in 0..table.rows.len() {
            per.entry(table.str_at(r, id).to_string())
                .or_default()
                .push((table.usize_at(r, seq)?, GridIndex(table.usize_at(r, g)?)));
        }
        for line in &mut lines {
            let mut cells = per.remove(&line.id).unwrap_or_default();
            cells.sort_by_key(|c| c.0);
            line.route_grids = cells.into_iter().map(|c| c.1).collect();
        }
        if let Some(extra) = per.keys().next() {
            return Err(DscError::parse(&path, format!("route for unknown line {extra}")));
        }
    } else if let Some(geometry) = &cfg.geometry {
        let path = existing(base, geometry)?;
        for (name, points) in read_geometry(&path)? {
            let line = lines
                .iter_mut()
                .find(|l| l.id == name)
                .ok_or_else(|| DscError::parse(&path, format!("geometry for unknown line {name}")))?;
            line.route_grids = rasterize_polyline(grid, &points);
        }
    } else if !lines.is_empty() {
        return Err(DscError::InvalidScenario("bus lines need a routes or geometry file".into()));
    }
    if let Some(trips) = &cfg.trips {
        let path = existing(base, trips)?;
        let trips = read_bus_trips(&path)?;
        let ids: Vec<String> = lines.iter().map(|l| l.id.clone()).collect();
        let est = estimate_line_params(&trips, &ids, horizon);
        for e in est.estimates {
            let line = lines.iter_mut().find(|l| l.id == e.line).expect("estimates follow the line list");
            line.service_time = e.service_time;
            line.turnaround_time = e.turnaround_time;
            line.in_service = e.in_service;
            line.synthetic = e.synthetic;
        }
    }
    if let Some(params) = &cfg.params {
        let path = existing(base, params)?;
        apply_line_params(&mut lines, &read_line_params(&path)?)?;
    }
    for line in &lines {
        if line.service_time.iter().chain(&line.turnaround_time).chain(&line.in_service).any(|v| v.is_nan()) {
            return Err(DscError::InvalidLine {
                line: line.id.clone(),
                reason: "no observed trips or parameters for some windows".into(),
            });
        }
        line.validate(grid.n_grids(), nt)?;
    }
    Ok(lines)
}

/// A bus line id with its polyline vertices.
pub type LineGeometry = (String, Vec<(f64, f64)>);

/// Polylines `line_id,seq,x,y`, in line-id order.
pub fn read_geometry(path: &Path) -> Result<Vec<LineGeometry>> {
    let table = Table::read(path)?;
    let id = table.require(&["line_id", "line"])?;
    let seq = table.require(&["seq", "order"])?;
    let x = table.require(&["x", "lon", "longitude"])?;
    let y = table.require(&["y", "lat", "latitude"])?;
    // per line, vertices tagged with their sequence number
    type Numbered = Vec<(usize, (f64, f64))>;
    let mut per: BTreeMap<String, Numbered> = BTreeMap::new();
    for r in 0..table.rows.len() {
        per.entry(table.str_at(r, id).to_string())
            .or_default()
            .push((table.usize_at(r, seq)?, (table.f64_at(r, x)?, table.f64_at(r, y)?)));
    }
    Ok(per
        .into_iter()
        .map(|(k, mut pts)| {
            pts.sort_by_key(|p| p.0);
            (k, pts.into_iter().map(|p| p.1).collect())
        })
        .collect())
}

pub fn write_geometry(path: &Path, geometry: &[LineGeometry]) -> Result<()> {
    let mut out = CsvOut::create(path, &["line_id", "seq", "x", "y"])?;
    for (id, pts) in geometry {
        for (i, (x, y)) in pts.iter().enumerate() {
            out.row([id.clone(), i.to_string(), fmt_num(*x), fmt_num(*y)])?;
        }
    }
    out.finish()
}

/// Builds the DV operating setup from its configuration and a loaded network.
pub fn dv_data(d: &DvConfig, network: RoadNetwork, horizon: &Horizon, warnings: &mut Vec<String>) -> Result<DvData> {
    if network.n_unroutable() > 0 {
        warnings
            .push(format!("{} road nodes are outside the main strongly connected component", network.n_unroutable()));
    }
    let op_windows: Vec<usize> =
        horizon.windows_between(d.op_start_hour, d.op_end_hour).into_iter().map(|t| t.0).collect();
    if op_windows.is_empty() {
        warnings.push("dv: no window falls inside the operating hours".into());
    }
    let starts = d
        .starts
        .iter()
        .map(|s| network.node_index(s).ok_or_else(|| DscError::InvalidScenario(format!("dv: unknown start node {s}"))))
        .collect::<Result<Vec<_>>>()?;
    let trip_hours = d.trip_hours.unwrap_or(horizon.window_hours);
    if !(trip_hours > 0.0) {
        return Err(DscError::InvalidScenario("dv.trip_hours must be positive".into()));
    }
    Ok(DvData {
        network,
        op_windows,
        trip_hours,
        starts,
        router: RouterOptions {
            radius_km: d.radius_km,
            widenings: d.widenings,
            psi_form: d.psi_form,
            adjust_iters: d.adjust_iters,
            ..RouterOptions::default()
        },
        op_start_hour: d.op_start_hour,
        op_end_hour: d.op_end_hour,
    })
}

/// Reads, validates and assembles a scenario from its configuration file.
pub fn load_scenario(path: &Path) -> Result<SensingScenario> {
    if !path.exists() {
        return Err(DscError::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| DscError::io(path, e))?;
    let cfg = ScenarioConfig::from_toml(&text, path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    build_scenario(&cfg, &base)
}

/// Assembles a scenario from a parsed configuration; relative paths resolve against `base`.
pub fn build_scenario(cfg: &ScenarioConfig, base: &Path) -> Result<SensingScenario> {
    let mut warnings = Vec::new();
    let grid = GridSpec {
        origin: cfg.grid.origin,
        cell_size_km: cfg.grid.cell_size_km,
        cols: cfg.grid.cols,
        rows: cfg.grid.rows,
        coords: cfg.grid.coords,
    };
    grid.validate()?;
    let horizon = Horizon::new(cfg.horizon.n_windows, cfg.horizon.window_hours, cfg.horizon.start_hour);
    horizon.validate()?;
    let (ng, nt) = (grid.n_grids(), horizon.n_windows);
    let w = &cfg.weights;
    let weights = match (&w.joint_file, &w.ptd_file) {
        (Some(_), Some(_)) => {
            return Err(DscError::InvalidScenario("weights: give joint_file or ptd_file, not both".into()));
        }
        (Some(joint), None) => {
            let values = read_cell_values(&existing(base, joint)?, ng, nt, &["weight", "w"])?;
            note_normalization("joint", &values, &mut warnings);
            SensingWeights::from_joint(ng, nt, unit_sum(values))?
        }
        (None, Some(ptd)) => {
            let probs = read_cell_values(&existing(base, ptd)?, ng, nt, &["prob", "p", "ptd"])?;
            note_normalization("target distribution", &probs, &mut warnings);
            let sum: f64 = probs.iter().sum();
            if !(sum > 0.0) {
                return Err(DscError::InvalidScenario("target distribution sums to zero".into()));
            }
            let ptd = Distribution { n_grids: ng, n_windows: nt, probs: probs.iter().map(|p| p / sum).collect() };
            if cfg.utility.zeta.is_some() {
                return Err(DscError::InvalidScenario(
                    "utility.zeta cannot calibrate beta for a prescribed target distribution; give beta".into(),
                ));
            }
            let beta = cfg.utility.beta.unwrap_or(DEFAULT_BETA);
            ptd_to_weights(&ptd, &UtilityParams::new(beta)?)?
        }
        (None, None) => {
            let spatial = match &w.spatial_file {
                Some(f) => read_spatial(&existing(base, f)?, ng)?,
                None => vec![1.0 / ng as f64; ng],
            };
            let temporal = temporal_weights(w, &horizon);
            if temporal.len() != nt {
                return Err(DscError::InvalidScenario(format!(
                    "weights.temporal has {} entries for {nt} windows",
                    temporal.len()
                )));
            }
            note_normalization("spatial", &spatial, &mut warnings);
            if w.temporal.is_some() {
                note_normalization("temporal", &temporal, &mut warnings);
            }
            SensingWeights::new(unit_sum(spatial), unit_sum(temporal))?
        }
    };
    let beta = match (cfg.utility.beta, cfg.utility.zeta) {
        (Some(_), Some(_)) => return Err(DscError::InvalidScenario("utility: give beta or zeta, not both".into())),
        (Some(b), None) => b,
        (None, Some(zeta)) => {
            let positive: Vec<f64> = weights.spatial().iter().copied().filter(|v| *v > 0.0).collect();
            let w_max = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w_min = positive.iter().copied().fold(f64::INFINITY, f64::min);
            calibrate_beta(w_max, w_min, zeta)?
        }
        (None, None) => DEFAULT_BETA,
    };
    let params = UtilityParams::new(beta)?;
    let c = &cfg.costs;
    let costs = CostStructure { taxi: c.taxi, bus: c.bus, dv: c.dv, budget: c.budget };
    costs.validate()?;

    let t = &cfg.taxi;
    let taxi = if let Some(p) = &t.p_file {
        let path = existing(base, p)?;
        let bound = t.fleet_bound.ok_or_else(|| {
            DscError::InvalidScenario("taxi.fleet_bound is required with a precomputed p_file".into())
        })?;
        TaxiModel::read(&path, ng, nt, bound)?
    } else if let Some(tr) = &t.traces {
        let traces = read_taxi_traces(&existing(base, tr)?, &grid, &horizon)?;
        let opts = FitOptions { draws: t.draws, subset_sizes: t.subset_sizes.clone(), seed: cfg.seed };
        let mut model = fit_p(&traces, &opts)?;
        if let Some(bound) = t.fleet_bound {
            model.fleet_bound = bound;
        }
        model
    } else {
        TaxiModel::zeros(ng, nt, 0)
    };
    let lines = read_bus_lines(&cfg.bus, base, &grid, &horizon)?;

    let dv = match &cfg.dv {
        Some(d) if d.enabled => {
            let (Some(nodes), Some(edges)) = (&d.nodes, &d.edges) else {
                return Err(DscError::InvalidScenario("dv: nodes and edges files are required".into()));
            };
            let network = RoadNetwork::read(&existing(base, nodes)?, &existing(base, edges)?, d.speed_kmh)?;
            Some(dv_data(d, network, &horizon, &mut warnings)?)
        }
        _ => None,
    };
    if !(cfg.solver.tol > 0.0) || cfg.solver.max_iters == 0 || cfg.solver.max_iter == 0 {
        return Err(DscError::InvalidScenario("solver: tol must be positive and iteration limits at least 1".into()));
    }
    let tr = &cfg.transfer;
    if tr.budget.is_some_and(|b| !(b >= 0.0 && b.is_finite())) {
        return Err(DscError::InvalidScenario("transfer.budget must be nonnegative".into()));
    }
    if !(tr.percentile > 0.0 && tr.percentile < 1.0) || !(0.0..=1.0).contains(&tr.max_fraction) {
        return Err(DscError::InvalidScenario("transfer: percentile must lie in (0,1), max_fraction in [0,1]".into()));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let scenario = SensingScenario {
        name: cfg.name.clone(),
        seed: cfg.seed,
        grid,
        horizon,
        weights,
        params,
        costs,
        taxi,
        lines,
        dv,
        solver: cfg.solver.clone(),
        transfer: cfg.transfer.clone(),
        warnings,
    };
    // shapes and line data are checked once more as a whole
    scenario.taxi_bus_problem()?;
    Ok(scenario)
}

/// Writes the scenario as a configuration file plus data files in `dir`,
/// returning the configuration path. Loading the result reproduces the scenario.
pub fn save_scenario(scenario: &SensingScenario, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| DscError::io(dir, e))?;
    let (ng, nt) = (scenario.n_grids(), scenario.n_windows());
    let mut weights = WeightsConfig::default();
    if let Some(joint) = scenario.weights.joint() {
        let mut out = CsvOut::create(&dir.join("joint_weights.csv"), &["grid_id", "window", "weight"])?;
        for g in 0..ng {
            for t in 0..nt {
                out.row([g.to_string(), t.to_string(), fmt_num(joint[g * nt + t])])?;
            }
        }
        out.finish()?;
        weights.joint_file = Some("joint_weights.csv".into());
    } else {
        let mut out = CsvOut::create(&dir.join("weights.csv"), &["grid_id", "weight"])?;
        for (g, w) in scenario.weights.spatial().iter().enumerate() {
            out.row([g.to_string(), fmt_num(*w)])?;
        }
        out.finish()?;
        weights.spatial_file = Some("weights.csv".into());
        weights.temporal = Some(scenario.weights.temporal().to_vec());
    }
    scenario.taxi.write(&dir.join("taxi_p.csv"))?;
    let mut bus = BusConfig::default();
    if !scenario.lines.is_empty() {
        let mut out = CsvOut::create(&dir.join("bus_lines.csv"), &["line_id", "fleet_size"])?;
        for l in &scenario.lines {
            out.row([l.id.clone(), l.fleet_size.to_string()])?;
        }
        out.finish()?;
        let mut out = CsvOut::create(&dir.join("bus_routes.csv"), &["line_id", "seq", "grid_id"])?;
        for l in &scenario.lines {
            for (i, g) in l.route_grids.iter().enumerate() {
                out.row([l.id.clone(), i.to_string(), g.0.to_string()])?;
            }
        }
        out.finish()?;
        write_line_params(&dir.join("bus_params.csv"), &scenario.lines)?;
        bus = BusConfig {
            lines: Some("bus_lines.csv".into()),
            routes: Some("bus_routes.csv".into()),
            params: Some("bus_params.csv".into()),
            ..BusConfig::default()
        };
    }
    let dv = match &scenario.dv {
        Some(d) => {
            d.network.write(&dir.join("road_nodes.csv"), &dir.join("road_edges.csv"))?;
            Some(DvConfig {
                enabled: true,
                nodes: Some("road_nodes.csv".into()),
                edges: Some("road_edges.csv".into()),
                speed_kmh: d.network.speed_kmh(),
                op_start_hour: d.op_start_hour,
                op_end_hour: d.op_end_hour,
                trip_hours: Some(d.trip_hours),
                radius_km: d.router.radius_km,
                widenings: d.router.widenings,
                psi_form: d.router.psi_form,
                adjust_iters: d.router.adjust_iters,
                starts: d.starts.iter().map(|&v| d.network.nodes()[v].id.clone()).collect(),
            })
        }
        None => None,
    };
    let cfg = ScenarioConfig {
        name: scenario.name.clone(),
        seed: scenario.seed,
        grid: GridConfig {
            origin: scenario.grid.origin,
            cell_size_km: scenario.grid.cell_size_km,
            cols: scenario.grid.cols,
            rows: scenario.grid.rows,
            coords: scenario.grid.coords,
        },
        horizon: HorizonConfig {
            n_windows: nt,
            window_hours: scenario.horizon.window_hours,
            start_hour: scenario.horizon.start_hour,
        },
        weights,
        utility: UtilityConfig { beta: Some(scenario.params.beta), zeta: None },
        costs: CostsConfig {
            taxi: scenario.costs.taxi,
            bus: scenario.costs.bus,
            dv: scenario.costs.dv,
            budget: scenario.costs.budget,
        },
        taxi: TaxiConfig {
            p_file: Some("taxi_p.csv".into()),
            fleet_bound: Some(scenario.taxi.fleet_bound),
            ..TaxiConfig::default()
        },
        bus,
        dv,
        solver: scenario.solver.clone(),
        transfer: scenario.transfer.clone(),
    };
    let path = dir.join("scenario.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| DscError::io(&path, e))?;
    Ok(path)
}

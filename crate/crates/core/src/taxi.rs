//! Linear (binomial-mean) taxi coverage model `N_{g,t} = n * p_{g,t}` and its
//! estimation from visit records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DscError, Result};
use crate::grid::{GridIndex, GridSpec, Horizon, TimeIndex};
use crate::model::CoverageField;
use crate::textio::{fmt_num, CsvOut, Table};

/// Grids one vehicle touched during one window of one day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxiVisit {
    pub vehicle: String,
    pub day: i64,
    pub window: TimeIndex,
    pub grids: BTreeSet<GridIndex>,
    /// Reserved for multi-operator fleets; unused by the single-operator fit.
    pub operator: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxiTraceSet {
    n_grids: usize,
    n_windows: usize,
    records: Vec<TaxiVisit>,
}

impl TaxiTraceSet {
    /// Validates grid/window bounds and merges duplicate (vehicle, day, window) keys.
    pub fn new(n_grids: usize, n_windows: usize, records: Vec<TaxiVisit>) -> Result<Self> {
        let mut merged: BTreeMap<(String, i64, TimeIndex), TaxiVisit> = BTreeMap::new();
        for rec in records {
            if rec.window.0 >= n_windows {
                return Err(DscError::Domain(format!("window {} outside horizon", rec.window.0)));
            }
            if let Some(g) = rec.grids.iter().find(|g| g.0 >= n_grids) {
                return Err(DscError::Domain(format!("grid {} outside lattice", g.0)));
            }
            let key = (rec.vehicle.clone(), rec.day, rec.window);
            match merged.get_mut(&key) {
                Some(existing) => existing.grids.extend(rec.grids),
                None => {
                    merged.insert(key, rec);
                }
            }
        }
        Ok(TaxiTraceSet { n_grids, n_windows, records: merged.into_values().collect() })
    }

    pub fn records(&self) -> &[TaxiVisit] {
        &self.records
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn vehicles(&self) -> Vec<String> {
        self.records.iter().map(|r| r.vehicle.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn days(&self) -> BTreeSet<i64> {
        self.records.iter().map(|r| r.day).collect()
    }

    /// Keeps the records of the listed vehicles only.
    pub fn filter_vehicles(&self, keep: &BTreeSet<String>) -> TaxiTraceSet {
        TaxiTraceSet {
            n_grids: self.n_grids,
            n_windows: self.n_windows,
            records: self.records.iter().filter(|r| keep.contains(&r.vehicle)).cloned().collect(),
        }
    }

    /// Per-vehicle sparse visit-day counts, `(cell, days)` with cell = g * T + t.
    fn count_table(&self) -> (Vec<Vec<(usize, u32)>>, usize) {
        let vehicles = self.vehicles();
        let index: HashMap<&str, usize> = vehicles.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut counts: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); vehicles.len()];
        for rec in &self.records {
            let v = index[rec.vehicle.as_str()];
            for g in &rec.grids {
                *counts[v].entry(g.0 * self.n_windows + rec.window.0).or_default() += 1;
            }
        }
        let days = self.days().len().max(1);
        (counts.into_iter().map(|m| m.into_iter().collect()).collect(), days)
    }

    /// Writes the precomputed visit form `vehicle_id,day,window,grid_id`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = CsvOut::create(path, &["vehicle_id", "day", "window", "grid_id"])?;
        for rec in &self.records {
            for g in &rec.grids {
                out.row([rec.vehicle.clone(), rec.day.to_string(), rec.window.0.to_string(), g.0.to_string()])?;
            }
        }
        out.finish()
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    if let Ok(secs) = raw.parse::<i64>() {
        return DateTime::from_timestamp(secs, 0).map(|d| d.naive_utc());
    }
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%SZ"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
}

/// Reads taxi traces. Two layouts are recognised from the header:
///
/// * visits: `vehicle_id, day, window, grid_id`
/// * raw points: `vehicle_id, timestamp, lon, lat` (or `x, y`), snapped to grids
///   by bounding-box lookup; points outside the lattice or horizon are dropped.
///
/// An optional `operator` column is carried through.
pub fn read_taxi_traces(path: &Path, grid: &GridSpec, horizon: &Horizon) -> Result<TaxiTraceSet> {
    let table = Table::read(path)?;
    let vehicle = table.require(&["vehicle_id", "vehicle", "taxi_id"])?;
    let operator = table.column(&["operator", "operator_id"]);
    let mut records = Vec::new();
    if let Some(grid_col) = table.column(&["grid_id", "grid"]) {
        let day = table.require(&["day", "day_id"])?;
        let window = table.require(&["window", "window_id"])?;
        for r in 0..table.rows.len() {
            let day_raw = table.str_at(r, day);
            let day_id: i64 =
                day_raw.parse().map_err(|_| DscError::parse(path, format!("row {}: bad day {day_raw:?}", r + 2)))?;
            records.push(TaxiVisit {
                vehicle: table.str_at(r, vehicle).to_string(),
                day: day_id,
                window: TimeIndex(table.usize_at(r, window)?),
                grids: [GridIndex(table.usize_at(r, grid_col)?)].into(),
                operator: operator.map(|c| table.str_at(r, c).to_string()),
            });
        }
    } else {
        let ts = table.require(&["timestamp", "time"])?;
        let x = table.require(&["lon", "longitude", "x"])?;
        let y = table.require(&["lat", "latitude", "y"])?;
        let mut dropped = 0usize;
        for r in 0..table.rows.len() {
            let raw = table.str_at(r, ts);
            let stamp = parse_timestamp(raw)
                .ok_or_else(|| DscError::parse(path, format!("row {}: bad timestamp {raw:?}", r + 2)))?;
            let hour = stamp.hour() as f64 + stamp.minute() as f64 / 60.0 + stamp.second() as f64 / 3600.0;
            // service day starts at the horizon's first window
            let shifted = stamp - chrono::Duration::seconds((horizon.start_hour * 3600.0) as i64);
            let day_id = shifted.date().num_days_from_ce() as i64;
            let cell = grid.cell_of(table.f64_at(r, x)?, table.f64_at(r, y)?);
            match (cell, horizon.window_of_hour(hour)) {
                (Some(g), Some(t)) => records.push(TaxiVisit {
                    vehicle: table.str_at(r, vehicle).to_string(),
                    day: day_id,
                    window: t,
                    grids: [g].into(),
                    operator: operator.map(|c| table.str_at(r, c).to_string()),
                }),
                _ => dropped += 1,
            }
        }
        if dropped > 0 {
            log::info!("{}: dropped {dropped} points outside the lattice or horizon", path.display());
        }
    }
    if records.is_empty() {
        return Err(DscError::EmptyInput(format!("no taxi records in {}", path.display())));
    }
    TaxiTraceSet::new(grid.n_grids(), horizon.n_windows, records)
}

/// Fitted slopes `p_{g,t}` and the fleet bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxiModel {
    n_grids: usize,
    n_windows: usize,
    p: Vec<f64>,
    pub fleet_bound: u64,
}

impl TaxiModel {
    pub fn new(n_grids: usize, n_windows: usize, p: Vec<f64>, fleet_bound: u64) -> Result<Self> {
        if p.len() != n_grids * n_windows {
            return Err(DscError::DimensionMismatch {
                what: "taxi p-field",
                expected: n_grids * n_windows,
                got: p.len(),
            });
        }
        if let Some(bad) = p.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
            return Err(DscError::Domain(format!("taxi p must lie in [0,1], found {bad}")));
        }
        Ok(TaxiModel { n_grids, n_windows, p, fleet_bound })
    }

    pub fn zeros(n_grids: usize, n_windows: usize, fleet_bound: u64) -> Self {
        TaxiModel { n_grids, n_windows, p: vec![0.0; n_grids * n_windows], fleet_bound }
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn p(&self, g: usize, t: usize) -> f64 {
        self.p[g * self.n_windows + t]
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p
    }

    /// Mean `p` over windows, used to rank grids by taxi coverage.
    pub fn mean_over_windows(&self) -> Vec<f64> {
        (0..self.n_grids)
            .map(|g| self.p[g * self.n_windows..(g + 1) * self.n_windows].iter().sum::<f64>() / self.n_windows as f64)
            .collect()
    }

    pub fn read(path: &Path, n_grids: usize, n_windows: usize, fleet_bound: u64) -> Result<Self> {
        let table = Table::read(path)?;
        let g = table.require(&["grid_id", "grid"])?;
        let t = table.require(&["window", "window_id"])?;
        let pc = table.require(&["p"])?;
        let mut p = vec![0.0; n_grids * n_windows];
        for r in 0..table.rows.len() {
            let (gi, ti) = (table.usize_at(r, g)?, table.usize_at(r, t)?);
            if gi >= n_grids || ti >= n_windows {
                return Err(DscError::parse(path, format!("row {}: cell ({gi},{ti}) out of range", r + 2)));
            }
            p[gi * n_windows + ti] = table.f64_at(r, pc)?;
        }
        TaxiModel::new(n_grids, n_windows, p, fleet_bound)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = CsvOut::create(path, &["grid_id", "window", "p"])?;
        for g in 0..self.n_grids {
            for t in 0..self.n_windows {
                out.row([g.to_string(), t.to_string(), fmt_num(self.p(g, t))])?;
            }
        }
        out.finish()
    }
}

/// Random-draw settings for the slope fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub draws: usize,
    /// Subset sizes; `None` means 10 evenly spaced sizes up to the fleet size.
    pub subset_sizes: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { draws: 20, subset_sizes: None, seed: 0 }
    }
}

pub fn default_subset_sizes(fleet: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> =
        (1..=10).map(|k| ((k * fleet) as f64 / 10.0).round() as usize).filter(|&s| s > 0).collect();
    sizes.dedup();
    sizes
}

/// Day-averaged coverage `N̄_{g,t}`, averaged again over `draws` random subsets per size.
fn mean_coverage_curves(
    counts: &[Vec<(usize, u32)>],
    days: usize,
    n_cells: usize,
    sizes: &[usize],
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    sizes
        .iter()
        .map(|&size| {
            let mut acc = vec![0.0; n_cells];
            for _ in 0..draws {
                for v in sample(rng, counts.len(), size).iter() {
                    for &(cell, c) in &counts[v] {
                        acc[cell] += c as f64;
                    }
                }
            }
            let scale = 1.0 / (draws as f64 * days as f64);
            acc.iter_mut().for_each(|x| *x *= scale);
            acc
        })
        .collect()
}

fn check_sizes(sizes: &[usize], fleet: usize) -> Result<()> {
    if let Some(&bad) = sizes.iter().find(|&&s| s > fleet || s == 0) {
        return Err(DscError::BoundViolation(format!("subset size {bad} must lie in 1..={fleet} (distinct vehicles)")));
    }
    Ok(())
}

/// Least-squares slope through the origin of mean coverage against subset size.
pub fn fit_p(traces: &TaxiTraceSet, options: &FitOptions) -> Result<TaxiModel> {
    if traces.records.is_empty() {
        return Err(DscError::EmptyInput("taxi trace set is empty".into()));
    }
    if options.draws == 0 {
        return Err(DscError::Domain("at least one random draw is required".into()));
    }
    let (counts, days) = traces.count_table();
    let fleet = counts.len();
    let sizes = options.subset_sizes.clone().unwrap_or_else(|| default_subset_sizes(fleet));
    check_sizes(&sizes, fleet)?;
    let n_cells = traces.n_grids * traces.n_windows;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let curves = mean_coverage_curves(&counts, days, n_cells, &sizes, options.draws, &mut rng);
    let sxx: f64 = sizes.iter().map(|&s| (s * s) as f64).sum();
    let p = (0..n_cells)
        .map(|cell| {
            let sxy: f64 = sizes.iter().zip(&curves).map(|(&s, y)| s as f64 * y[cell]).sum();
            (sxy / sxx).clamp(0.0, 1.0)
        })
        .collect();
    TaxiModel::new(traces.n_grids, traces.n_windows, p, fleet as u64)
}

/// Expected taxi coverage of `n_taxi` instrumented taxis.
pub fn taxi_coverage(model: &TaxiModel, n_taxi: f64) -> Result<CoverageField> {
    if !(n_taxi >= 0.0 && n_taxi <= model.fleet_bound as f64 + 1e-9) {
        return Err(DscError::BoundViolation(format!("taxi count {n_taxi} outside [0, {}]", model.fleet_bound)));
    }
    CoverageField::from_vec(model.n_grids, model.n_windows, model.p.iter().map(|p| p * n_taxi).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaeRow {
    pub window: TimeIndex,
    pub size: usize,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub window: TimeIndex,
    pub size: usize,
    pub grid: GridIndex,
    pub empirical: f64,
    pub estimated: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    pub rows: Vec<MaeRow>,
    pub scatter: Vec<ScatterPoint>,
}

impl FitReport {
    pub fn write(&self, report: &Path, scatter: Option<&Path>) -> Result<()> {
        let mut out = CsvOut::create(report, &["window", "size", "mae"])?;
        for r in &self.rows {
            out.row([r.window.0.to_string(), r.size.to_string(), fmt_num(r.mae)])?;
        }
        out.finish()?;
        if let Some(path) = scatter {
            let mut out = CsvOut::create(path, &["window", "size", "grid_id", "empirical", "estimated"])?;
            for s in &self.scatter {
                out.row([
                    s.window.0.to_string(),
                    s.size.to_string(),
                    s.grid.0.to_string(),
                    fmt_num(s.empirical),
                    fmt_num(s.estimated),
                ])?;
            }
            out.finish()?;
        }
        Ok(())
    }
}

/// Compares empirical mean coverage of random holdout subsets with `size * p`.
/// The holdout should not share records with the data used for fitting.
pub fn validate_fit(
    model: &TaxiModel,
    holdout: &TaxiTraceSet,
    sizes: &[usize],
    draws: usize,
    seed: u64,
) -> Result<FitReport> {
    if holdout.n_grids != model.n_grids || holdout.n_windows != model.n_windows {
        return Err(DscError::DimensionMismatch {
            what: "holdout traces",
            expected: model.n_grids * model.n_windows,
            got: holdout.n_grids * holdout.n_windows,
        });
    }
    if holdout.records.is_empty() {
        return Ok(FitReport::default());
    }
    let (counts, days) = holdout.count_table();
    check_sizes(sizes, counts.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = model.n_windows;
    let curves = mean_coverage_curves(&counts, days, model.n_grids * nt, sizes, draws.max(1), &mut rng);
    let mut report = FitReport::default();
    for t in 0..nt {
        for (&size, curve) in sizes.iter().zip(&curves) {
            let mut abs_err = 0.0;
            for g in 0..model.n_grids {
                let empirical = curve[g * nt + t];
                let estimated = size as f64 * model.p(g, t);
                abs_err += (empirical - estimated).abs();
                report.scatter.push(ScatterPoint {
                    window: TimeIndex(t),
                    size,
                    grid: GridIndex(g),
                    empirical,
                    estimated,
                });
            }
            report.rows.push(MaeRow { window: TimeIndex(t), size, mae: abs_err / model.n_grids as f64 });
        }
    }
    Ok(report)
}

//! Expected bus coverage from route geometry, service intensity and trip times.
//!
//! Each line is treated as a continuum: an instrumented bus of line `j`
//! passes every grid on the route `1 / (T_s + T_a)` times per hour while in
//! service, and is in service with probability `gamma_j(t) = lambda_j(t) / L_j`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DscError, Result};
use crate::grid::{GridIndex, GridSpec, Horizon, TimeIndex};
use crate::model::CoverageField;
use crate::textio::{fmt_num, CsvOut, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusLine {
    pub id: String,
    /// Grids intersected by the route, in travel order.
    pub route_grids: Vec<GridIndex>,
    pub fleet_size: u64,
    /// En-route service time per one-way trip, hours, per window.
    pub service_time: Vec<f64>,
    /// Terminal turnaround time, hours, per window.
    pub turnaround_time: Vec<f64>,
    /// Average buses in service, per window.
    pub in_service: Vec<f64>,
    /// Windows whose parameters were filled in from a neighbouring window.
    #[serde(default)]
    pub synthetic: Vec<bool>,
}

impl BusLine {
    pub fn n_windows(&self) -> usize {
        self.in_service.len()
    }

    pub fn validate(&self, n_grids: usize, n_windows: usize) -> Result<()> {
        let bad = |reason: String| DscError::InvalidLine { line: self.id.clone(), reason };
        if self.route_grids.is_empty() {
            return Err(bad("route intersects no grid".into()));
        }
        if let Some(g) = self.route_grids.iter().find(|g| g.0 >= n_grids) {
            return Err(bad(format!("route grid {} outside lattice", g.0)));
        }
        for (name, v) in [
            ("service_time", &self.service_time),
            ("turnaround_time", &self.turnaround_time),
            ("in_service", &self.in_service),
        ] {
            if v.len() != n_windows {
                return Err(bad(format!("{name} has {} windows, expected {n_windows}", v.len())));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(bad(format!("{name} must be finite and nonnegative")));
            }
        }
        for t in 0..n_windows {
            let lambda = self.in_service[t];
            if lambda > self.fleet_size as f64 + 1e-9 {
                return Err(bad(format!("window {t}: {lambda} buses in service exceeds fleet {}", self.fleet_size)));
            }
            if lambda > 0.0 && !(self.service_time[t] + self.turnaround_time[t] > 0.0) {
                return Err(bad(format!("window {t}: zero trip duration with buses in service")));
            }
        }
        Ok(())
    }

    /// Coverage contributed per instrumented bus on every route grid, `gamma / (T_s + T_a)`.
    pub fn unit_rate(&self, t: TimeIndex) -> Result<f64> {
        let gamma = service_intensity(self, t)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let period = self.service_time[t.0] + self.turnaround_time[t.0];
        if !(period > 0.0) {
            return Err(DscError::InvalidLine {
                line: self.id.clone(),
                reason: format!("window {}: zero trip duration with buses in service", t.0),
            });
        }
        Ok(gamma / period)
    }
}

/// Fraction of the line's fleet in service during window `t`.
pub fn service_intensity(line: &BusLine, t: TimeIndex) -> Result<f64> {
    if line.fleet_size == 0 {
        return Err(DscError::InvalidLine { line: line.id.clone(), reason: "fleet size is zero".into() });
    }
    let lambda = *line.in_service.get(t.0).ok_or_else(|| DscError::Domain(format!("window {} out of range", t.0)))?;
    Ok(lambda / line.fleet_size as f64)
}

/// Binary grid-line incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct BusIncidence {
    n_grids: usize,
    /// Sorted, deduplicated grids per line.
    per_line: Vec<Vec<GridIndex>>,
}

impl BusIncidence {
    pub fn from_lines(lines: &[BusLine], n_grids: usize) -> Self {
        let per_line = lines
            .iter()
            .map(|l| l.route_grids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        BusIncidence { n_grids, per_line }
    }

    pub fn n_lines(&self) -> usize {
        self.per_line.len()
    }

    pub fn n_grids(&self) -> usize {
        self.n_grids
    }

    pub fn grids_of(&self, line: usize) -> &[GridIndex] {
        &self.per_line[line]
    }

    pub fn intersects(&self, g: GridIndex, line: usize) -> bool {
        self.per_line[line].binary_search(&g).is_ok()
    }

    /// Grids intersected by at least one line.
    pub fn covered(&self) -> Vec<bool> {
        let mut covered = vec![false; self.n_grids];
        for grids in &self.per_line {
            for g in grids {
                covered[g.0] = true;
            }
        }
        covered
    }
}

/// Expected bus coverage for `sensors[j]` instrumented buses on line `j`.
pub fn bus_coverage(
    lines: &[BusLine],
    incidence: &BusIncidence,
    sensors: &[f64],
    n_windows: usize,
) -> Result<CoverageField> {
    if lines.len() != incidence.n_lines() || sensors.len() != lines.len() {
        return Err(DscError::DimensionMismatch { what: "bus sensors", expected: lines.len(), got: sensors.len() });
    }
    let mut field = CoverageField::zeros(incidence.n_grids(), n_windows);
    for (j, (line, &y)) in lines.iter().zip(sensors).enumerate() {
        if !(y >= 0.0 && y <= line.fleet_size as f64 + 1e-9) {
            return Err(DscError::BoundViolation(format!(
                "line {}: {y} sensors outside [0, {}]",
                line.id, line.fleet_size
            )));
        }
        if y == 0.0 {
            continue;
        }
        for t in 0..n_windows {
            let rate = line.unit_rate(TimeIndex(t))?;
            if rate == 0.0 {
                continue;
            }
            for g in incidence.grids_of(j) {
                field.add_at(g.0, t, rate * y);
            }
        }
    }
    Ok(field)
}

/// Cells a polyline passes through, in travel order with consecutive repeats removed.
/// Points are raw coordinates in the grid's coordinate system; parts of the
/// line outside the lattice are skipped.
pub fn rasterize_polyline(grid: &GridSpec, points: &[(f64, f64)]) -> Vec<GridIndex> {
    let local: Vec<(f64, f64)> = points.iter().map(|&(x, y)| grid.to_local_km(x, y)).collect();
    let mut cells: Vec<(i64, i64)> = Vec::new();
    let mut push = |c: (i64, i64)| {
        if cells.last() != Some(&c) {
            cells.push(c);
        }
    };
    let cs = grid.cell_size_km;
    if local.len() == 1 {
        push(((local[0].0 / cs).floor() as i64, (local[0].1 / cs).floor() as i64));
    }
    for seg in local.windows(2) {
        let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
        let (mut cx, mut cy) = ((x0 / cs).floor() as i64, (y0 / cs).floor() as i64);
        let (ex, ey) = ((x1 / cs).floor() as i64, (y1 / cs).floor() as i64);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let step_x = if dx > 0.0 { 1 } else { -1 };
        let step_y = if dy > 0.0 { 1 } else { -1 };
        let boundary = |c: i64, step: i64| if step > 0 { (c + 1) as f64 * cs } else { c as f64 * cs };
        let mut t_max_x = if dx != 0.0 { (boundary(cx, step_x) - x0) / dx } else { f64::INFINITY };
        let mut t_max_y = if dy != 0.0 { (boundary(cy, step_y) - y0) / dy } else { f64::INFINITY };
        let t_dx = if dx != 0.0 { cs / dx.abs() } else { f64::INFINITY };
        let t_dy = if dy != 0.0 { cs / dy.abs() } else { f64::INFINITY };
        let max_steps = (ex - cx).abs() + (ey - cy).abs() + 2;
        push((cx, cy));
        for _ in 0..max_steps {
            if (cx, cy) == (ex, ey) || (t_max_x > 1.0 && t_max_y > 1.0) {
                break;
            }
            if t_max_x < t_max_y {
                cx += step_x;
                t_max_x += t_dx;
            } else if t_max_y < t_max_x {
                cy += step_y;
                t_max_y += t_dy;
            } else {
                // exact corner crossing goes diagonally
                cx += step_x;
                cy += step_y;
                t_max_x += t_dx;
                t_max_y += t_dy;
            }
            push((cx, cy));
        }
    }
    let mut out: Vec<GridIndex> = Vec::new();
    for (c, r) in cells {
        if c >= 0 && r >= 0 && (c as usize) < grid.cols && (r as usize) < grid.rows {
            let g = grid.index(c as usize, r as usize);
            if out.last() != Some(&g) {
                out.push(g);
            }
        }
    }
    out
}

/// One observed one-way trip of a bus.
#[derive(Debug, Clone, PartialEq)]
pub struct BusTrip {
    pub line: String,
    pub vehicle: String,
    pub day: i64,
    /// Hours of day; the service day begins at the horizon start, so early-hour
    /// times after midnight may be written as 24+h.
    pub start_hour: f64,
    pub end_hour: f64,
}

/// Estimated time-varying parameters of one line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineEstimate {
    pub line: String,
    pub service_time: Vec<f64>,
    pub turnaround_time: Vec<f64>,
    pub in_service: Vec<f64>,
    pub synthetic: Vec<bool>,
    /// Distinct vehicles ever observed on the line.
    pub observed_fleet: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineEstimates {
    pub estimates: Vec<LineEstimate>,
    /// Lines with no trip at all; they need manual parameters.
    pub unobserved: Vec<String>,
}

fn horizon_offset(horizon: &Horizon, hour: f64) -> f64 {
    let off = hour - horizon.start_hour;
    if off < 0.0 {
        off + 24.0
    } else {
        off
    }
}

fn fill_from_nearest(values: &mut [Option<f64>], synthetic: &mut [bool]) {
    let observed: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    if observed.is_empty() {
        values.iter_mut().for_each(|v| *v = Some(0.0));
        synthetic.iter_mut().for_each(|s| *s = true);
        return;
    }
    for i in 0..values.len() {
        if values[i].is_none() {
            // nearest observed window, earlier one on ties
            let src = *observed.iter().min_by_key(|&&j| (j.abs_diff(i), j)).unwrap();
            values[i] = values[src];
            synthetic[i] = true;
        }
    }
}

/// Estimates `T_s(t)`, `T_a(t)`, `lambda(t)` for each listed line.
///
/// Trips are attributed to the window containing their midpoint; dwell gaps
/// between consecutive trips of a vehicle on the same day likewise. `lambda`
/// is the day-averaged count of distinct vehicles whose service span
/// (first departure to last arrival) overlaps the window. Windows with no trip
/// copy `T_s`/`T_a` from the nearest observed window and are flagged.
pub fn estimate_line_params(trips: &[BusTrip], line_ids: &[String], horizon: &Horizon) -> LineEstimates {
    let nt = horizon.n_windows;
    let wh = horizon.window_hours;
    let all_days: BTreeSet<i64> = trips.iter().map(|t| t.day).collect();
    let n_days = all_days.len().max(1) as f64;
    let mut by_line: BTreeMap<&str, Vec<&BusTrip>> = BTreeMap::new();
    for trip in trips {
        by_line.entry(trip.line.as_str()).or_default().push(trip);
    }
    let window_of = |offset: f64| -> Option<usize> {
        let t = (offset / wh).floor();
        (t >= 0.0 && (t as usize) < nt).then_some(t as usize)
    };
    let mut result = LineEstimates::default();
    for id in line_ids {
        let Some(line_trips) = by_line.get(id.as_str()) else {
            result.unobserved.push(id.clone());
            continue;
        };
        let mut service_sum = vec![0.0; nt];
        let mut service_n = vec![0usize; nt];
        let mut dwell_sum = vec![0.0; nt];
        let mut dwell_n = vec![0usize; nt];
        let mut in_service = vec![0.0; nt];
        let mut per_vehicle_day: BTreeMap<(&str, i64), Vec<(f64, f64)>> = BTreeMap::new();
        for trip in line_trips {
            let s = horizon_offset(horizon, trip.start_hour);
            let e = s + (trip.end_hour - trip.start_hour).max(0.0);
            if let Some(t) = window_of(0.5 * (s + e)) {
                service_sum[t] += e - s;
                service_n[t] += 1;
            }
            per_vehicle_day.entry((trip.vehicle.as_str(), trip.day)).or_default().push((s, e));
        }
        let vehicles: BTreeSet<&str> = line_trips.iter().map(|t| t.vehicle.as_str()).collect();
        for spans in per_vehicle_day.values_mut() {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in spans.windows(2) {
                let gap = (pair[1].0 - pair[0].1).max(0.0);
                if let Some(t) = window_of(pair[0].1 + 0.5 * gap) {
                    dwell_sum[t] += gap;
                    dwell_n[t] += 1;
                }
            }
            let first = spans.first().unwrap().0;
            let last = spans.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            for (t, slot) in in_service.iter_mut().enumerate() {
                let (ws, we) = (t as f64 * wh, (t + 1) as f64 * wh);
                if first < we && last > ws {
                    *slot += 1.0;
                }
            }
        }
        in_service.iter_mut().for_each(|x| *x /= n_days);

        let mut synthetic = vec![false; nt];
        let mut ts: Vec<Option<f64>> =
            (0..nt).map(|t| (service_n[t] > 0).then(|| service_sum[t] / service_n[t] as f64)).collect();
        let mut ta: Vec<Option<f64>> =
            (0..nt).map(|t| (dwell_n[t] > 0).then(|| dwell_sum[t] / dwell_n[t] as f64)).collect();
        let mut ta_synthetic = vec![false; nt];
        fill_from_nearest(&mut ts, &mut synthetic);
        fill_from_nearest(&mut ta, &mut ta_synthetic);
        for t in 0..nt {
            synthetic[t] |= ta_synthetic[t];
        }
        result.estimates.push(LineEstimate {
            line: id.clone(),
            service_time: ts.into_iter().map(Option::unwrap).collect(),
            turnaround_time: ta.into_iter().map(Option::unwrap).collect(),
            in_service,
            synthetic,
            observed_fleet: vehicles.len() as u64,
        });
    }
    result
}

/// Reads trips `line_id, vehicle_id, day, start_hour, end_hour`.
pub fn read_bus_trips(path: &Path) -> Result<Vec<BusTrip>> {
    let table = Table::read(path)?;
    let line = table.require(&["line_id", "line"])?;
    let vehicle = table.require(&["vehicle_id", "vehicle", "bus_id"])?;
    let day = table.require(&["day", "day_id"])?;
    let start = table.require(&["start_hour", "start"])?;
    let end = table.require(&["end_hour", "end"])?;
    let mut trips = Vec::with_capacity(table.rows.len());
    for r in 0..table.rows.len() {
        let day_raw = table.str_at(r, day);
        trips.push(BusTrip {
            line: table.str_at(r, line).to_string(),
            vehicle: table.str_at(r, vehicle).to_string(),
            day: day_raw.parse().map_err(|_| DscError::parse(path, format!("row {}: bad day {day_raw:?}", r + 2)))?,
            start_hour: table.f64_at(r, start)?,
            end_hour: table.f64_at(r, end)?,
        });
    }
    Ok(trips)
}

pub fn write_bus_trips(path: &Path, trips: &[BusTrip]) -> Result<()> {
    let mut out = CsvOut::create(path, &["line_id", "vehicle_id", "day", "start_hour", "end_hour"])?;
    for t in trips {
        out.row([t.line.clone(), t.vehicle.clone(), t.day.to_string(), fmt_num(t.start_hour), fmt_num(t.end_hour)])?;
    }
    out.finish()
}

/// Per-(line, window) parameter triple, as stored in override files.
#[derive(Debug, Clone, PartialEq)]
pub struct LineParamRow {
    pub line: String,
    pub window: usize,
    pub service_time: f64,
    pub turnaround_time: f64,
    pub in_service: f64,
}

pub fn read_line_params(path: &Path) -> Result<Vec<LineParamRow>> {
    let table = Table::read(path)?;
    let line = table.require(&["line_id", "line"])?;
    let window = table.require(&["window", "window_id"])?;
    let ts = table.require(&["service_time", "t_s"])?;
    let ta = table.require(&["turnaround_time", "t_a"])?;
    let lambda = table.require(&["in_service", "lambda"])?;
    (0..table.rows.len())
        .map(|r| {
            Ok(LineParamRow {
                line: table.str_at(r, line).to_string(),
                window: table.usize_at(r, window)?,
                service_time: table.f64_at(r, ts)?,
                turnaround_time: table.f64_at(r, ta)?,
                in_service: table.f64_at(r, lambda)?,
            })
        })
        .collect()
}

pub fn write_line_params(path: &Path, lines: &[BusLine]) -> Result<()> {
    let mut out = CsvOut::create(path, &["line_id", "window", "service_time", "turnaround_time", "in_service"])?;
    for l in lines {
        for t in 0..l.n_windows() {
            out.row([
                l.id.clone(),
                t.to_string(),
                fmt_num(l.service_time[t]),
                fmt_num(l.turnaround_time[t]),
                fmt_num(l.in_service[t]),
            ])?;
        }
    }
    out.finish()
}

/// Applies parameter rows onto lines, matched by id. Rows naming unknown lines are an error.
pub fn apply_line_params(lines: &mut [BusLine], rows: &[LineParamRow]) -> Result<()> {
    for row in rows {
        let line = lines
            .iter_mut()
            .find(|l| l.id == row.line)
            .ok_or_else(|| DscError::InvalidScenario(format!("parameters given for unknown line {}", row.line)))?;
        if row.window >= line.n_windows() {
            return Err(DscError::InvalidLine {
                line: row.line.clone(),
                reason: format!("window {} out of range", row.window),
            });
        }
        line.service_time[row.window] = row.service_time;
        line.turnaround_time[row.window] = row.turnaround_time;
        line.in_service[row.window] = row.in_service;
        if let Some(s) = line.synthetic.get_mut(row.window) {
            *s = false;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(id: &str, grids: &[usize], fleet: u64, ts: f64, ta: f64, lambda: f64, nt: usize) -> BusLine {
        BusLine {
            id: id.into(),
            route_grids: grids.iter().map(|&g| GridIndex(g)).collect(),
            fleet_size: fleet,
            service_time: vec![ts; nt],
            turnaround_time: vec![ta; nt],
            in_service: vec![lambda; nt],
            synthetic: vec![false; nt],
        }
    }

    #[test]
    fn intensity_examples() {
        let full = line("a", &[0], 8, 1.0, 0.0, 8.0, 1);
        assert_eq!(service_intensity(&full, TimeIndex(0)).unwrap(), 1.0);
        let idle = line("b", &[0], 8, 1.0, 0.0, 0.0, 1);
        assert_eq!(service_intensity(&idle, TimeIndex(0)).unwrap(), 0.0);
        let part = line("c", &[0], 8, 1.0, 0.0, 5.0, 1);
        assert_eq!(service_intensity(&part, TimeIndex(0)).unwrap(), 0.625);
        let empty = line("d", &[0], 0, 1.0, 0.0, 0.0, 1);
        assert!(matches!(service_intensity(&empty, TimeIndex(0)), Err(DscError::InvalidLine { .. })));
    }

    #[test]
    fn coverage_examples() {
        let l = line("a", &[1], 8, 0.75, 0.25, 4.0, 1);
        let inc = BusIncidence::from_lines(std::slice::from_ref(&l), 3);
        assert!(bus_coverage(std::slice::from_ref(&l), &inc, &[0.0], 1).unwrap().is_zero());
        let f = bus_coverage(std::slice::from_ref(&l), &inc, &[4.0], 1).unwrap();
        assert_relative_eq!(f.get(1, 0), 2.0);
        assert_eq!(f.get(0, 0), 0.0);

        // two identical lines contributing 1.5 each
        let l = line("a", &[0, 1], 4, 1.0, 0.0, 2.0, 1);
        let both = vec![l.clone(), BusLine { id: "b".into(), ..l }];
        let inc = BusIncidence::from_lines(&both, 3);
        let f = bus_coverage(&both, &inc, &[3.0, 3.0], 1).unwrap();
        assert_relative_eq!(f.get(0, 0), 3.0);
        assert_eq!(f.get(2, 0), 0.0);

        assert!(matches!(bus_coverage(&both, &inc, &[5.0, 0.0], 1), Err(DscError::BoundViolation(_))));
        let zero_trip = line("z", &[0], 4, 0.0, 0.0, 2.0, 1);
        let inc = BusIncidence::from_lines(std::slice::from_ref(&zero_trip), 1);
        assert!(bus_coverage(std::slice::from_ref(&zero_trip), &inc, &[1.0], 1).is_err());
    }

    #[test]
    fn coverage_linear_and_scales_with_intensity() {
        let lines = vec![line("a", &[0, 2], 10, 0.5, 0.1, 3.0, 2), line("b", &[2, 3], 6, 0.8, 0.2, 2.0, 2)];
        let inc = BusIncidence::from_lines(&lines, 4);
        let f1 = bus_coverage(&lines, &inc, &[1.0, 2.0], 2).unwrap();
        let f2 = bus_coverage(&lines, &inc, &[3.0, 1.0], 2).unwrap();
        let f12 = bus_coverage(&lines, &inc, &[4.0, 3.0], 2).unwrap();
        for (a, b) in f1.plus(&f2).unwrap().values().iter().zip(f12.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert!((0..2).all(|t| f12.get(1, t) == 0.0));

        let mut doubled = lines.clone();
        doubled[0].in_service = vec![6.0; 2];
        let base = bus_coverage(&lines, &inc, &[2.0, 0.0], 2).unwrap();
        let more = bus_coverage(&doubled, &inc, &[2.0, 0.0], 2).unwrap();
        assert_relative_eq!(more.get(0, 1), 2.0 * base.get(0, 1), epsilon = 1e-12);
    }

    #[test]
    fn validation_catches_bad_lines() {
        assert!(line("a", &[], 4, 1.0, 0.0, 1.0, 1).validate(2, 1).is_err());
        assert!(line("a", &[0], 4, 1.0, 0.0, 5.0, 1).validate(2, 1).is_err());
        assert!(line("a", &[0], 4, 0.0, 0.0, 1.0, 1).validate(2, 1).is_err());
        assert!(line("a", &[0], 4, 0.0, 0.0, 0.0, 1).validate(2, 1).is_ok());
        assert!(line("a", &[3], 4, 1.0, 0.0, 1.0, 1).validate(2, 1).is_err());
    }

    #[test]
    fn rasterize_horizontal_and_diagonal() {
        let grid = GridSpec::planar(4, 4, 1.0);
        let cells = rasterize_polyline(&grid, &[(0.5, 0.5), (3.5, 0.5)]);
        assert_eq!(cells, vec![GridIndex(0), GridIndex(1), GridIndex(2), GridIndex(3)]);
        // shallow diagonal enters every cell it touches
        let cells = rasterize_polyline(&grid, &[(0.2, 0.1), (2.8, 1.9)]);
        assert_eq!(cells.first(), Some(&GridIndex(0)));
        assert_eq!(cells.last(), Some(&GridIndex(6)));
        for w in cells.windows(2) {
            assert_eq!(grid.chebyshev(w[0], w[1]), 1);
        }
        // an L-shaped polyline, partly outside the lattice
        let cells = rasterize_polyline(&grid, &[(0.5, 0.5), (0.5, 2.5), (5.0, 2.5)]);
        assert_eq!(cells, vec![GridIndex(0), GridIndex(4), GridIndex(8), GridIndex(9), GridIndex(10), GridIndex(11)]);
    }

    #[test]
    fn timetable_is_recovered_exactly() {
        // each bus repeats 0.5 h trips with 0.1 h turnarounds from 8:00 to 20:00
        let horizon = Horizon::new(12, 1.0, 8.0);
        let mut trips = Vec::new();
        for day in 0..2 {
            for bus in 0..3 {
                let mut t = 8.0 + 0.2 * bus as f64;
                while t + 0.5 <= 20.0 {
                    trips.push(BusTrip {
                        line: "L1".into(),
                        vehicle: format!("b{bus}"),
                        day,
                        start_hour: t,
                        end_hour: t + 0.5,
                    });
                    t += 0.6;
                }
            }
        }
        let est = estimate_line_params(&trips, &["L1".into(), "L2".into()], &horizon);
        assert_eq!(est.unobserved, vec!["L2".to_string()]);
        let e = &est.estimates[0];
        assert!(e.service_time.iter().all(|x| (x - 0.5).abs() < 1e-9));
        // dwells attributed by midpoint; every window sees some
        assert!(e.turnaround_time.iter().all(|x| (x - 0.1).abs() < 1e-9), "{:?}", e.turnaround_time);
        assert!(e.in_service.iter().all(|x| (x - 3.0).abs() < 1e-12));
        assert_eq!(e.observed_fleet, 3);
    }

    #[test]
    fn empty_window_copies_nearest() {
        let horizon = Horizon::new(4, 1.0, 0.0);
        let trips = vec![
            BusTrip { line: "a".into(), vehicle: "x".into(), day: 0, start_hour: 0.1, end_hour: 0.5 },
            BusTrip { line: "a".into(), vehicle: "x".into(), day: 0, start_hour: 0.6, end_hour: 0.9 },
        ];
        let est = estimate_line_params(&trips, &["a".into()], &horizon);
        let e = &est.estimates[0];
        assert_eq!(e.in_service[2], 0.0);
        assert!(e.synthetic[2] && !e.synthetic[0]);
        assert_relative_eq!(e.service_time[3], e.service_time[0]);
        assert_relative_eq!(e.service_time[0], 0.35, epsilon = 1e-12);
    }

    #[test]
    fn parameter_overrides_apply() {
        let mut lines = vec![line("a", &[0], 4, 1.0, 0.0, 1.0, 2)];
        let rows = vec![LineParamRow {
            line: "a".into(),
            window: 1,
            service_time: 0.4,
            turnaround_time: 0.1,
            in_service: 2.0,
        }];
        apply_line_params(&mut lines, &rows).unwrap();
        assert_eq!(lines[0].in_service, vec![1.0, 2.0]);
        let bad = vec![LineParamRow { line: "zz".into(), ..rows[0].clone() }];
        assert!(apply_line_params(&mut lines, &bad).is_err());
    }
}

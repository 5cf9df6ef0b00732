//! Delimited-text result tables for external plotting.

use std::path::{Path, PathBuf};

use super::transfer::{Regression, TransferStudy};
use crate::error::{DscError, Result};
use crate::joint::{DscSolution, JointProblem, SweepTable};
use crate::model::{twsu_and_tag, CoverageField};
use crate::textio::{fmt_num, CsvOut, Table};

/// KL as written to disk: a number, `inf`, or `undefined` when nothing is covered.
pub fn kl_text(kl: Option<f64>) -> String {
    kl.map(fmt_num).unwrap_or_else(|| "undefined".into())
}

fn flag(b: bool) -> String {
    b.to_string()
}

pub const SUMMARY_HEADER: [&str; 15] = [
    "combo",
    "budget",
    "phi",
    "kl",
    "n_taxi",
    "bus_sensors",
    "n_dv",
    "taxi_cost",
    "bus_cost",
    "dv_cost",
    "spent",
    "unspent",
    "relaxed_phi",
    "converged",
    "cap_breached",
];

pub fn write_summary(path: &Path, solutions: &[&DscSolution], problem: &JointProblem) -> Result<()> {
    let c = problem.taxi_bus.costs;
    let mut out = CsvOut::create(path, &SUMMARY_HEADER)?;
    for s in solutions {
        out.row([
            s.combo.name().to_string(),
            fmt_num(s.budget),
            fmt_num(s.phi),
            kl_text(s.kl),
            s.n_taxi.to_string(),
            s.bus_sensors().to_string(),
            s.n_dv.to_string(),
            fmt_num(c.taxi * s.n_taxi as f64),
            fmt_num(c.bus * s.bus_sensors() as f64),
            fmt_num(c.dv * s.n_dv as f64),
            fmt_num(s.spent),
            fmt_num(s.budget - s.spent),
            fmt_num(s.relaxed_phi),
            flag(s.converged),
            flag(s.cap_breached),
        ])?;
    }
    out.finish()
}

/// Per-grid time-weighted utility and average gap to the target, in percent.
pub fn write_grid_metrics(path: &Path, solution: &DscSolution, problem: &JointProblem) -> Result<()> {
    let tb = &problem.taxi_bus;
    let metrics = twsu_and_tag(&solution.total_field()?, &tb.weights, &tb.params)?;
    let mut out = CsvOut::create(path, &["grid_id", "weight", "twsu", "tag_percent", "excluded_windows"])?;
    for (g, m) in metrics.iter().enumerate() {
        out.row([
            g.to_string(),
            fmt_num(tb.weights.spatial()[g]),
            fmt_num(m.twsu),
            m.tag.map(fmt_num).unwrap_or_else(|| "undefined".into()),
            m.excluded_windows.to_string(),
        ])?;
    }
    out.finish()
}

/// Coverage per fleet and in total, by grid then window.
pub fn write_fields(path: &Path, solution: &DscSolution) -> Result<()> {
    let total = solution.total_field()?;
    let mut out = CsvOut::create(path, &["grid_id", "window", "taxi", "bus", "dv", "total"])?;
    for g in 0..total.n_grids() {
        for t in 0..total.n_windows() {
            out.row([
                g.to_string(),
                t.to_string(),
                fmt_num(solution.taxi_field.get(g, t)),
                fmt_num(solution.bus_field.get(g, t)),
                fmt_num(solution.dv_field.get(g, t)),
                fmt_num(total.get(g, t)),
            ])?;
        }
    }
    out.finish()
}

/// The `total` column of a fields table.
pub fn read_total_field(path: &Path, n_grids: usize, n_windows: usize) -> Result<CoverageField> {
    let table = Table::read(path)?;
    let (g, t, v) = (table.require(&["grid_id"])?, table.require(&["window"])?, table.require(&["total"])?);
    let mut field = CoverageField::zeros(n_grids, n_windows);
    for r in 0..table.rows.len() {
        let (gi, ti) = (table.usize_at(r, g)?, table.usize_at(r, t)?);
        if gi >= n_grids || ti >= n_windows {
            return Err(DscError::parse(path, format!("row {}: cell ({gi}, {ti}) out of range", r + 2)));
        }
        field.set(gi, ti, table.f64_at(r, v)?);
    }
    Ok(field)
}

pub fn write_bus_allocation(path: &Path, solution: &DscSolution, problem: &JointProblem) -> Result<()> {
    let mut out = CsvOut::create(path, &["line_id", "fleet_size", "sensors", "route_grids"])?;
    for (line, y) in problem.taxi_bus.lines.iter().zip(&solution.y) {
        out.row([line.id.clone(), line.fleet_size.to_string(), y.to_string(), line.route_grids.len().to_string()])?;
    }
    out.finish()
}

/// Node sequence of every DV route with arrival times in hours from departure.
pub fn write_dv_routes(path: &Path, solution: &DscSolution, problem: &JointProblem) -> Result<()> {
    let mut out = CsvOut::create(path, &["dv", "seq", "node_id", "grid_id", "arrival_h"])?;
    if let Some(dv) = &problem.dv {
        for (k, route) in solution.dv_routes.iter().enumerate() {
            let times = route.nroute.arrival_times(&dv.network)?;
            for (i, (&v, t)) in route.nroute.nodes.iter().zip(times).enumerate() {
                let grid = dv.map.grid_of(v).map(|g| g.0.to_string()).unwrap_or_default();
                out.row([k.to_string(), i.to_string(), dv.network.nodes()[v].id.clone(), grid, fmt_num(t)])?;
            }
        }
    }
    out.finish()
}

/// Budget-sweep curves; header only when the sweep is empty.
pub fn write_sweep(path: &Path, sweep: &SweepTable) -> Result<()> {
    let mut out =
        CsvOut::create(path, &["combo", "budget", "phi", "kl", "n_taxi", "bus_sensors", "n_dv", "spent", "carried"])?;
    for r in &sweep.rows {
        out.row([
            r.combo.name().to_string(),
            fmt_num(r.budget),
            fmt_num(r.phi),
            kl_text(r.kl),
            r.n_taxi.to_string(),
            r.bus_sensors.to_string(),
            r.n_dv.to_string(),
            fmt_num(r.spent),
            flag(r.carried),
        ])?;
    }
    out.finish()
}

/// Power-law fits `phi = a M^beta + b` per combination.
pub fn write_fits(path: &Path, sweep: &SweepTable) -> Result<()> {
    let mut out = CsvOut::create(path, &["combo", "a", "b", "r2"])?;
    for f in &sweep.fits {
        out.row([f.combo.name().to_string(), fmt_num(f.a), fmt_num(f.b), fmt_num(f.r2)])?;
    }
    out.finish()
}

pub fn write_transfer(path: &Path, study: &TransferStudy) -> Result<()> {
    let mut out = CsvOut::create(
        path,
        &[
            "variant",
            "fraction",
            "lines",
            "w_taxi",
            "w_bus",
            "w_taxi_bus",
            "phi_taxi",
            "phi_bus",
            "phi_taxi_bus",
            "sci_diff_vs_taxi",
            "gain_vs_taxi",
            "sci_diff_vs_bus",
            "gain_vs_bus",
        ],
    )?;
    for r in &study.rows {
        let (a, b) = r.versus_taxi();
        let (c, d) = r.versus_bus();
        out.row([
            r.variant.to_string(),
            fmt_num(r.fraction),
            r.lines.to_string(),
            fmt_num(r.w_taxi),
            fmt_num(r.w_bus),
            fmt_num(r.w_taxi_bus),
            fmt_num(r.phi_taxi),
            fmt_num(r.phi_bus),
            fmt_num(r.phi_taxi_bus),
            fmt_num(a),
            fmt_num(b),
            fmt_num(c),
            fmt_num(d),
        ])?;
    }
    out.finish()
}

pub fn write_regression(path: &Path, regressions: &[Regression]) -> Result<()> {
    let mut out = CsvOut::create(path, &["regression", "points", "slope", "intercept", "r2"])?;
    for r in regressions {
        out.row([r.name.clone(), r.points.to_string(), fmt_num(r.slope), fmt_num(r.intercept), fmt_num(r.r2)])?;
    }
    out.finish()
}

/// Writes summary, per-grid metrics, fields, bus allocation and DV routes of
/// one solution into `dir`, returning the written paths.
pub fn export_solution(dir: &Path, solution: &DscSolution, problem: &JointProblem) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| DscError::io(dir, e))?;
    let paths: Vec<PathBuf> = ["summary.csv", "grid_metrics.csv", "fields.csv", "bus_allocation.csv", "dv_routes.csv"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_summary(&paths[0], &[solution], problem)?;
    write_grid_metrics(&paths[1], solution, problem)?;
    write_fields(&paths[2], solution)?;
    write_bus_allocation(&paths[3], solution, problem)?;
    write_dv_routes(&paths[4], solution, problem)?;
    Ok(paths)
}

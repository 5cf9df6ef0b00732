use std::path::Path;

use approx::assert_relative_eq;

use super::*;
use crate::error::DscError;
use crate::joint::{solve_dsc, SweepTable};
use crate::model::stwsu;
use crate::taxi::{fit_p, FitOptions};

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const MINIMAL: &str = "[grid]\ncols = 2\nrows = 2\n\n[costs]\ntaxi = 1\nbus = 1\ndv = 5\nbudget = 10\n";

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        cols: 4,
        rows: 4,
        n_windows: 2,
        n_lines: 2,
        vehicles: 60,
        days: 3,
        cost_taxi: 1.0,
        cost_bus: 1.0,
        cost_dv: 6.0,
        budget: 20.0,
        ..SyntheticSpec::default()
    }
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn minimal_config_applies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", MINIMAL);
    let s = load_scenario(&dir.path().join("s.toml")).unwrap();
    assert_eq!(s.n_grids(), 4);
    assert_eq!(s.n_windows(), 12);
    assert_eq!(s.horizon.start_hour, 8.0);
    assert_eq!(s.params.beta, DEFAULT_BETA);
    assert!(s.lines.is_empty() && s.dv.is_none());
    assert_eq!(s.solver.dv_cap, 16);
    assert_eq!(s.transfer.percentile, 0.6);
    assert!(s.weights.spatial().iter().all(|w| (w - 0.25).abs() < 1e-12));
    assert!(s.warnings.is_empty());
}

#[test]
fn unnormalized_weights_load_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.csv", "grid_id,weight\n0,1\n1,2\n2,3\n3,4\n");
    write(dir.path(), "s.toml", &format!("{MINIMAL}\n[weights]\nspatial_file = \"w.csv\"\n"));
    let s = load_scenario(&dir.path().join("s.toml")).unwrap();
    assert_relative_eq!(s.weights.spatial()[3], 0.4, epsilon = 1e-12);
    assert!(s.warnings.iter().any(|w| w.contains("renormalized")));
}

#[test]
fn missing_trace_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", &format!("{MINIMAL}\n[taxi]\ntraces = \"nowhere.csv\"\n"));
    let err = load_scenario(&dir.path().join("s.toml")).unwrap_err();
    assert!(matches!(err, DscError::MissingFile(_)));
    assert!(err.to_string().contains("nowhere.csv"));
}

#[test]
fn schema_violations_are_rejected_with_field_names() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.toml", &format!("{MINIMAL}\n[utility]\nbeta = 0.5\nzeta = 3\n"));
    assert!(load_scenario(&dir.path().join("a.toml")).unwrap_err().to_string().contains("beta or zeta"));
    write(dir.path(), "b.toml", &MINIMAL.replace("budget = 10", "budget = 10\nbogus = 1"));
    assert!(load_scenario(&dir.path().join("b.toml")).unwrap_err().to_string().contains("bogus"));
    write(dir.path(), "c.toml", &MINIMAL.replace("taxi = 1", "taxi = 0"));
    assert!(load_scenario(&dir.path().join("c.toml")).unwrap_err().to_string().contains("taxi cost"));
    write(dir.path(), "w.csv", "grid_id,weight\n0,-1\n");
    write(dir.path(), "d.toml", &format!("{MINIMAL}\n[weights]\nspatial_file = \"w.csv\"\n"));
    assert!(load_scenario(&dir.path().join("d.toml")).is_err());
}

#[test]
fn zeta_calibrates_beta_from_weight_ratio() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.csv", "grid_id,weight\n0,1\n1,2\n2,2\n3,2\n");
    write(dir.path(), "s.toml", &format!("{MINIMAL}\n[weights]\nspatial_file = \"w.csv\"\n[utility]\nzeta = 4\n"));
    let s = load_scenario(&dir.path().join("s.toml")).unwrap();
    assert_relative_eq!(s.params.beta, 0.5, epsilon = 1e-12);
}

#[test]
fn day_night_profile_quadruples_day_windows() {
    let h = crate::grid::Horizon::new(24, 1.0, 0.0);
    let cfg = WeightsConfig { profile: TemporalProfile::DayNight, ..WeightsConfig::default() };
    let t = temporal_weights(&cfg, &h);
    assert_eq!(t[7], 1.0);
    assert_eq!(t[8], 4.0);
    assert_eq!(t[19], 4.0);
    assert_eq!(t[20], 1.0);
}

#[test]
fn synthetic_generation_is_byte_identical_per_seed() {
    let spec = SyntheticSpec { n_lines: 1, ..small_spec(7) };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_synthetic(&spec).unwrap().write(a.path()).unwrap();
    generate_synthetic(&spec).unwrap().write(b.path()).unwrap();
    assert_eq!(dir_files(a.path()), dir_files(b.path()));
    let c = tempfile::tempdir().unwrap();
    generate_synthetic(&small_spec(8)).unwrap().write(c.path()).unwrap();
    assert_ne!(dir_files(a.path()), dir_files(c.path()));
}

#[test]
fn synthetic_bundle_loads_and_matches_ground_truth_structure() {
    let bundle = generate_synthetic(&small_spec(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = bundle.write(dir.path()).unwrap();
    let loaded = load_scenario(&path).unwrap();
    let direct = bundle.scenario().unwrap();
    assert!(loaded.warnings.is_empty(), "{:?}", loaded.warnings);
    assert_eq!(loaded.lines.len(), direct.lines.len());
    for (a, b) in loaded.lines.iter().zip(&direct.lines) {
        assert_eq!((&a.id, &a.route_grids, &a.synthetic), (&b.id, &b.route_grids, &b.synthetic));
        for (x, y) in
            a.service_time.iter().chain(&a.turnaround_time).zip(b.service_time.iter().chain(&b.turnaround_time))
        {
            assert!((x - y).abs() < 1e-7);
        }
        assert_eq!(a.in_service, b.in_service);
    }
    assert_eq!(loaded.taxi.fleet_bound, 60);
    let (w1, w2) = (loaded.weights.spatial(), direct.weights.spatial());
    assert!(w1.iter().zip(w2).all(|(a, b)| (a - b).abs() < 1e-8));
    let hi = direct.weights.spatial().iter().copied().fold(0.0, f64::max);
    let lo = direct.weights.spatial().iter().copied().fold(1.0, f64::min);
    assert_relative_eq!(hi / lo, 2.35, epsilon = 1e-9);
    let dv = loaded.dv.as_ref().unwrap();
    assert_eq!(dv.network.n_unroutable(), 0);
    assert_eq!(dv.op_windows, vec![0, 1]);
    for line in &loaded.lines {
        assert!(line.route_grids.len() >= 2);
        assert!(line.synthetic.iter().all(|s| !s));
    }
}

#[test]
fn generated_traces_recover_ground_truth_at_1000_vehicles() {
    let spec = SyntheticSpec {
        cols: 3,
        rows: 3,
        n_windows: 2,
        n_lines: 0,
        vehicles: 1000,
        days: 31,
        dv: false,
        ..small_spec(11)
    };
    let bundle = generate_synthetic(&spec).unwrap();
    let fitted = fit_p(&bundle.traces, &FitOptions { seed: 1, ..FitOptions::default() }).unwrap();
    let worst = fitted.p_values().iter().zip(bundle.truth.p_values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.02, "worst error {worst}");
}

#[test]
fn zero_bus_lines_give_empty_line_file_and_valid_scenario() {
    let spec = SyntheticSpec { n_lines: 0, ..small_spec(5) };
    let dir = tempfile::tempdir().unwrap();
    let path = generate_synthetic(&spec).unwrap().write(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("bus_lines.csv")).unwrap();
    assert_eq!(text.trim(), "line_id,fleet_size");
    let s = load_scenario(&path).unwrap();
    assert!(s.lines.is_empty());
    s.joint_problem().unwrap();
}

#[test]
fn degradation_removes_the_ceiling_of_the_fraction() {
    let spec = SyntheticSpec { n_lines: 10, ..small_spec(2) };
    let s = generate_synthetic(&spec).unwrap().scenario().unwrap();
    assert_eq!(degrade_bus_network(&s, 0.0, 1).unwrap().lines, s.lines);
    assert!(degrade_bus_network(&s, 1.0, 1).unwrap().lines.is_empty());
    assert_eq!(degrade_bus_network(&s, 0.5, 1).unwrap().lines.len(), 5);
    assert_eq!(degrade_bus_network(&s, 0.31, 1).unwrap().lines.len(), 6);
    assert_eq!(degrade_bus_network(&s, 0.5, 9).unwrap().lines, degrade_bus_network(&s, 0.5, 9).unwrap().lines);
    assert!(degrade_bus_network(&s, 1.5, 1).is_err());
}

#[test]
fn save_then_load_reproduces_the_scenario() {
    let s = generate_synthetic(&small_spec(4)).unwrap().scenario().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let back = load_scenario(&save_scenario(&s, dir.path()).unwrap()).unwrap();
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8 * x.abs().max(1.0))
    };
    assert_eq!(back.grid, s.grid);
    assert_eq!(back.horizon, s.horizon);
    assert_eq!(back.params, s.params);
    assert_eq!(back.costs, s.costs);
    assert!(close(back.weights.spatial(), s.weights.spatial()));
    assert!(close(back.weights.temporal(), s.weights.temporal()));
    assert!(close(back.taxi.p_values(), s.taxi.p_values()));
    assert_eq!(back.taxi.fleet_bound, s.taxi.fleet_bound);
    assert_eq!(back.lines.len(), s.lines.len());
    for (a, b) in back.lines.iter().zip(&s.lines) {
        assert_eq!((&a.id, &a.route_grids, a.fleet_size), (&b.id, &b.route_grids, b.fleet_size));
        assert!(close(&a.service_time, &b.service_time) && close(&a.in_service, &b.in_service));
        assert!(close(&a.turnaround_time, &b.turnaround_time));
    }
    let (da, db) = (back.dv.as_ref().unwrap(), s.dv.as_ref().unwrap());
    assert_eq!((da.network.n_nodes(), da.network.edges().len()), (db.network.n_nodes(), db.network.edges().len()));
    assert_eq!((&da.op_windows, da.trip_hours, &da.router), (&db.op_windows, db.trip_hours, &db.router));
    assert_eq!(back.solver, s.solver);
    assert_eq!(back.transfer, s.transfer);
    // a second save of the reloaded scenario writes the same configuration
    let again = tempfile::tempdir().unwrap();
    save_scenario(&back, again.path()).unwrap();
    let cfg = |d: &Path| std::fs::read_to_string(d.join("scenario.toml")).unwrap();
    assert_eq!(cfg(dir.path()), cfg(again.path()));
}

#[test]
fn joint_weight_scenarios_round_trip() {
    let mut s = generate_synthetic(&small_spec(6)).unwrap().scenario().unwrap();
    let td = crate::model::target_distribution(&s.weights, &s.params).unwrap();
    s.weights = crate::model::ptd_to_weights(&td, &s.params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let back = load_scenario(&save_scenario(&s, dir.path()).unwrap()).unwrap();
    let (a, b) = (back.weights.joint().unwrap(), s.weights.joint().unwrap());
    assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9));
}

#[test]
fn exported_fields_reproduce_exported_phi() {
    let s = generate_synthetic(&small_spec(1)).unwrap().scenario().unwrap();
    let problem = s.joint_problem().unwrap();
    let sol = solve_dsc(&problem, s.costs.budget).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = export_solution(dir.path(), &sol, &problem).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    let field = read_total_field(&dir.path().join("fields.csv"), s.n_grids(), s.n_windows()).unwrap();
    let phi = stwsu(&field, &s.weights, &s.params).unwrap();
    let summary = crate::textio::Table::read(&dir.path().join("summary.csv")).unwrap();
    let written = summary.f64_at(0, summary.require(&["phi"]).unwrap()).unwrap();
    assert_relative_eq!(phi, written, max_relative = 1e-7);
    let alloc = std::fs::read_to_string(dir.path().join("bus_allocation.csv")).unwrap();
    assert_eq!(alloc.lines().count(), s.lines.len() + 1);
}

#[test]
fn empty_sweep_writes_header_only_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    write_sweep(&dir.path().join("sweep.csv"), &SweepTable::default()).unwrap();
    write_fits(&dir.path().join("fits.csv"), &SweepTable::default()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("combo,budget,phi"));
    assert_eq!(std::fs::read_to_string(dir.path().join("fits.csv")).unwrap().lines().count(), 1);
}

#[test]
fn regression_on_linear_pairs_has_unit_r2() {
    let pairs: Vec<(f64, f64)> = (0..8).map(|i| (i as f64 * 0.1, 3.0 * i as f64 * 0.1 - 0.25)).collect();
    let r = Regression::fit("linear", &pairs).unwrap();
    assert_relative_eq!(r.slope, 3.0, epsilon = 1e-12);
    assert_relative_eq!(r.intercept, -0.25, epsilon = 1e-12);
    assert_relative_eq!(r.r2, 1.0, epsilon = 1e-12);
    let with_nan = [pairs.clone(), vec![(f64::INFINITY, 1.0), (f64::NAN, 0.0)]].concat();
    assert_eq!(Regression::fit("x", &with_nan).unwrap().points, 8);
    let dir = tempfile::tempdir().unwrap();
    write_regression(&dir.path().join("r.csv"), &[r]).unwrap();
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "linear,8,3,-0.25,1");
}

#[test]
fn infinite_kl_is_written_as_inf() {
    assert_eq!(kl_text(Some(f64::INFINITY)), "inf");
    assert_eq!(kl_text(None), "undefined");
    assert_eq!(kl_text(Some(0.125)), "0.125");
}

#[test]
fn transfer_study_produces_one_row_per_variant() {
    let spec = SyntheticSpec { n_lines: 6, dv: false, ..small_spec(12) };
    let s = generate_synthetic(&spec).unwrap().scenario().unwrap();
    let study = transfer_study(&s, 4, s.costs.budget).unwrap();
    assert_eq!(study.rows.len(), 4);
    assert_eq!(study.rows[0].lines, 6);
    assert_eq!(study.rows[3].fraction, 0.9);
    for r in &study.rows {
        assert!(r.phi_taxi_bus >= r.phi_taxi.max(r.phi_bus) - 1e-6);
        assert!(r.w_taxi_bus >= r.w_taxi.max(r.w_bus) - 1e-12);
    }
    let dir = tempfile::tempdir().unwrap();
    write_transfer(&dir.path().join("t.csv"), &study).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap().lines().count(), 5);
    assert_eq!(variant_fractions(1, 0.9), vec![0.0]);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsc")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A small synthetic bundle in a fresh directory.
fn bundle(seed: u64) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let seed = seed.to_string();
    let out = dsc(&[
        "generate",
        "--out",
        p(dir.path()),
        "--seed",
        &seed,
        "--cols",
        "4",
        "--rows",
        "4",
        "--windows",
        "2",
        "--lines",
        "3",
        "--vehicles",
        "40",
        "--days",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scenario = dir.path().join("scenario.toml");
    (dir, scenario)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&f).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn solve_writes_solution_files_and_exits_zero() {
    let (dir, scenario) = bundle(1);
    let out_dir = dir.path().join("sol");
    let out =
        dsc(&["solve", "--scenario", p(&scenario), "--combo", "taxi+bus", "--budget", "6e5", "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary.csv", "grid_metrics.csv", "fields.csv", "bus_allocation.csv", "dv_routes.csv"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "taxi+bus");
    assert_eq!(row[1], "600000");
    let spent: f64 = row[10].parse().unwrap();
    assert!(spent <= 6e5 + 1e-6);
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let out = dsc(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(dsc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dsc(&[]).status.code(), Some(1));
    assert_eq!(dsc(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_one_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = dsc(&["solve", "--scenario", p(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
    let (_d, scenario) = bundle(2);
    let out = dsc(&["solve", "--scenario", p(&scenario), "--combo", "taxis"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dsc(&["sweep", "--scenario", p(&scenario), "--budgets", "3:1:1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dsc(&["solve", "--scenario", p(&scenario), "--budget", "-5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_two_and_still_writes() {
    let (dir, scenario) = bundle(3);
    let text = std::fs::read_to_string(&scenario).unwrap();
    let limited = text.replace("max_iters = 5000", "max_iters = 1");
    assert_ne!(text, limited, "solver section not found in generated config");
    let cfg = dir.path().join("limited.toml");
    std::fs::write(&cfg, limited).unwrap();
    let out_dir = dir.path().join("sol");
    let out = dsc(&[
        "solve",
        "--scenario",
        p(&cfg),
        "--combo",
        "taxi+bus",
        "--budget",
        "1e5",
        "--tol",
        "1e-14",
        "--out",
        p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",false,"));
}

#[test]
fn identical_runs_produce_identical_artifacts() {
    let (a, sa) = bundle(4);
    let (b, sb) = bundle(4);
    assert_eq!(read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    for (dir, scenario) in [(&a, &sa), (&b, &sb)] {
        let out = dsc(&["solve", "--scenario", p(scenario), "--out", p(&dir.path().join("sol")), "--jobs", "2"]);
        assert!(out.status.success());
    }
    assert_eq!(read_dir_sorted(&a.path().join("sol")), read_dir_sorted(&b.path().join("sol")));
}

#[test]
fn dry_run_validates_without_writing() {
    let (dir, scenario) = bundle(5);
    let before = read_dir_sorted(dir.path());
    let out_dir = dir.path().join("never");
    for cmd in ["solve", "export", "fit-taxi", "fit-bus"] {
        let out = dsc(&[cmd, "--scenario", p(&scenario), "--out", p(&out_dir), "--dry-run"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out =
        dsc(&["sweep", "--scenario", p(&scenario), "--budgets", "1e5:3e5:1e5", "--out", p(&out_dir), "--dry-run"]);
    assert!(out.status.success());
    let out = dsc(&["generate", "--out", p(&out_dir), "--seed", "1", "--dry-run"]);
    assert!(out.status.success());
    assert!(!out_dir.exists());
    assert_eq!(read_dir_sorted(dir.path()), before);
}

#[test]
fn sweep_all_combos_gives_monotone_curves() {
    let (dir, scenario) = bundle(6);
    let out_dir = dir.path().join("sweep");
    let out = dsc(&[
        "sweep",
        "--scenario",
        p(&scenario),
        "--budgets",
        "2e5:8e5:2e5",
        "--combos",
        "all",
        "--out",
        p(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 16);
    for combo in ["taxi", "bus", "taxi+bus", "taxi+bus+dv"] {
        let phi: Vec<f64> = rows.iter().filter(|r| r[0] == combo).map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(phi.len(), 4);
        assert!(phi.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{combo}: {phi:?}");
    }
    let fits = std::fs::read_to_string(out_dir.join("sweep_fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 5);
}

#[test]
fn evaluate_reproduces_the_solved_utility() {
    let (dir, scenario) = bundle(7);
    let sol = dir.path().join("sol");
    assert!(dsc(&["solve", "--scenario", p(&scenario), "--out", p(&sol)]).status.success());
    let out = dsc(&[
        "evaluate",
        "--scenario",
        p(&scenario),
        "--fields",
        p(&sol.join("fields.csv")),
        "--out",
        p(&dir.path().join("ev")),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let phi_eval: f64 = stdout.lines().next().unwrap().strip_prefix("phi,").unwrap().parse().unwrap();
    let summary = std::fs::read_to_string(sol.join("summary.csv")).unwrap();
    let phi_solve: f64 = summary.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((phi_eval - phi_solve).abs() <= 1e-7 * phi_solve.abs().max(1.0));
    assert!(dir.path().join("ev/grid_metrics.csv").exists());
}

#[test]
fn fitting_transfer_and_export_write_their_tables() {
    let (dir, scenario) = bundle(8);
    let out_dir = dir.path().join("o");
    for (cmd, file) in [("fit-taxi", "taxi_fit_report.csv"), ("fit-bus", "bus_params.csv"), ("export", "scenario.toml")]
    {
        let out = dsc(&[cmd, "--scenario", p(&scenario), "--out", p(&out_dir)]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join(file).exists(), "{cmd} did not write {file}");
    }
    // the exported scenario loads and solves on its own
    let sol = dir.path().join("sol");
    let out = dsc(&["solve", "--scenario", p(&out_dir.join("scenario.toml")), "--combo", "taxi", "--out", p(&sol)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tr = dir.path().join("tr");
    let out = dsc(&["transfer-study", "--scenario", p(&scenario), "--variants", "5", "--out", p(&tr), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(tr.join("transfer.csv")).unwrap().lines().count(), 6);
    assert!(std::fs::read_to_string(tr.join("regression.csv")).unwrap().starts_with("regression,points,slope"));
}

#[test]
fn beta_and_zeta_overrides_are_exclusive() {
    let (_d, scenario) = bundle(9);
    let out = dsc(&["solve", "--scenario", p(&scenario), "--beta", "0.4", "--zeta", "3", "--dry-run"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dsc(&["solve", "--scenario", p(&scenario), "--zeta", "5", "--dry-run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

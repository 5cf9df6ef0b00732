//! `dsc`: fit, solve, sweep and study drive-by sensing scenarios from the command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dsc_core::bus::{estimate_line_params, read_bus_trips, write_line_params, BusLine};
use dsc_core::joint::{budget_sweep, kl_of, solve_fleet_combination, FleetCombination};
use dsc_core::model::{stwsu, twsu_and_tag};
use dsc_core::scenario::{
    build_scenario, export_solution, generate_synthetic, kl_text, read_total_field, save_scenario, transfer_study,
    write_fits, write_regression, write_sweep, write_transfer, ScenarioConfig, SensingScenario, SyntheticSpec,
};
use dsc_core::taxi::{default_subset_sizes, fit_p, read_taxi_traces, validate_fit, FitOptions};
use dsc_core::textio::{fmt_num, CsvOut};

#[derive(Parser, Debug)]
#[command(name = "dsc", version, about = "Drive-by sensing coverage optimization for taxi, bus and dedicated fleets")]
struct Cli {
    /// Worker threads for parallel sweeps and studies (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic scenario bundle.
    Generate(GenerateArgs),
    /// Fit taxi visit probabilities from the scenario's traces and report holdout errors.
    FitTaxi(CommonArgs),
    /// Estimate bus line parameters from the scenario's observed trips.
    FitBus(CommonArgs),
    /// Solve one fleet combination at one budget and export the solution.
    Solve(SolveArgs),
    /// Solve fleet combinations over a range of budgets.
    Sweep(SweepArgs),
    /// Degrade the bus network repeatedly and regress coverage indicators against utility gains.
    TransferStudy(TransferArgs),
    /// Evaluate utility, KL and per-grid metrics of an exported coverage field.
    Evaluate(EvaluateArgs),
    /// Write the scenario back out as a canonical configuration and data files.
    Export(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the utility exponent.
    #[arg(long, conflicts_with = "zeta")]
    beta: Option<f64>,
    /// Calibrate the utility exponent from this weight-density ratio.
    #[arg(long)]
    zeta: Option<f64>,
    /// Seed for every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the total budget.
    #[arg(long)]
    budget: Option<f64>,
    /// Taxi-bus / DV alternations per DV count.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative duality-gap tolerance of the taxi-bus solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Validate inputs without solving or writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Output directory of the bundle.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Synthetic generator parameters (TOML); flags below override them.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    lines: Option<usize>,
    #[arg(long)]
    vehicles: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Leave dedicated vehicles out of the scenario.
    #[arg(long)]
    no_dv: bool,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// taxi, bus, taxi+bus or taxi+bus+dv.
    #[arg(long, default_value = "taxi+bus+dv")]
    combo: FleetCombination,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Budgets as start:stop:step, inclusive.
    #[arg(long)]
    budgets: String,
    /// Comma-separated combinations, or `all`.
    #[arg(long, default_value = "all")]
    combos: String,
}

#[derive(Args, Debug)]
struct TransferArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of degraded networks (default from the scenario).
    #[arg(long)]
    variants: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fields table with a `total` column, as written by `solve`.
    #[arg(long)]
    fields: PathBuf,
}

/// A run that completed but whose solver did not reach its tolerance.
struct NotConverged;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DSC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(NotConverged)) => {
            eprintln!("warning: the solver did not reach its tolerance; results were written with converged=false");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Option<NotConverged>> {
    match command {
        Command::Generate(a) => generate(a).map(|_| None),
        Command::FitTaxi(a) => fit_taxi(&a).map(|_| None),
        Command::FitBus(a) => fit_bus(&a).map(|_| None),
        Command::Solve(a) => solve(&a),
        Command::Sweep(a) => sweep(&a),
        Command::TransferStudy(a) => transfer(&a).map(|_| None),
        Command::Evaluate(a) => evaluate(&a).map(|_| None),
        Command::Export(a) => export(&a).map(|_| None),
    }
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    if !path.exists() {
        bail!("scenario file not found: {}", path.display());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ScenarioConfig::from_toml(&text, path)?)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads the scenario with command-line overrides applied before validation.
fn load(a: &CommonArgs) -> Result<(ScenarioConfig, SensingScenario)> {
    let mut cfg = read_config(&a.scenario)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(b) = a.budget {
        cfg.costs.budget = b;
    }
    if let Some(k) = a.max_iter {
        cfg.solver.max_iter = k;
    }
    if let Some(tol) = a.tol {
        cfg.solver.tol = tol;
    }
    if let Some(beta) = a.beta {
        cfg.utility.beta = Some(beta);
        cfg.utility.zeta = None;
    }
    if let Some(zeta) = a.zeta {
        cfg.utility.beta = None;
        cfg.utility.zeta = Some(zeta);
    }
    let scenario = build_scenario(&cfg, &base_dir(&a.scenario))?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    log::info!(
        "scenario {:?}: {} grids, {} windows, {} bus lines, beta {}",
        scenario.name,
        scenario.n_grids(),
        scenario.n_windows(),
        scenario.lines.len(),
        scenario.params.beta
    );
    Ok((cfg, scenario))
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<SyntheticSpec>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SyntheticSpec::default(),
    };
    spec.seed = a.seed;
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut spec.cols, a.cols);
    set(&mut spec.rows, a.rows);
    set(&mut spec.n_windows, a.windows);
    set(&mut spec.n_lines, a.lines);
    set(&mut spec.vehicles, a.vehicles);
    set(&mut spec.days, a.days);
    if let Some(b) = a.budget {
        spec.budget = b;
    }
    if let Some(b) = a.beta {
        spec.beta = b;
    }
    if a.no_dv {
        spec.dv = false;
    }
    spec.validate()?;
    if a.dry_run {
        eprintln!("synthetic parameters are valid; nothing written (dry run)");
        return Ok(());
    }
    let bundle = generate_synthetic(&spec)?;
    let path = bundle.write(&a.out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn fit_taxi(a: &CommonArgs) -> Result<()> {
    let (cfg, scenario) = load(a)?;
    let traces_file = cfg.taxi.traces.as_ref().ok_or_else(|| anyhow!("the scenario has no [taxi] traces file"))?;
    let traces_path = base_dir(&a.scenario).join(traces_file);
    let traces = read_taxi_traces(&traces_path, &scenario.grid, &scenario.horizon)?;
    let vehicles = traces.vehicles();
    if vehicles.len() < 4 {
        bail!("at least 4 taxis are needed to fit and validate, found {}", vehicles.len());
    }
    // alternate vehicles between the fitting and the holdout halves
    let fit_half: BTreeSet<String> = vehicles.iter().step_by(2).cloned().collect();
    let holdout_half: BTreeSet<String> = vehicles.iter().skip(1).step_by(2).cloned().collect();
    let opts = FitOptions { draws: cfg.taxi.draws, subset_sizes: None, seed: cfg.seed };
    let half_model = fit_p(&traces.filter_vehicles(&fit_half), &opts)?;
    let sizes = default_subset_sizes(holdout_half.len());
    let report = validate_fit(&half_model, &traces.filter_vehicles(&holdout_half), &sizes, cfg.taxi.draws, cfg.seed)?;
    if a.dry_run {
        eprintln!("taxi traces are valid: {} vehicles; nothing written (dry run)", vehicles.len());
        return Ok(());
    }
    create_out(&a.out)?;
    scenario.taxi.write(&a.out.join("taxi_p.csv"))?;
    report.write(&a.out.join("taxi_fit_report.csv"), Some(&a.out.join("taxi_fit_scatter.csv")))?;
    let mean_mae = report.rows.iter().map(|r| r.mae).sum::<f64>() / report.rows.len().max(1) as f64;
    eprintln!(
        "fitted {} cells from {} taxis; holdout mean absolute error {} covering vehicles per cell",
        scenario.taxi.p_values().len(),
        vehicles.len(),
        fmt_num(mean_mae)
    );
    Ok(())
}

fn fit_bus(a: &CommonArgs) -> Result<()> {
    let (cfg, scenario) = load(a)?;
    let trips_file = cfg.bus.trips.as_ref().ok_or_else(|| anyhow!("the scenario has no [bus] trips file"))?;
    let trips = read_bus_trips(&base_dir(&a.scenario).join(trips_file))?;
    let ids: Vec<String> = scenario.lines.iter().map(|l| l.id.clone()).collect();
    let est = estimate_line_params(&trips, &ids, &scenario.horizon);
    for id in &est.unobserved {
        eprintln!("warning: line {id} has no observed trips");
    }
    let lines: Vec<BusLine> = scenario
        .lines
        .iter()
        .zip(&est.estimates)
        .map(|(l, e)| {
            let filled = e.synthetic.iter().filter(|s| **s).count();
            if filled > 0 {
                eprintln!("warning: line {}: {filled} windows copied from the nearest observed window", l.id);
            }
            BusLine {
                service_time: e.service_time.clone(),
                turnaround_time: e.turnaround_time.clone(),
                in_service: e.in_service.clone(),
                synthetic: e.synthetic.clone(),
                ..l.clone()
            }
        })
        .collect();
    if a.dry_run {
        eprintln!("bus trips are valid: {} trips on {} lines; nothing written (dry run)", trips.len(), lines.len());
        return Ok(());
    }
    create_out(&a.out)?;
    write_line_params(&a.out.join("bus_params.csv"), &lines)?;
    let mut out = CsvOut::create(&a.out.join("bus_fill.csv"), &["line_id", "window", "synthetic"])?;
    for l in &lines {
        for (t, s) in l.synthetic.iter().enumerate() {
            out.row([l.id.clone(), t.to_string(), s.to_string()])?;
        }
    }
    out.finish()?;
    eprintln!("estimated parameters for {} lines", lines.len());
    Ok(())
}

fn solve(a: &SolveArgs) -> Result<Option<NotConverged>> {
    let (_, scenario) = load(&a.common)?;
    let problem = scenario.joint_problem()?;
    if a.common.dry_run {
        eprintln!("scenario is valid; nothing solved or written (dry run)");
        return Ok(None);
    }
    let budget = scenario.costs.budget;
    let sol = solve_fleet_combination(&problem, a.combo, budget)?;
    export_solution(&a.common.out, &sol, &problem)?;
    eprintln!(
        "{} at budget {}: utility {}, KL {}, {} taxis, {} bus sensors, {} DVs, spent {}",
        a.combo,
        fmt_num(budget),
        fmt_num(sol.phi),
        kl_text(sol.kl),
        sol.n_taxi,
        sol.bus_sensors(),
        sol.n_dv,
        fmt_num(sol.spent)
    );
    Ok((!sol.converged).then_some(NotConverged))
}

/// Parses `start:stop:step` into an inclusive ascending list.
fn parse_budgets(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        bail!("budgets must be start:stop:step, got {spec:?}");
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("bad budget number {s:?}"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(start >= 0.0 && stop >= start && step > 0.0 && start.is_finite() && stop.is_finite()) {
        bail!("budgets need 0 <= start <= stop and step > 0, got {spec:?}");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

fn parse_combos(spec: &str) -> Result<Vec<FleetCombination>> {
    if spec.trim() == "all" {
        return Ok(FleetCombination::ALL.to_vec());
    }
    spec.split(',').map(|s| s.parse::<FleetCombination>().map_err(Into::into)).collect()
}

fn sweep(a: &SweepArgs) -> Result<Option<NotConverged>> {
    let budgets = parse_budgets(&a.budgets)?;
    let combos = parse_combos(&a.combos)?;
    let (_, scenario) = load(&a.common)?;
    let problem = scenario.joint_problem()?;
    if a.common.dry_run {
        eprintln!(
            "{} budgets x {} combinations validated; nothing solved or written (dry run)",
            budgets.len(),
            combos.len()
        );
        return Ok(None);
    }
    let table = budget_sweep(&problem, &combos, &budgets)?;
    create_out(&a.common.out)?;
    write_sweep(&a.common.out.join("sweep.csv"), &table)?;
    write_fits(&a.common.out.join("sweep_fits.csv"), &table)?;
    for f in &table.fits {
        eprintln!("{}: phi = {} M^beta + {} (R^2 {})", f.combo, fmt_num(f.a), fmt_num(f.b), fmt_num(f.r2));
    }
    Ok(None)
}

fn transfer(a: &TransferArgs) -> Result<()> {
    let (cfg, scenario) = load(&a.common)?;
    let variants = a.variants.unwrap_or(scenario.transfer.variants);
    let budget = a.common.budget.or(cfg.transfer.budget).unwrap_or(scenario.costs.budget);
    if scenario.lines.is_empty() {
        bail!("the transfer study needs at least one bus line");
    }
    if a.common.dry_run {
        eprintln!("{variants} variants validated; nothing solved or written (dry run)");
        return Ok(());
    }
    let study = transfer_study(&scenario, variants, budget)?;
    create_out(&a.common.out)?;
    write_transfer(&a.common.out.join("transfer.csv"), &study)?;
    write_regression(&a.common.out.join("regression.csv"), &study.regressions)?;
    for r in &study.regressions {
        eprintln!("{}: slope {}, R^2 {} over {} variants", r.name, fmt_num(r.slope), fmt_num(r.r2), r.points);
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (_, scenario) = load(&a.common)?;
    let field = read_total_field(&a.fields, scenario.n_grids(), scenario.n_windows())?;
    let problem = scenario.taxi_bus_problem()?;
    let phi = stwsu(&field, &scenario.weights, &scenario.params)?;
    let kl = kl_of(&field, &problem)?;
    let metrics = twsu_and_tag(&field, &scenario.weights, &scenario.params)?;
    println!("phi,{}", fmt_num(phi));
    println!("kl,{}", kl_text(kl));
    if a.common.dry_run {
        return Ok(());
    }
    create_out(&a.common.out)?;
    let mut out = CsvOut::create(&a.common.out.join("evaluation.csv"), &["phi", "kl"])?;
    out.row([fmt_num(phi), kl_text(kl)])?;
    out.finish()?;
    let mut out = CsvOut::create(
        &a.common.out.join("grid_metrics.csv"),
        &["grid_id", "weight", "twsu", "tag_percent", "excluded_windows"],
    )?;
    for (g, m) in metrics.iter().enumerate() {
        out.row([
            g.to_string(),
            fmt_num(scenario.weights.spatial()[g]),
            fmt_num(m.twsu),
            m.tag.map(fmt_num).unwrap_or_else(|| "undefined".into()),
            m.excluded_windows.to_string(),
        ])?;
    }
    out.finish()?;
    Ok(())
}

fn export(a: &CommonArgs) -> Result<()> {
    let (_, scenario) = load(a)?;
    if a.dry_run {
        eprintln!("scenario is valid; nothing written (dry run)");
        return Ok(());
    }
    let path = save_scenario(&scenario, &a.out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

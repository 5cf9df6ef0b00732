//! Taxi-bus sensor allocation under a budget.
//!
//! Decision variables are `x = (n_taxi, y_1, .., y_m)`. Coverage is affine in
//! `x` (`N = background + n p + sum_j y_j a_j`) and the objective
//! `sum pi (N)^beta` is concave, so the relaxed problem over the knapsack-box
//! polytope `{c.x <= M, 0 <= x <= L}` is solved by Frank-Wolfe with away steps
//! and an exact line search. The integer solution is a floor-and-repair of the
//! relaxed optimum.

use serde::{Deserialize, Serialize};

use crate::bus::{BusIncidence, BusLine};
use crate::error::{DscError, Result};
use crate::grid::TimeIndex;
use crate::model::{CostStructure, CoverageField, SensingWeights, UtilityParams};
use crate::taxi::TaxiModel;

/// Which fleets the allocation may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FleetMode {
    TaxiBus,
    TaxiOnly,
    BusOnly,
}

#[derive(Debug, Clone)]
pub struct TaxiBusProblem {
    pub taxi: TaxiModel,
    pub lines: Vec<BusLine>,
    pub incidence: BusIncidence,
    pub weights: SensingWeights,
    pub params: UtilityParams,
    pub costs: CostStructure,
    /// Budget available to taxis and buses, `M_TB`.
    pub budget: f64,
    /// Coverage already present (from dedicated vehicles), added inside the utility.
    pub background: CoverageField,
}

impl TaxiBusProblem {
    pub fn new(
        taxi: TaxiModel,
        lines: Vec<BusLine>,
        weights: SensingWeights,
        params: UtilityParams,
        costs: CostStructure,
        budget: f64,
    ) -> Result<Self> {
        let (ng, nt) = (weights.n_grids(), weights.n_windows());
        let incidence = BusIncidence::from_lines(&lines, ng);
        let problem = TaxiBusProblem {
            taxi,
            lines,
            incidence,
            weights,
            params,
            costs,
            budget,
            background: CoverageField::zeros(ng, nt),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_background(mut self, background: CoverageField) -> Result<Self> {
        self.background = background;
        self.validate()?;
        Ok(self)
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        let mut p = self.clone();
        p.budget = budget;
        p.validate()?;
        Ok(p)
    }

    pub fn n_grids(&self) -> usize {
        self.weights.n_grids()
    }

    pub fn n_windows(&self) -> usize {
        self.weights.n_windows()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.costs.validate()?;
        let (ng, nt) = (self.n_grids(), self.n_windows());
        if self.taxi.n_grids() != ng || self.taxi.n_windows() != nt {
            return Err(DscError::DimensionMismatch {
                what: "taxi model",
                expected: ng * nt,
                got: self.taxi.n_grids() * self.taxi.n_windows(),
            });
        }
        if self.background.n_grids() != ng || self.background.n_windows() != nt {
            return Err(DscError::DimensionMismatch {
                what: "background coverage",
                expected: ng * nt,
                got: self.background.values().len(),
            });
        }
        if self.incidence.n_lines() != self.lines.len() || self.incidence.n_grids() != ng {
            return Err(DscError::DimensionMismatch {
                what: "bus incidence",
                expected: self.lines.len(),
                got: self.incidence.n_lines(),
            });
        }
        for line in &self.lines {
            line.validate(ng, nt)?;
        }
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(DscError::Domain(format!("taxi-bus budget must be nonnegative, got {}", self.budget)));
        }
        Ok(())
    }

    /// Taxi and bus coverage (without background) for a given allocation.
    pub fn coverage(&self, n_taxi: f64, y: &[f64]) -> Result<CoverageField> {
        let taxi = crate::taxi::taxi_coverage(&self.taxi, n_taxi)?;
        let bus = crate::bus::bus_coverage(&self.lines, &self.incidence, y, self.n_windows())?;
        taxi.plus(&bus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Starting point `(n_taxi, y)`; projected to the feasible set if needed.
    pub warm_start: Option<(f64, Vec<f64>)>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, max_iters: 5000, warm_start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxiBusSolution {
    pub mode: FleetMode,
    pub n_taxi: f64,
    pub y: Vec<f64>,
    pub n_taxi_int: u64,
    pub y_int: Vec<u64>,
    pub objective_relaxed: f64,
    pub objective_rounded: f64,
    /// Certified bound on the relaxed optimum, objective plus duality gap.
    pub upper_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TaxiBusSolution {
    pub fn bus_sensors(&self) -> u64 {
        self.y_int.iter().sum()
    }

    pub fn rounded_cost(&self, costs: &CostStructure) -> f64 {
        costs.spend(self.n_taxi_int, self.bus_sensors(), 0)
    }

    pub fn relaxed_cost(&self, costs: &CostStructure) -> f64 {
        costs.taxi * self.n_taxi + costs.bus * self.y.iter().sum::<f64>()
    }

    /// Taxi and bus coverage of the integer allocation, background excluded.
    pub fn rounded_coverage(&self, problem: &TaxiBusProblem) -> Result<CoverageField> {
        let y: Vec<f64> = self.y_int.iter().map(|&v| v as f64).collect();
        problem.coverage(self.n_taxi_int as f64, &y)
    }
}

/// The problem restricted to positive-weight cells, in column form.
struct Compiled {
    beta: f64,
    eps: f64,
    pi: Vec<f64>,
    bg: Vec<f64>,
    /// Per variable: (cell, coverage per unit).
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    budget: f64,
}

impl Compiled {
    fn new(problem: &TaxiBusProblem, mode: FleetMode) -> Result<Self> {
        let (ng, nt) = (problem.n_grids(), problem.n_windows());
        let mut cell_of = vec![usize::MAX; ng * nt];
        let mut pi = Vec::new();
        let mut bg = Vec::new();
        for g in 0..ng {
            for t in 0..nt {
                let w = problem.weights.cell(g, t);
                if w > 0.0 {
                    cell_of[g * nt + t] = pi.len();
                    pi.push(w);
                    bg.push(problem.background.get(g, t));
                }
            }
        }
        let mut cols = Vec::with_capacity(1 + problem.lines.len());
        let mut taxi_col = Vec::new();
        for g in 0..ng {
            for t in 0..nt {
                let c = cell_of[g * nt + t];
                let p = problem.taxi.p(g, t);
                if c != usize::MAX && p > 0.0 {
                    taxi_col.push((c, p));
                }
            }
        }
        cols.push(taxi_col);
        for (j, line) in problem.lines.iter().enumerate() {
            let mut col = Vec::new();
            for grid in problem.incidence.grids_of(j) {
                for t in 0..nt {
                    let c = cell_of[grid.0 * nt + t];
                    let rate = line.unit_rate(TimeIndex(t))?;
                    if c != usize::MAX && rate > 0.0 {
                        col.push((c, rate));
                    }
                }
            }
            col.sort_unstable_by_key(|e| e.0);
            cols.push(col);
        }
        let mut cost = vec![problem.costs.taxi];
        cost.extend(std::iter::repeat_n(problem.costs.bus, problem.lines.len()));
        let mut upper = vec![problem.taxi.fleet_bound as f64];
        upper.extend(problem.lines.iter().map(|l| l.fleet_size as f64));
        match mode {
            FleetMode::TaxiBus => {}
            FleetMode::TaxiOnly => upper[1..].iter_mut().for_each(|u| *u = 0.0),
            FleetMode::BusOnly => upper[0] = 0.0,
        }
        Ok(Compiled {
            beta: problem.params.beta,
            eps: problem.params.epsilon_smooth,
            pi,
            bg,
            cols,
            cost,
            upper,
            budget: problem.budget,
        })
    }

    fn n_vars(&self) -> usize {
        self.cols.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut n = self.bg.clone();
        self.add_columns(&mut n, x, 1.0);
        n
    }

    fn add_columns(&self, n: &mut [f64], x: &[f64], scale: f64) {
        for (col, &xk) in self.cols.iter().zip(x) {
            if xk != 0.0 {
                for &(c, a) in col {
                    n[c] += scale * xk * a;
                }
            }
        }
    }

    fn phi(&self, n: &[f64]) -> f64 {
        self.pi.iter().zip(n).map(|(w, v)| w * v.max(0.0).powf(self.beta)).sum()
    }

    fn phi_smoothed(&self, n: &[f64]) -> f64 {
        self.pi.iter().zip(n).map(|(w, v)| w * (v.max(0.0) + self.eps).powf(self.beta)).sum()
    }

    /// Per-cell derivative `pi beta (N + eps)^(beta - 1)`.
    fn cell_slopes(&self, n: &[f64]) -> Vec<f64> {
        self.pi.iter().zip(n).map(|(w, v)| w * self.beta * (v.max(0.0) + self.eps).powf(self.beta - 1.0)).collect()
    }

    fn gradient(&self, n: &[f64]) -> Vec<f64> {
        let slopes = self.cell_slopes(n);
        self.cols.iter().map(|col| col.iter().map(|&(c, a)| slopes[c] * a).sum()).collect()
    }

    fn directional(&self, n: &[f64], dn: &[f64], alpha: f64) -> f64 {
        let mut total = 0.0;
        for ((w, v), d) in self.pi.iter().zip(n).zip(dn) {
            if *d != 0.0 {
                total += w * self.beta * ((v + alpha * d).max(0.0) + self.eps).powf(self.beta - 1.0) * d;
            }
        }
        total
    }

    /// Unsmoothed objective change from one more unit of variable `k`.
    fn unit_gain(&self, n: &[f64], k: usize) -> f64 {
        self.cols[k]
            .iter()
            .map(|&(c, a)| self.pi[c] * ((n[c] + a).powf(self.beta) - n[c].max(0.0).powf(self.beta)))
            .sum()
    }

    fn cost_of(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.cost).map(|(a, b)| a * b).sum()
    }

    /// Clamps into the box and scales down onto the budget if over.
    fn project_feasible(&self, x: &mut [f64]) {
        for (v, u) in x.iter_mut().zip(&self.upper) {
            *v = v.clamp(0.0, *u);
        }
        let spend = self.cost_of(x);
        if spend > self.budget {
            let f = if spend > 0.0 { self.budget / spend } else { 0.0 };
            x.iter_mut().for_each(|v| *v *= f);
        }
    }
}

/// Maximizes `direction . x` over `{costs . x <= budget, 0 <= x <= upper}`.
///
/// Fractional-knapsack greedy by benefit per cost, lowest index first on ties;
/// the result is an exact LP optimum.
pub fn linear_minimization_oracle(direction: &[f64], costs: &[f64], upper: &[f64], budget: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..direction.len()).filter(|&k| direction[k] > 0.0 && upper[k] > 0.0).collect();
    order.sort_by(|&a, &b| (direction[b] / costs[b]).total_cmp(&(direction[a] / costs[a])).then(a.cmp(&b)));
    let mut s = vec![0.0; direction.len()];
    let mut remaining = budget.max(0.0);
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let take = upper[k].min(remaining / costs[k]);
        s[k] = take;
        remaining -= take * costs[k];
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Relaxed {
    x: Vec<f64>,
    gap: f64,
    upper_bound: f64,
    iterations: usize,
    converged: bool,
}

fn frank_wolfe(prob: &Compiled, start: Vec<f64>, tol: f64, max_iters: usize) -> Relaxed {
    let nv = prob.n_vars();
    let mut x = start;
    prob.project_feasible(&mut x);
    let mut n = prob.apply(&x);
    let mut atoms: Vec<(Vec<f64>, f64)> = vec![(x.clone(), 1.0)];
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        let grad = prob.gradient(&n);
        let s = linear_minimization_oracle(&grad, &prob.cost, &prob.upper, prob.budget);
        let gx = dot(&grad, &x);
        gap = (dot(&grad, &s) - gx).max(0.0);
        let phi = prob.phi_smoothed(&n);
        if gap <= tol * (1.0 + phi.abs()) {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        iterations += 1;

        let (away_idx, away_gap) = atoms
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, gx - dot(&grad, v)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let fw_step = atoms.len() == 1 || gap >= away_gap;
        let (d, alpha_max) = if fw_step {
            (s.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>(), 1.0)
        } else {
            let (v, w) = &atoms[away_idx];
            (x.iter().zip(v).map(|(a, b)| a - b).collect(), w / (1.0 - w))
        };
        let mut dn = vec![0.0; n.len()];
        prob.add_columns(&mut dn, &d, 1.0);

        // exact line search on the concave 1-D restriction
        let alpha = if prob.directional(&n, &dn, alpha_max) >= 0.0 {
            alpha_max
        } else {
            let (mut lo, mut hi) = (0.0, alpha_max);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if prob.directional(&n, &dn, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * alpha_max {
                    break;
                }
            }
            lo
        };
        if alpha <= 0.0 {
            // no ascent along the chosen direction at machine precision
            break;
        }
        for k in 0..nv {
            x[k] = (x[k] + alpha * d[k]).clamp(0.0, prob.upper[k]);
        }
        for (c, v) in n.iter_mut().zip(&dn) {
            *c += alpha * v;
        }
        if fw_step {
            if alpha >= 1.0 {
                atoms = vec![(s, 1.0)];
            } else {
                atoms.iter_mut().for_each(|a| a.1 *= 1.0 - alpha);
                match atoms.iter_mut().find(|a| a.0 == s) {
                    Some(a) => a.1 += alpha,
                    None => atoms.push((s, alpha)),
                }
            }
        } else {
            atoms.iter_mut().for_each(|a| a.1 *= 1.0 + alpha);
            atoms[away_idx].1 -= alpha;
            if alpha >= alpha_max || atoms[away_idx].1 <= 1e-15 {
                atoms.remove(away_idx);
            }
        }
        if iterations % 64 == 0 {
            n = prob.apply(&x);
        }
    }
    let upper_bound = prob.phi_smoothed(&n) + gap;
    Relaxed { x, gap, upper_bound, iterations, converged }
}

/// Adds single units greedily by objective gain per cost while affordable.
fn greedy_fill(prob: &Compiled, z: &mut [u64], n: &mut [f64]) {
    let mut remaining = prob.budget - prob.cost_of(&z.iter().map(|&v| v as f64).collect::<Vec<_>>());
    loop {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..prob.n_vars() {
            if (z[k] + 1) as f64 > prob.upper[k] + 1e-9 || prob.cost[k] > remaining + 1e-9 {
                continue;
            }
            let ratio = prob.unit_gain(n, k) / prob.cost[k];
            if ratio > 0.0 && best.is_none_or(|(_, r)| ratio > r) {
                best = Some((k, ratio));
            }
        }
        let Some((k, _)) = best else { break };
        z[k] += 1;
        remaining -= prob.cost[k];
        for &(c, a) in &prob.cols[k] {
            n[c] += a;
        }
    }
}

fn round_compiled(prob: &Compiled, x: &[f64]) -> Vec<u64> {
    let mut z: Vec<u64> =
        x.iter().zip(&prob.upper).map(|(v, u)| (v + 1e-9).floor().clamp(0.0, u.floor()) as u64).collect();
    // floor can only lower the cost, except through the 1e-9 slack
    while prob.cost_of(&z.iter().map(|&v| v as f64).collect::<Vec<_>>()) > prob.budget + 1e-9 {
        let k = (0..z.len()).rev().find(|&k| z[k] > 0).expect("positive cost implies a positive entry");
        z[k] -= 1;
    }
    let zf = |z: &[u64]| z.iter().map(|&v| v as f64).collect::<Vec<_>>();
    let mut n = prob.apply(&zf(&z));
    greedy_fill(prob, &mut z, &mut n);

    // one-unit exchange repair: drop a unit and refill while it helps
    let mut phi = prob.phi(&n);
    for _ in 0..1000 {
        let mut improved = false;
        for i in 0..z.len() {
            if z[i] == 0 {
                continue;
            }
            let mut trial = z.clone();
            trial[i] -= 1;
            let mut tn = n.clone();
            for &(c, a) in &prob.cols[i] {
                tn[c] -= a;
            }
            greedy_fill(prob, &mut trial, &mut tn);
            let tphi = prob.phi(&tn);
            if tphi > phi + 1e-12 * (1.0 + phi.abs()) {
                z = trial;
                n = tn;
                phi = tphi;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    z
}

/// Rounds a relaxed allocation `(n_taxi, y)` to an integer-feasible one.
pub fn round_solution(problem: &TaxiBusProblem, mode: FleetMode, n_taxi: f64, y: &[f64]) -> Result<(u64, Vec<u64>)> {
    let prob = Compiled::new(problem, mode)?;
    check_len(problem, y)?;
    let mut x = vec![n_taxi];
    x.extend_from_slice(y);
    let z = round_compiled(&prob, &x);
    Ok((z[0], z[1..].to_vec()))
}

fn check_len(problem: &TaxiBusProblem, y: &[f64]) -> Result<()> {
    if y.len() != problem.lines.len() {
        return Err(DscError::DimensionMismatch { what: "bus sensors", expected: problem.lines.len(), got: y.len() });
    }
    Ok(())
}

/// Unsmoothed objective with the problem's background added inside the utility.
pub fn objective(problem: &TaxiBusProblem, n_taxi: f64, y: &[f64]) -> Result<f64> {
    check_len(problem, y)?;
    let prob = Compiled::new(problem, FleetMode::TaxiBus)?;
    let mut x = vec![n_taxi];
    x.extend_from_slice(y);
    Ok(prob.phi(&prob.apply(&x)))
}

/// Smoothed objective `sum pi (N + eps)^beta` used for gradients.
pub fn smoothed_objective(problem: &TaxiBusProblem, n_taxi: f64, y: &[f64]) -> Result<f64> {
    check_len(problem, y)?;
    let prob = Compiled::new(problem, FleetMode::TaxiBus)?;
    let mut x = vec![n_taxi];
    x.extend_from_slice(y);
    Ok(prob.phi_smoothed(&prob.apply(&x)))
}

/// Gradient of [`smoothed_objective`] with respect to `(n_taxi, y)`.
pub fn smoothed_gradient(problem: &TaxiBusProblem, n_taxi: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_len(problem, y)?;
    let prob = Compiled::new(problem, FleetMode::TaxiBus)?;
    let mut x = vec![n_taxi];
    x.extend_from_slice(y);
    Ok(prob.gradient(&prob.apply(&x)))
}

fn solve_mode(
    problem: &TaxiBusProblem,
    mode: FleetMode,
    options: &SolverOptions,
    start: Option<Vec<f64>>,
) -> Result<TaxiBusSolution> {
    let prob = Compiled::new(problem, mode)?;
    let nv = prob.n_vars();
    let start = match (start, &options.warm_start) {
        (Some(s), _) => s,
        (None, Some((n, y))) => {
            check_len(problem, y)?;
            let mut s = vec![*n];
            s.extend_from_slice(y);
            s
        }
        (None, None) => vec![0.0; nv],
    };
    let mut relaxed = frank_wolfe(&prob, start, options.tol, options.max_iters);
    let mut z = round_compiled(&prob, &relaxed.x);
    let zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
    let mut rounded_phi = prob.phi(&prob.apply(&zf));
    let mut relaxed_phi = prob.phi(&prob.apply(&relaxed.x));
    if rounded_phi > relaxed_phi {
        // the integer point is a better relaxed iterate: continue from it
        let rem = options.max_iters.saturating_sub(relaxed.iterations);
        let again = frank_wolfe(&prob, zf.clone(), options.tol, rem);
        let again_phi = prob.phi(&prob.apply(&again.x));
        let iterations = relaxed.iterations + again.iterations;
        relaxed = if again_phi >= rounded_phi {
            relaxed_phi = again_phi;
            again
        } else {
            relaxed_phi = rounded_phi;
            Relaxed { x: zf, ..again }
        };
        relaxed.iterations = iterations;
        let z2 = round_compiled(&prob, &relaxed.x);
        let phi2 = prob.phi(&prob.apply(&z2.iter().map(|&v| v as f64).collect::<Vec<_>>()));
        if phi2 > rounded_phi && phi2 <= relaxed_phi {
            z = z2;
            rounded_phi = phi2;
        }
    }
    Ok(TaxiBusSolution {
        mode,
        n_taxi: relaxed.x[0],
        y: relaxed.x[1..].to_vec(),
        n_taxi_int: z[0],
        y_int: z[1..].to_vec(),
        objective_relaxed: relaxed_phi,
        objective_rounded: rounded_phi,
        upper_bound: relaxed.upper_bound.max(relaxed_phi),
        gap: relaxed.gap,
        iterations: relaxed.iterations,
        converged: relaxed.converged,
    })
}

/// Solves the relaxed problem and rounds it.
///
/// For the mixed mode the single-fleet problems are solved first; the mixed
/// relaxation starts from the better of them and the integer answer is the best
/// of the three roundings, so the mixed fleet never reports less than either
/// single fleet at the same budget.
pub fn solve(problem: &TaxiBusProblem, mode: FleetMode, options: &SolverOptions) -> Result<TaxiBusSolution> {
    problem.validate()?;
    if mode != FleetMode::TaxiBus {
        return solve_mode(problem, mode, options, None);
    }
    let taxi = solve_mode(problem, FleetMode::TaxiOnly, options, None)?;
    let bus = solve_mode(problem, FleetMode::BusOnly, options, None)?;
    let seed = if taxi.objective_relaxed >= bus.objective_relaxed { &taxi } else { &bus };
    let start = match &options.warm_start {
        Some((n, y)) => {
            check_len(problem, y)?;
            let mut s = vec![*n];
            s.extend_from_slice(y);
            s
        }
        None => {
            let mut s = vec![seed.n_taxi];
            s.extend_from_slice(&seed.y);
            s
        }
    };
    let mut mixed = solve_mode(problem, FleetMode::TaxiBus, options, Some(start))?;
    mixed.iterations += taxi.iterations + bus.iterations;
    for single in [&taxi, &bus] {
        if single.objective_rounded > mixed.objective_rounded {
            mixed.n_taxi_int = single.n_taxi_int;
            mixed.y_int = single.y_int.clone();
            mixed.objective_rounded = single.objective_rounded;
        }
        if single.objective_relaxed > mixed.objective_relaxed {
            // only possible within the convergence tolerance
            mixed.n_taxi = single.n_taxi;
            mixed.y = single.y.clone();
            mixed.objective_relaxed = single.objective_relaxed;
            mixed.upper_bound = mixed.upper_bound.max(single.upper_bound);
        }
    }
    mixed.objective_relaxed = mixed.objective_relaxed.max(mixed.objective_rounded);
    mixed.upper_bound = mixed.upper_bound.max(mixed.objective_relaxed);
    Ok(mixed)
}

/// Taxi-only or bus-only allocation, by forcing the other fleet's bounds to zero.
pub fn solve_single_mode(
    problem: &TaxiBusProblem,
    mode: FleetMode,
    options: &SolverOptions,
) -> Result<TaxiBusSolution> {
    if mode == FleetMode::TaxiBus {
        return Err(DscError::Domain("single-mode solve needs taxi-only or bus-only".into()));
    }
    solve(problem, mode, options)
}

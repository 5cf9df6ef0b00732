use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsc_bench::bench_scenario;
use dsc_core::grid::{GridIndex, GridSpec};
use dsc_core::joint::{solve_fleet_combination, FleetCombination};
use dsc_core::router::{
    default_start_nodes, grid_astar, route_fleet, GridGraph, GridMap, RouterOptions, RoutingContext,
};
use dsc_core::solver::{solve, FleetMode, SolverOptions};
use dsc_core::CoverageField;

fn taxi_bus_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("taxi_bus_solve");
    for &(cols, lines) in &[(6, 3), (10, 8), (16, 20)] {
        let s = bench_scenario(cols, lines, 12);
        let problem = s.taxi_bus_problem().unwrap();
        let opts = SolverOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{cols}x{cols}_{lines}lines")), &problem, |b, p| {
            b.iter(|| solve(p, FleetMode::TaxiBus, &opts).unwrap())
        });
    }
    group.finish();
}

fn astar(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_astar");
    for &side in &[10usize, 30] {
        let grid = GridSpec::planar(side, side, 1.0);
        let graph = GridGraph::full(grid.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let imp: Vec<f64> = (0..grid.n_grids()).map(|_| rng.gen_range(0.1..10.0)).collect();
        let (o, d) = (GridIndex(0), GridIndex(grid.n_grids() - 1));
        group.bench_function(BenchmarkId::from_parameter(format!("{side}x{side}")), |b| {
            b.iter(|| grid_astar(&graph, o, d, &imp).unwrap())
        });
    }
    group.finish();
}

fn dv_fleet_routing(c: &mut Criterion) {
    let s = bench_scenario(8, 3, 12);
    let dv = s.dv.as_ref().unwrap();
    let map = GridMap::new(&s.grid, &dv.network);
    let base = CoverageField::zeros(s.n_grids(), s.n_windows());
    let ctx = RoutingContext { weights: &s.weights, params: &s.params, base: &base, op_windows: &dv.op_windows };
    let starts = default_start_nodes(&dv.network, &map, &s.weights, 4);
    let opts = RouterOptions::default();
    c.bench_function("route_fleet_8x8_4dv", |b| {
        b.iter(|| route_fleet(&dv.network, &map, &ctx, &starts, dv.trip_hours, &opts).unwrap())
    });
}

fn joint_solver(c: &mut Criterion) {
    let s = bench_scenario(8, 3, 6);
    let problem = s.joint_problem().unwrap();
    let mut group = c.benchmark_group("joint_solve");
    group.sample_size(10);
    group.bench_function("taxi+bus+dv_8x8", |b| {
        b.iter(|| solve_fleet_combination(&problem, FleetCombination::TaxiBusDv, s.costs.budget).unwrap())
    });
    group.finish();
}

criterion_group!(benches, taxi_bus_solver, astar, dv_fleet_routing, joint_solver);
criterion_main!(benches);

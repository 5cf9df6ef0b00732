//! Fixtures shared by the benchmarks under `benches/`.

use dsc_core::scenario::{generate_synthetic, SensingScenario, SyntheticSpec};

/// A synthetic `cols × cols` instance with `n_lines` bus lines and a DV road network.
pub fn bench_scenario(cols: usize, n_lines: usize, n_windows: usize) -> SensingScenario {
    let spec = SyntheticSpec {
        seed: 7,
        cols,
        rows: cols,
        n_windows,
        n_lines,
        vehicles: 200,
        days: 2,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec).expect("valid bench spec").scenario().expect("bench scenario builds")
}

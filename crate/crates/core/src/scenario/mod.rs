//! Scenario configuration, data ingestion, synthetic instances and result export.

mod config;
mod export;
mod synthetic;
mod transfer;

#[cfg(test)]
mod tests;

pub use config::{
    build_scenario, dv_data, load_scenario, read_geometry, save_scenario, temporal_weights, write_geometry, BusConfig,
    CostsConfig, DvConfig, DvData, GridConfig, HorizonConfig, LineGeometry, ScenarioConfig, SensingScenario,
    SolverConfig, TaxiConfig, TemporalProfile, TransferConfig, UtilityConfig, WeightsConfig, DEFAULT_BETA,
};
pub use export::{
    export_solution, kl_text, read_total_field, write_bus_allocation, write_dv_routes, write_fields, write_fits,
    write_grid_metrics, write_regression, write_summary, write_sweep, write_transfer, SUMMARY_HEADER,
};
pub use synthetic::{generate_synthetic, sample_taxi_traces, SyntheticBundle, SyntheticSpec};
pub use transfer::{degrade_bus_network, transfer_study, variant_fractions, Regression, TransferRow, TransferStudy};

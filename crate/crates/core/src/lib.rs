//! Drive-by sensing coverage for mixed taxi, bus and dedicated-vehicle fleets.
//!
//! The crate covers the whole pipeline: coverage metrics, per-fleet coverage
//! models, the taxi-bus resource allocation, dedicated-vehicle routing, the
//! joint optimizer and scenario input/output.

// `!(x > 0.0)` is used deliberately throughout: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Parallel arrays (costs, bounds, counts) are indexed together; an index loop reads best.
#![allow(clippy::needless_range_loop)]

pub mod bus;
pub mod error;
pub mod grid;
pub mod joint;
pub mod model;
pub mod router;
pub mod scenario;
pub mod solver;
pub mod taxi;
pub mod textio;

pub use error::{DscError, Result};
pub use grid::{CoordSystem, GridIndex, GridSpec, Horizon, TimeIndex};
pub use model::{CostStructure, CoverageField, Distribution, SensingWeights, UtilityParams};
pub use scenario::{load_scenario, save_scenario, ScenarioConfig, SensingScenario};

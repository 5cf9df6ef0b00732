//! Dedicated-vehicle routing on a road network viewed at two scales: road
//! nodes for driving, grid cells for deciding where to go.

mod dv;
mod network;
mod paths;

pub use dv::{
    default_start_nodes, extend_round_trips, local_destination_search, random_walk, route_fleet, route_single_dv,
    Direction, DvRoute, FleetRoutes, Leg, MarginalUtilityField, PsiForm, RoundTrips, RouterOptions, RoutingContext,
};
pub use network::{lattice_network, GridGraph, GridMap, RoadEdge, RoadNetwork, RoadNode, DEFAULT_SPEED_KMH};
pub use paths::{execute_g_route, grid_astar, path_impedance, shortest_path_to_grid, ExecutedRoute, GRoute, NRoute};

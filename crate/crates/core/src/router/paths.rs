//! Shortest paths on the road network and least-impeded paths on the grid graph.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::network::{GridGraph, GridMap, RoadNetwork};
use crate::error::{DscError, Result};
use crate::grid::GridIndex;

/// A route in the road network: node indices and total travel time in hours.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NRoute {
    pub nodes: Vec<usize>,
    pub time_h: f64,
}

impl NRoute {
    pub fn single(v: usize) -> Self {
        NRoute { nodes: vec![v], time_h: 0.0 }
    }

    /// Arrival time at each node, starting from zero.
    pub fn arrival_times(&self, network: &RoadNetwork) -> Result<Vec<f64>> {
        let mut times = Vec::with_capacity(self.nodes.len());
        let mut t = 0.0;
        for (i, &v) in self.nodes.iter().enumerate() {
            if i > 0 {
                let u = self.nodes[i - 1];
                t += network.edge_time(u, v).ok_or_else(|| DscError::Routing {
                    leg: i,
                    reason: format!("no edge between consecutive nodes {u} and {v}"),
                })?;
            }
            times.push(t);
        }
        Ok(times)
    }

    /// Appends `other`, which must start where this route ends.
    pub fn extend(&mut self, other: &NRoute) {
        debug_assert_eq!(self.nodes.last(), other.nodes.first());
        self.nodes.extend_from_slice(&other.nodes[1..]);
        self.time_h += other.time_h;
    }

    /// Grid sequence the route traverses, consecutive repeats removed.
    pub fn grid_route(&self, map: &GridMap) -> GRoute {
        let mut grids: Vec<GridIndex> = Vec::new();
        for &v in &self.nodes {
            if let Some(g) = map.grid_of(v) {
                if grids.last() != Some(&g) {
                    grids.push(g);
                }
            }
        }
        GRoute(grids)
    }
}

/// A route in grid space: consecutive grids are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GRoute(pub Vec<GridIndex>);

impl GRoute {
    pub fn unique_grids(&self) -> Vec<GridIndex> {
        let mut g = self.0.clone();
        g.sort_unstable();
        g.dedup();
        g
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Fastest path from `from` to the nearest routable node inside `target`.
pub fn shortest_path_to_grid(network: &RoadNetwork, map: &GridMap, from: usize, target: GridIndex) -> Option<NRoute> {
    if map.grid_of(from) == Some(target) {
        return Some(NRoute::single(from));
    }
    let n = network.n_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Reverse((Key(0.0), from)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if map.grid_of(u) == Some(target) {
            let mut nodes = vec![u];
            let mut cur = u;
            while prev[cur] != usize::MAX {
                cur = prev[cur];
                nodes.push(cur);
            }
            nodes.reverse();
            return Some(NRoute { nodes, time_h: d });
        }
        for &(v, w) in network.out_edges(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedRoute {
    pub nroute: NRoute,
    pub end: usize,
    /// Grids the N-route really traverses.
    pub actual: GRoute,
}

/// Drives a G-route leg by leg, each time to the nearest node of the next grid.
pub fn execute_g_route(network: &RoadNetwork, map: &GridMap, route: &GRoute, start: usize) -> Result<ExecutedRoute> {
    let first = *route.0.first().ok_or_else(|| DscError::Routing { leg: 0, reason: "empty G-route".into() })?;
    if map.grid_of(start) != Some(first) {
        return Err(DscError::Routing {
            leg: 0,
            reason: format!("start node {start} is not a routable node of grid {}", first.0),
        });
    }
    let mut nroute = NRoute::single(start);
    let mut cur = start;
    for (leg, &g) in route.0.iter().enumerate().skip(1) {
        let path = shortest_path_to_grid(network, map, cur, g)
            .ok_or_else(|| DscError::Routing { leg, reason: format!("grid {} unreachable from node {cur}", g.0) })?;
        cur = *path.nodes.last().unwrap();
        nroute.extend(&path);
    }
    let actual = nroute.grid_route(map);
    Ok(ExecutedRoute { nroute, end: cur, actual })
}

/// Least-impeded 8-adjacent path over covered grids.
///
/// Path cost is the summed impedance of every grid entered after the origin.
/// The heuristic `chebyshev * min impedance` is consistent, so the result is
/// an exact minimum; ties resolve toward lower grid ids.
pub fn grid_astar(graph: &GridGraph, origin: GridIndex, dest: GridIndex, impedance: &[f64]) -> Result<GRoute> {
    let no_route = || DscError::NoRoute { from: origin.0, to: dest.0 };
    if !graph.covered[origin.0] || !graph.covered[dest.0] {
        return Err(no_route());
    }
    if origin == dest {
        return Ok(GRoute(vec![origin]));
    }
    let min_imp = graph.covered_grids().iter().map(|g| impedance[g.0]).fold(f64::INFINITY, f64::min).max(0.0);
    let h = |g: GridIndex| graph.grid.chebyshev(g, dest) as f64 * min_imp;
    let n = graph.covered.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    cost[origin.0] = 0.0;
    heap.push(Reverse((Key(h(origin)), Key(0.0), origin.0)));
    while let Some(Reverse((_, Key(c), u))) = heap.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        if u == dest.0 {
            let mut path = vec![GridIndex(u)];
            let mut cur = u;
            while prev[cur] != usize::MAX {
                cur = prev[cur];
                path.push(GridIndex(cur));
            }
            path.reverse();
            return Ok(GRoute(path));
        }
        for v in graph.neighbours(GridIndex(u)) {
            if closed[v.0] {
                continue;
            }
            let nc = c + impedance[v.0];
            if nc < cost[v.0] {
                cost[v.0] = nc;
                prev[v.0] = u;
                heap.push(Reverse((Key(nc + h(v)), Key(nc), v.0)));
            }
        }
    }
    Err(no_route())
}

/// Summed impedance of the grids entered after the first.
pub fn path_impedance(route: &GRoute, impedance: &[f64]) -> f64 {
    route.0.iter().skip(1).map(|g| impedance[g.0]).sum()
}

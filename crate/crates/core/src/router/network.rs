//! Road network, node-to-grid assignment and the grid adjacency graph.

use std::collections::HashMap;
use std::path::Path;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{DscError, Result};
use crate::grid::{GridIndex, GridSpec};
use crate::textio::{fmt_num, CsvOut, Table};

pub const DEFAULT_SPEED_KMH: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: String,
    /// Raw coordinates in the grid's coordinate system.
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub from: usize,
    pub to: usize,
    pub length_km: f64,
    /// Overrides the network speed on this edge.
    pub speed_kmh: Option<f64>,
}

/// Directed road network with travel times in hours.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    edges: Vec<RoadEdge>,
    speed_kmh: f64,
    /// Outgoing (target, hours), sorted by target.
    out: Vec<Vec<(usize, f64)>>,
    /// Nodes in the largest strongly connected component.
    routable: Vec<bool>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<RoadNode>, edges: Vec<RoadEdge>, speed_kmh: f64) -> Result<Self> {
        if !(speed_kmh > 0.0 && speed_kmh.is_finite()) {
            return Err(DscError::Domain(format!("travel speed must be positive, got {speed_kmh}")));
        }
        let mut out = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= nodes.len() || e.to >= nodes.len() {
                return Err(DscError::Domain(format!("edge {i} references a missing node")));
            }
            if !(e.length_km > 0.0 && e.length_km.is_finite()) {
                return Err(DscError::Domain(format!("edge {i} has nonpositive length {}", e.length_km)));
            }
            let speed = e.speed_kmh.unwrap_or(speed_kmh);
            if !(speed > 0.0 && speed.is_finite()) {
                return Err(DscError::Domain(format!("edge {i} has nonpositive speed {speed}")));
            }
            out[e.from].push((e.to, e.length_km / speed));
        }
        for list in &mut out {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            // parallel edges: keep the fastest
            list.dedup_by_key(|e| e.0);
        }
        let mut graph = DiGraph::<(), ()>::with_capacity(nodes.len(), edges.len());
        for _ in &nodes {
            graph.add_node(());
        }
        for e in &edges {
            graph.add_edge(NodeIndex::new(e.from), NodeIndex::new(e.to), ());
        }
        let components = kosaraju_scc(&graph);
        let largest = components
            .iter()
            .max_by(|a, b| {
                let min_a = a.iter().map(|n| n.index()).min();
                let min_b = b.iter().map(|n| n.index()).min();
                a.len().cmp(&b.len()).then(min_b.cmp(&min_a))
            })
            .cloned()
            .unwrap_or_default();
        let mut routable = vec![false; nodes.len()];
        for n in &largest {
            routable[n.index()] = true;
        }
        let dropped = nodes.len() - largest.len();
        if dropped > 0 {
            log::warn!(
                "{dropped} road nodes lie outside the largest strongly connected component and are not routable"
            );
        }
        Ok(RoadNetwork { nodes, edges, speed_kmh, out, routable })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn speed_kmh(&self) -> f64 {
        self.speed_kmh
    }

    pub fn out_edges(&self, v: usize) -> &[(usize, f64)] {
        &self.out[v]
    }

    pub fn is_routable(&self, v: usize) -> bool {
        self.routable[v]
    }

    pub fn n_unroutable(&self) -> usize {
        self.routable.iter().filter(|r| !**r).count()
    }

    /// Travel time of the direct edge `u -> v`, if any.
    pub fn edge_time(&self, u: usize, v: usize) -> Option<f64> {
        self.out[u].binary_search_by_key(&v, |e| e.0).ok().map(|i| self.out[u][i].1)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Reads `node_id,x,y` (or `lon,lat`) and `from,to,length_km[,speed_kmh]`.
    pub fn read(nodes_path: &Path, edges_path: &Path, speed_kmh: f64) -> Result<Self> {
        let table = Table::read(nodes_path)?;
        let id = table.require(&["node_id", "id"])?;
        let x = table.require(&["x", "lon", "longitude"])?;
        let y = table.require(&["y", "lat", "latitude"])?;
        let mut nodes = Vec::with_capacity(table.rows.len());
        let mut index = HashMap::new();
        for r in 0..table.rows.len() {
            let name = table.str_at(r, id).to_string();
            if index.insert(name.clone(), nodes.len()).is_some() {
                return Err(DscError::parse(nodes_path, format!("duplicate node id {name}")));
            }
            nodes.push(RoadNode { id: name, x: table.f64_at(r, x)?, y: table.f64_at(r, y)? });
        }
        let table = Table::read(edges_path)?;
        let from = table.require(&["from", "u", "source"])?;
        let to = table.require(&["to", "v", "target"])?;
        let len = table.require(&["length_km", "length"])?;
        let speed = table.column(&["speed_kmh", "speed"]);
        let mut edges = Vec::with_capacity(table.rows.len());
        for r in 0..table.rows.len() {
            let lookup = |c: usize| {
                let name = table.str_at(r, c);
                index
                    .get(name)
                    .copied()
                    .ok_or_else(|| DscError::parse(edges_path, format!("row {}: unknown node {name:?}", r + 2)))
            };
            let speed_kmh = match speed {
                Some(c) if !table.str_at(r, c).is_empty() => Some(table.f64_at(r, c)?),
                _ => None,
            };
            edges.push(RoadEdge { from: lookup(from)?, to: lookup(to)?, length_km: table.f64_at(r, len)?, speed_kmh });
        }
        RoadNetwork::new(nodes, edges, speed_kmh)
    }

    pub fn write(&self, nodes_path: &Path, edges_path: &Path) -> Result<()> {
        let mut out = CsvOut::create(nodes_path, &["node_id", "x", "y"])?;
        for n in &self.nodes {
            out.row([n.id.clone(), fmt_num(n.x), fmt_num(n.y)])?;
        }
        out.finish()?;
        let mut out = CsvOut::create(edges_path, &["from", "to", "length_km", "speed_kmh"])?;
        for e in &self.edges {
            out.row([
                self.nodes[e.from].id.clone(),
                self.nodes[e.to].id.clone(),
                fmt_num(e.length_km),
                e.speed_kmh.map(fmt_num).unwrap_or_default(),
            ])?;
        }
        out.finish()
    }
}

/// 8-neighbour adjacency over grids flagged as covered.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    pub grid: GridSpec,
    pub covered: Vec<bool>,
}

impl GridGraph {
    /// Every grid of the lattice is traversable.
    pub fn full(grid: GridSpec) -> Self {
        let covered = vec![true; grid.n_grids()];
        GridGraph { grid, covered }
    }

    pub fn neighbours(&self, g: GridIndex) -> Vec<GridIndex> {
        self.grid.neighbours(g).into_iter().filter(|n| self.covered[n.0]).collect()
    }

    pub fn covered_grids(&self) -> Vec<GridIndex> {
        (0..self.covered.len()).filter(|&g| self.covered[g]).map(GridIndex).collect()
    }
}

/// Road nodes located in each grid.
#[derive(Debug, Clone)]
pub struct GridMap {
    pub graph: GridGraph,
    node_grid: Vec<Option<GridIndex>>,
    /// Routable nodes per grid, ascending.
    grid_nodes: Vec<Vec<usize>>,
}

impl GridMap {
    /// Assigns nodes to cells; nodes outside the lattice or outside the
    /// routable component are left unassigned.
    pub fn new(grid: &GridSpec, network: &RoadNetwork) -> Self {
        let mut node_grid = vec![None; network.n_nodes()];
        let mut grid_nodes = vec![Vec::new(); grid.n_grids()];
        let mut outside = 0;
        for (v, node) in network.nodes().iter().enumerate() {
            match grid.cell_of(node.x, node.y) {
                Some(g) if network.is_routable(v) => {
                    node_grid[v] = Some(g);
                    grid_nodes[g.0].push(v);
                }
                Some(_) => {}
                None => outside += 1,
            }
        }
        if outside > 0 {
            log::warn!("{outside} road nodes fall outside the grid lattice");
        }
        let covered = grid_nodes.iter().map(|n| !n.is_empty()).collect();
        GridMap { graph: GridGraph { grid: grid.clone(), covered }, node_grid, grid_nodes }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.graph.grid
    }

    pub fn grid_of(&self, v: usize) -> Option<GridIndex> {
        self.node_grid[v]
    }

    pub fn nodes_in(&self, g: GridIndex) -> &[usize] {
        &self.grid_nodes[g.0]
    }

    pub fn is_covered(&self, g: GridIndex) -> bool {
        self.graph.covered[g.0]
    }

    /// Routable node of `g` closest to the cell centroid, lowest index on ties.
    pub fn central_node(&self, g: GridIndex, network: &RoadNetwork) -> Option<usize> {
        let (cx, cy) = self.graph.grid.centroid(g);
        self.grid_nodes[g.0].iter().copied().min_by(|&a, &b| {
            let da = self.graph.grid.to_local_km(network.nodes()[a].x, network.nodes()[a].y);
            let db = self.graph.grid.to_local_km(network.nodes()[b].x, network.nodes()[b].y);
            let dist = |p: (f64, f64)| (p.0 - cx).powi(2) + (p.1 - cy).powi(2);
            dist(da).total_cmp(&dist(db)).then(a.cmp(&b))
        })
    }
}

/// Bidirectional 4-neighbour street lattice with one node per cell centre.
pub fn lattice_network(grid: &GridSpec, speed_kmh: f64) -> Result<RoadNetwork> {
    let mut nodes = Vec::with_capacity(grid.n_grids());
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let cs = grid.cell_size_km;
            nodes.push(RoadNode {
                id: format!("n{}", row * grid.cols + col),
                x: grid.origin.0 + (col as f64 + 0.5) * cs,
                y: grid.origin.1 + (row as f64 + 0.5) * cs,
            });
        }
    }
    let mut edges = Vec::new();
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let v = row * grid.cols + col;
            let mut link = |u: usize| {
                for (a, b) in [(v, u), (u, v)] {
                    edges.push(RoadEdge { from: a, to: b, length_km: grid.cell_size_km, speed_kmh: None });
                }
            };
            if col + 1 < grid.cols {
                link(v + 1);
            }
            if row + 1 < grid.rows {
                link(v + grid.cols);
            }
        }
    }
    RoadNetwork::new(nodes, edges, speed_kmh)
}

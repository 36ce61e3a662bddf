//! Scenario graph builders: single-hop star, wraparound grid, random
//! geometric, clustered, and random-waypoint mobility.
//!
//! Static builders produce a fixed adjacency; the mobility model advances
//! one step per transmission round and recomputes adjacency from node
//! positions. All adjacency is symmetric and loop-free.

use crate::rng::{self, Rng};
use crate::state::NodeId;
use rand_core::RngCore;
use thiserror::Error;

/// Waypoint speeds are drawn uniformly from this interval (m/s).
pub const SPEED_MIN: f64 = 2.0;
pub const SPEED_MAX: f64 = 4.0;

/// Arena side for the static random-geometric scenario (meters). The
/// communication radius is derived from it so the expected neighbor count
/// hits the requested density.
pub const ARENA_SIDE: f64 = 1000.0;

/// Extra arena scale for the mobile scenario. Random-waypoint movement
/// concentrates nodes toward the arena center, which raises the mean
/// degree above the uniform-placement value; the wider arena compensates
/// so the long-run mean degree stays near the requested density
/// (calibrated empirically over seeded runs).
pub const MOBILE_ARENA_SCALE: f64 = 1.13;

const CONNECTIVITY_RETRY_CAP: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("grid {0}x{1} too small for a distinct 8-neighborhood (need 3x3)")]
    GridTooSmall(usize, usize),
    #[error("no connected instance found within {0} attempts")]
    ConnectivityRetriesExhausted(usize),
    #[error("{0} nodes cannot be split into {1} equal clusters")]
    UnevenClusters(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Symmetric, loop-free neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<NodeId>>,
}

impl Adjacency {
    pub fn from_edges(n_nodes: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut neighbors = vec![Vec::new(); n_nodes];
        for &(a, b) in edges {
            debug_assert!(a != b);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { neighbors }
    }

    pub fn n_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors_of(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.neighbors[node].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.neighbors.is_empty() {
            return 0.0;
        }
        let total: usize = self.neighbors.iter().map(Vec::len).sum();
        total as f64 / self.neighbors.len() as f64
    }

    pub fn is_symmetric(&self) -> bool {
        self.neighbors.iter().enumerate().all(|(i, list)| {
            list.iter()
                .all(|&j| j != i && self.neighbors[j].binary_search(&i).is_ok())
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == n
    }

    pub fn component_count(&self) -> usize {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }

    /// One `a b` line per undirected edge (a < b), for debugging dumps.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, list) in self.neighbors.iter().enumerate() {
            for &b in list {
                if a < b {
                    out.push_str(&format!("{a} {b}\n"));
                }
            }
        }
        out
    }

    /// Drops the given undirected edges (used by tests on clustered builds).
    pub fn without_edges(&self, edges: &[(NodeId, NodeId)]) -> Adjacency {
        let mut copy = self.clone();
        for &(a, b) in edges {
            copy.neighbors[a].retain(|&x| x != b);
            copy.neighbors[b].retain(|&x| x != a);
        }
        copy
    }
}

/// Per-node random-waypoint state.
#[derive(Debug, Clone, PartialEq)]
struct MobileNode {
    pos: (f64, f64),
    waypoint: (f64, f64),
    speed: f64,
}

/// Random-waypoint mobility over a square arena with zero pause time.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityModel {
    nodes: Vec<MobileNode>,
    arena_side: f64,
    radius: f64,
    dt: f64,
    adjacency: Adjacency,
}

/// Steps walked (positions only) at construction so runs start from the
/// waypoint process's stationary regime instead of the uniform placement;
/// legs span a few hundred steps, so this covers several renewals.
const MOBILITY_WARMUP_STEPS: usize = 1000;

impl MobilityModel {
    /// Uniform initial placement followed by a fixed warmup walk into the
    /// stationary distribution (random waypoint concentrates nodes toward
    /// the arena center, so uniform starts are far from the long-run
    /// density). Per node, in id order, the draws are: position x, y;
    /// waypoint x, y; speed; then the warmup's redraws in step order.
    pub fn new(n: usize, arena_side: f64, radius: f64, dt: f64, rng: &mut impl RngCore) -> Self {
        let nodes: Vec<MobileNode> = (0..n)
            .map(|_| {
                let pos = (
                    rng::uniform_range(rng, 0.0, arena_side),
                    rng::uniform_range(rng, 0.0, arena_side),
                );
                let waypoint = (
                    rng::uniform_range(rng, 0.0, arena_side),
                    rng::uniform_range(rng, 0.0, arena_side),
                );
                let speed = rng::uniform_range(rng, SPEED_MIN, SPEED_MAX);
                MobileNode { pos, waypoint, speed }
            })
            .collect();
        let mut model = MobilityModel {
            nodes,
            arena_side,
            radius,
            dt,
            adjacency: Adjacency::from_edges(n, &[]),
        };
        for _ in 0..MOBILITY_WARMUP_STEPS {
            model.advance_positions(rng);
        }
        model.recompute_adjacency();
        model
    }

    /// Advances every node one `dt` toward its waypoint. A node that
    /// reaches its waypoint within the step stops there and redraws a new
    /// waypoint and speed (no overshoot, zero pause). Adjacency is then
    /// recomputed from the new positions.
    pub fn step(&mut self, rng: &mut impl RngCore) {
        self.advance_positions(rng);
        self.recompute_adjacency();
    }

    fn advance_positions(&mut self, rng: &mut impl RngCore) {
        for node in &mut self.nodes {
            let dx = node.waypoint.0 - node.pos.0;
            let dy = node.waypoint.1 - node.pos.1;
            let dist = (dx * dx + dy * dy).sqrt();
            let travel = node.speed * self.dt;
            if travel >= dist {
                node.pos = node.waypoint;
                node.waypoint = (
                    rng::uniform_range(rng, 0.0, self.arena_side),
                    rng::uniform_range(rng, 0.0, self.arena_side),
                );
                node.speed = rng::uniform_range(rng, SPEED_MIN, SPEED_MAX);
            } else {
                node.pos.0 += dx / dist * travel;
                node.pos.1 += dy / dist * travel;
            }
        }
    }

    fn recompute_adjacency(&mut self) {
        self.adjacency = adjacency_from_positions(
            &self.nodes.iter().map(|m| m.pos).collect::<Vec<_>>(),
            self.radius,
        );
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|m| m.pos).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.speed).collect()
    }

    pub fn arena_side(&self) -> f64 {
        self.arena_side
    }
}

fn adjacency_from_positions(positions: &[(f64, f64)], radius: f64) -> Adjacency {
    let mut edges = Vec::new();
    let r2 = radius * radius;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            if dx * dx + dy * dy <= r2 {
                edges.push((i, j));
            }
        }
    }
    Adjacency::from_edges(positions.len(), &edges)
}

/// A scenario graph: a fixed adjacency or a mobility model that yields a
/// fresh snapshot per round.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Static {
        adjacency: Adjacency,
        positions: Option<Vec<(f64, f64)>>,
    },
    Mobile(MobilityModel),
}

impl Topology {
    pub fn n_nodes(&self) -> usize {
        self.adjacency().n_nodes()
    }

    pub fn adjacency(&self) -> &Adjacency {
        match self {
            Topology::Static { adjacency, .. } => adjacency,
            Topology::Mobile(model) => model.adjacency(),
        }
    }

    /// Advances time-varying topologies by one round; static graphs are
    /// unchanged.
    pub fn step(&mut self, rng: &mut impl RngCore) {
        if let Topology::Mobile(model) = self {
            model.step(rng);
        }
    }

    fn from_adjacency(adjacency: Adjacency) -> Self {
        Topology::Static {
            adjacency,
            positions: None,
        }
    }
}

/// Single source (node 0) wired to every receiver; receivers are mutually
/// non-adjacent.
pub fn build_star(n_receivers: usize) -> Topology {
    assert!(n_receivers >= 1);
    let edges: Vec<(NodeId, NodeId)> = (1..=n_receivers).map(|r| (0, r)).collect();
    Topology::from_adjacency(Adjacency::from_edges(n_receivers + 1, &edges))
}

/// Torus-wrapped grid with the eight-cell Moore neighborhood: every node
/// has exactly eight neighbors.
pub fn build_grid(rows: usize, cols: usize) -> Result<Topology, TopologyError> {
    if rows < 3 || cols < 3 {
        return Err(TopologyError::GridTooSmall(rows, cols));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            for dr in [rows - 1, 0, 1] {
                for dc in [cols - 1, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let nr = (r + dr) % rows;
                    let nc = (c + dc) % cols;
                    let nid = nr * cols + nc;
                    if id < nid {
                        edges.push((id, nid));
                    }
                }
            }
        }
    }
    Ok(Topology::from_adjacency(Adjacency::from_edges(
        rows * cols,
        &edges,
    )))
}

/// Uniform node placement in a square arena with the communication radius
/// set for an expected neighbor count of `target_degree`; instances are
/// regenerated until connected.
pub fn build_random_geometric(
    n: usize,
    target_degree: f64,
    rng: &mut Rng,
) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidParameter("need at least 2 nodes"));
    }
    if target_degree <= 0.0 {
        return Err(TopologyError::InvalidParameter("target degree must be positive"));
    }
    let area = ARENA_SIDE * ARENA_SIDE;
    let radius = (target_degree * area / (std::f64::consts::PI * n as f64)).sqrt();
    for _ in 0..CONNECTIVITY_RETRY_CAP {
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng::uniform_range(rng, 0.0, ARENA_SIDE),
                    rng::uniform_range(rng, 0.0, ARENA_SIDE),
                )
            })
            .collect();
        let adjacency = adjacency_from_positions(&positions, radius);
        if adjacency.is_connected() {
            return Ok(Topology::Static {
                adjacency,
                positions: Some(positions),
            });
        }
    }
    Err(TopologyError::ConnectivityRetriesExhausted(
        CONNECTIVITY_RETRY_CAP,
    ))
}

/// A clustered build: the graph plus the inter-cluster bridge edges that
/// hold it together.
#[derive(Debug, Clone)]
pub struct ClusteredBuild {
    pub topology: Topology,
    pub bridges: Vec<(NodeId, NodeId)>,
    pub cluster_of: Vec<usize>,
}

/// `k` dense random-geometric clusters joined in a ring by
/// `bridges_per_pair` explicit edges between adjacent clusters.
pub fn build_clustered(
    n: usize,
    k_clusters: usize,
    bridges_per_pair: usize,
    rng: &mut Rng,
) -> Result<ClusteredBuild, TopologyError> {
    if k_clusters < 2 {
        return Err(TopologyError::InvalidParameter("need at least 2 clusters"));
    }
    if !n.is_multiple_of(k_clusters) {
        return Err(TopologyError::UnevenClusters(n, k_clusters));
    }
    if bridges_per_pair < 1 {
        return Err(TopologyError::InvalidParameter("need at least 1 bridge per pair"));
    }
    let size = n / k_clusters;
    if size < 2 {
        return Err(TopologyError::InvalidParameter("clusters need at least 2 nodes"));
    }

    let cluster_side = ARENA_SIDE / (k_clusters as f64).sqrt() / 2.0;
    let area = cluster_side * cluster_side;
    let radius = (8.0 * area / (std::f64::consts::PI * size as f64)).sqrt();

    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut all_positions = vec![(0.0, 0.0); n];
    let ring_radius = ARENA_SIDE;
    for cluster in 0..k_clusters {
        let angle = 2.0 * std::f64::consts::PI * cluster as f64 / k_clusters as f64;
        let (cx, cy) = (ring_radius * angle.cos(), ring_radius * angle.sin());
        // regenerate this cluster until internally connected
        let mut made = false;
        for _ in 0..CONNECTIVITY_RETRY_CAP {
            let positions: Vec<(f64, f64)> = (0..size)
                .map(|_| {
                    (
                        rng::uniform_range(rng, 0.0, cluster_side),
                        rng::uniform_range(rng, 0.0, cluster_side),
                    )
                })
                .collect();
            let local = adjacency_from_positions(&positions, radius);
            if !local.is_connected() {
                continue;
            }
            let base = cluster * size;
            for (i, &(x, y)) in positions.iter().enumerate() {
                all_positions[base + i] = (cx + x, cy + y);
            }
            for i in 0..size {
                for &j in local.neighbors_of(i) {
                    if i < j {
                        edges.push((base + i, base + j));
                    }
                }
            }
            made = true;
            break;
        }
        if !made {
            return Err(TopologyError::ConnectivityRetriesExhausted(
                CONNECTIVITY_RETRY_CAP,
            ));
        }
    }

    // Ring of bridges; with two clusters there is a single adjacent pair.
    let pair_count = if k_clusters == 2 { 1 } else { k_clusters };
    let mut bridges = Vec::new();
    for i in 0..pair_count {
        let a_base = i * size;
        let b_base = (i + 1) % k_clusters * size;
        let mut chosen: Vec<(NodeId, NodeId)> = Vec::new();
        while chosen.len() < bridges_per_pair {
            let u = a_base + rng::uniform_index(rng, size);
            let v = b_base + rng::uniform_index(rng, size);
            if !chosen.contains(&(u, v)) {
                chosen.push((u, v));
            }
        }
        bridges.extend_from_slice(&chosen);
    }
    edges.extend_from_slice(&bridges);

    let cluster_of = (0..n).map(|id| id / size).collect();
    Ok(ClusteredBuild {
        topology: Topology::Static {
            adjacency: Adjacency::from_edges(n, &edges),
            positions: Some(all_positions),
        },
        bridges,
        cluster_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn star_shape() {
        let topo = build_star(100);
        let adj = topo.adjacency();
        assert_eq!(adj.n_nodes(), 101);
        assert_eq!(adj.degree(0), 100);
        for r in 1..=100 {
            assert_eq!(adj.neighbors_of(r), &[0]);
        }
        assert!(adj.is_symmetric());
    }

    #[test]
    fn star_single_receiver_is_a_link() {
        let topo = build_star(1);
        assert_eq!(topo.adjacency().neighbors_of(0), &[1]);
        assert_eq!(topo.adjacency().neighbors_of(1), &[0]);
    }

    #[test]
    fn grid_10x10_all_degree_8() {
        let topo = build_grid(10, 10).unwrap();
        let adj = topo.adjacency();
        assert_eq!(adj.n_nodes(), 100);
        for i in 0..100 {
            assert_eq!(adj.degree(i), 8, "node {i}");
        }
        assert!(adj.is_symmetric());
        assert!(adj.is_connected());
    }

    #[test]
    fn grid_3x3_wraps_to_degree_8() {
        let topo = build_grid(3, 3).unwrap();
        for i in 0..9 {
            assert_eq!(topo.adjacency().degree(i), 8);
        }
    }

    #[test]
    fn grid_corner_wraps_to_opposite_corner() {
        let topo = build_grid(10, 10).unwrap();
        // node (0,0) is id 0, node (9,9) is id 99
        assert!(topo.adjacency().neighbors_of(0).contains(&99));
    }

    #[test]
    fn grid_too_small_errors() {
        assert_eq!(
            build_grid(2, 5).unwrap_err(),
            TopologyError::GridTooSmall(2, 5)
        );
    }

    #[test]
    fn random_geometric_two_nodes_with_huge_radius() {
        // target degree 1 for n=2 puts the radius above the arena diagonal
        let mut rng = stream_rng(1, 0);
        let area = ARENA_SIDE * ARENA_SIDE;
        let radius = (1.0 * area / (std::f64::consts::PI * 2.0)).sqrt();
        assert!(radius > 0.0);
        let topo = build_random_geometric(2, 1.0, &mut rng);
        // may need a retry if the pair lands far apart; radius ~ 400m of a
        // 1414m diagonal, so just check the contract on success
        if let Ok(t) = topo {
            assert!(t.adjacency().is_connected());
            assert_eq!(t.adjacency().degree(0), 1);
        }
    }

    #[test]
    fn random_geometric_is_connected_and_symmetric() {
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 7);
            let topo = build_random_geometric(100, 8.0, &mut rng).unwrap();
            assert!(topo.adjacency().is_connected());
            assert!(topo.adjacency().is_symmetric());
        }
    }

    #[test]
    fn random_geometric_mean_degree_band() {
        // Mean over seeds of the per-instance mean degree. Edge clipping in
        // a bounded arena pulls the measured value below the nominal 8
        // (about 13% at this radius/side ratio), and conditioning on
        // connectivity pulls it slightly up; the band was frozen from a
        // 100-seed measurement.
        let mut total = 0.0;
        let seeds = 100;
        for seed in 0..seeds {
            let mut rng = stream_rng(seed, 8);
            let topo = build_random_geometric(100, 8.0, &mut rng).unwrap();
            total += topo.adjacency().mean_degree();
        }
        let mean = total / seeds as f64;
        assert!((6.5..=8.5).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn clustered_contract() {
        let mut rng = stream_rng(3, 9);
        let build = build_clustered(100, 4, 1, &mut rng).unwrap();
        let adj = build.topology.adjacency();
        assert!(adj.is_connected());
        assert!(adj.is_symmetric());
        assert_eq!(build.bridges.len(), 4);
        // bridge endpoints connect across clusters
        for &(u, v) in &build.bridges {
            assert_ne!(build.cluster_of[u], build.cluster_of[v]);
            assert!(adj.neighbors_of(u).contains(&v));
        }
        // removing the bridges leaves exactly k components
        let cut = adj.without_edges(&build.bridges);
        assert_eq!(cut.component_count(), 4);
    }

    #[test]
    fn clustered_rejects_uneven_split() {
        let mut rng = stream_rng(4, 9);
        assert_eq!(
            build_clustered(100, 3, 1, &mut rng).unwrap_err(),
            TopologyError::UnevenClusters(100, 3)
        );
    }

    #[test]
    fn mobility_moves_exactly_speed_times_dt() {
        let mut rng = stream_rng(5, 10);
        let mut model = MobilityModel::new(1, 100.0, 10.0, 1.0, &mut rng);
        // overwrite with a controlled leg
        model.nodes[0] = MobileNode {
            pos: (0.0, 0.0),
            waypoint: (10.0, 0.0),
            speed: 2.0,
        };
        model.step(&mut rng);
        assert!((model.nodes[0].pos.0 - 2.0).abs() < 1e-12);
        assert_eq!(model.nodes[0].pos.1, 0.0);
    }

    #[test]
    fn mobility_arrival_redraws_without_overshoot() {
        let mut rng = stream_rng(6, 10);
        let mut model = MobilityModel::new(1, 100.0, 10.0, 1.0, &mut rng);
        model.nodes[0] = MobileNode {
            pos: (0.0, 0.0),
            waypoint: (1.0, 0.0),
            speed: 4.0,
        };
        model.step(&mut rng);
        // the node snapped to the old waypoint (not 4 m along the ray) and
        // drew a new leg; movement resumes next step
        let node = &model.nodes[0];
        assert_eq!(node.pos, (1.0, 0.0));
        assert_ne!(node.waypoint, (1.0, 0.0));
    }

    #[test]
    fn mobility_speeds_and_positions_stay_in_bounds() {
        let mut rng = stream_rng(7, 10);
        let side = 200.0;
        let mut model = MobilityModel::new(20, side, 50.0, 1.0, &mut rng);
        for _ in 0..500 {
            model.step(&mut rng);
            for node in &model.nodes {
                assert!((SPEED_MIN..=SPEED_MAX).contains(&node.speed));
                assert!((0.0..=side).contains(&node.pos.0));
                assert!((0.0..=side).contains(&node.pos.1));
            }
        }
    }

    #[test]
    fn mobility_long_run_mean_degree_near_target() {
        // The reference-scale mobile scenario: 100 nodes, radius for density 8,
        // arena widened by MOBILE_ARENA_SCALE to offset the waypoint
        // center bias. Calibrated to ~7.9; asserting the frozen band.
        let radius =
            (8.0 * ARENA_SIDE * ARENA_SIDE / (std::f64::consts::PI * 100.0)).sqrt();
        let mut total = 0.0;
        let mut samples = 0usize;
        for seed in 0..8 {
            let mut rng = stream_rng(seed, 14);
            let mut model =
                MobilityModel::new(100, ARENA_SIDE * MOBILE_ARENA_SCALE, radius, 1.0, &mut rng);
            for _ in 0..150 {
                model.step(&mut rng);
            }
            for _ in 0..100 {
                model.step(&mut rng);
                total += model.adjacency().mean_degree();
                samples += 1;
            }
        }
        let mean = total / samples as f64;
        assert!((7.0..=9.0).contains(&mean), "long-run mean degree {mean}");
    }

    #[test]
    fn mobility_adjacency_symmetric_every_step() {
        let mut rng = stream_rng(8, 10);
        let mut model = MobilityModel::new(30, 300.0, 80.0, 1.0, &mut rng);
        for _ in 0..50 {
            model.step(&mut rng);
            assert!(model.adjacency().is_symmetric());
        }
    }

    #[test]
    fn builders_are_deterministic() {
        let build = |seed| {
            let mut rng = stream_rng(seed, 11);
            build_random_geometric(50, 8.0, &mut rng).unwrap()
        };
        assert_eq!(build(9).adjacency(), build(9).adjacency());

        let mobile = |seed| {
            let mut rng = stream_rng(seed, 12);
            let mut m = MobilityModel::new(20, 300.0, 80.0, 1.0, &mut rng);
            let mut trace = Vec::new();
            for _ in 0..20 {
                m.step(&mut rng);
                trace.push(m.positions());
            }
            trace
        };
        assert_eq!(mobile(10), mobile(10));
    }
}

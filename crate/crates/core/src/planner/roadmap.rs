use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::sampling::{check_sizes, sample_nodes};
use super::search::{shortest_path, PlanPath};
use super::{PlanError, PlannerParams};
use crate::envgen::{CostMap, EnvironmentMap};
use crate::grid::{segment_samples, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCost {
    Cost(f64),
    Blocked,
}

/// Cost of the straight edge `ab`: regularly spaced samples (endpoints
/// included) each contribute `(length_weight + cost) * |ab| / m`.
/// Any sample inside a wall blocks the edge.
pub fn edge_cost(
    a: Point,
    b: Point,
    cost: &CostMap,
    env: &EnvironmentMap,
    params: &PlannerParams,
) -> Result<EdgeCost, PlanError> {
    if a == b {
        return Err(PlanError::DegenerateEdge);
    }
    // fixed endpoint order makes the sample set, and so the cost, symmetric
    let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    let len = a.distance(&b);
    let samples = segment_samples(a, b, params.sample_interval);
    let step = len / samples.len() as f64;
    let mut total = 0.0;
    for p in &samples {
        if env.is_blocked(*p) {
            return Ok(EdgeCost::Blocked);
        }
        total += (params.length_weight + cost.at(*p)) * step;
    }
    Ok(EdgeCost::Cost(total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
}

impl From<(usize, usize, f64)> for Edge {
    fn from((a, b, cost): (usize, usize, f64)) -> Self {
        Self { a, b, cost }
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.a, e.b, e.cost)
    }
}

/// Undirected roadmap. Nodes 0 and 1 are the start and goal of the query
/// it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RoadmapFile", into = "RoadmapFile")]
pub struct Roadmap {
    nodes: Vec<Point>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    params: Option<PlannerParams>,
    stalled: bool,
}

#[derive(Serialize, Deserialize)]
struct RoadmapFile {
    nodes: Vec<Point>,
    edges: Vec<Edge>,
    #[serde(default)]
    params: Option<PlannerParams>,
    #[serde(default)]
    stalled: bool,
}

impl From<RoadmapFile> for Roadmap {
    fn from(f: RoadmapFile) -> Self {
        let mut rm = Roadmap::from_edges(f.nodes, f.edges);
        rm.params = f.params;
        rm.stalled = f.stalled;
        rm
    }
}

impl From<Roadmap> for RoadmapFile {
    fn from(r: Roadmap) -> Self {
        RoadmapFile {
            nodes: r.nodes,
            edges: r.edges,
            params: r.params,
            stalled: r.stalled,
        }
    }
}

impl Roadmap {
    /// Builds a graph from explicit nodes and undirected edges. Duplicate
    /// pairs keep their first cost.
    pub fn from_edges(nodes: Vec<Point>, edges: Vec<Edge>) -> Self {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if e.a == e.b || !seen.insert(key) {
                continue;
            }
            adjacency[e.a].push((e.b, e.cost));
            adjacency[e.b].push((e.a, e.cost));
            kept.push(Edge {
                a: key.0,
                b: key.1,
                cost: e.cost,
            });
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(j, _)| j);
        }
        Self {
            nodes,
            edges: kept,
            adjacency,
            params: None,
            stalled: false,
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> Option<&PlannerParams> {
        self.params.as_ref()
    }

    /// Whether biased sampling fell back to uniform sampling.
    pub fn stalled(&self) -> bool {
        self.stalled
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Answers a new query on the same sampled nodes: the endpoints replace
    /// nodes 0 and 1 and are linked to their nearest neighbours; nothing is
    /// resampled.
    pub fn query(
        &self,
        env: &EnvironmentMap,
        cost: &CostMap,
        start: Point,
        goal: Point,
        params: &PlannerParams,
    ) -> Result<PlanResult, PlanError> {
        params.validate()?;
        check_sizes(env, cost)?;
        check_endpoints(env, start, goal)?;
        let mut nodes = self.nodes.clone();
        nodes[0] = start;
        nodes[1] = goal;
        let mut edges: Vec<Edge> = self.edges.iter().filter(|e| e.a > 1 && e.b > 1).copied().collect();
        for i in 0..2 {
            for j in nearest(&nodes, i, params.k_neighbors) {
                push_edge(&mut edges, &nodes, i, j, cost, env, params)?;
            }
        }
        let mut roadmap = Roadmap::from_edges(nodes, edges);
        roadmap.params = Some(params.clone());
        roadmap.stalled = self.stalled;
        Ok(PlanResult::search(roadmap))
    }
}

fn check_endpoints(env: &EnvironmentMap, start: Point, goal: Point) -> Result<(), PlanError> {
    if env.is_blocked(start) {
        return Err(PlanError::InvalidEndpoint("start"));
    }
    if env.is_blocked(goal) {
        return Err(PlanError::InvalidEndpoint("goal"));
    }
    Ok(())
}

/// Indices of the `k` nodes closest to `nodes[i]`, ties broken by index.
fn nearest(nodes: &[Point], i: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (nodes[i].distance(p), j))
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

fn push_edge(
    edges: &mut Vec<Edge>,
    nodes: &[Point],
    i: usize,
    j: usize,
    cost: &CostMap,
    env: &EnvironmentMap,
    params: &PlannerParams,
) -> Result<(), PlanError> {
    if nodes[i] == nodes[j] {
        return Ok(());
    }
    if let EdgeCost::Cost(c) = edge_cost(nodes[i], nodes[j], cost, env, params)? {
        edges.push(Edge { a: i, b: j, cost: c });
    }
    Ok(())
}

/// Roadmap over `{start, goal} ∪ sampled nodes`, each node linked to its
/// `k_neighbors` nearest nodes by every unblocked edge.
pub fn build_roadmap(
    env: &EnvironmentMap,
    cost: &CostMap,
    start: Point,
    goal: Point,
    params: &PlannerParams,
) -> Result<Roadmap, PlanError> {
    params.validate()?;
    check_sizes(env, cost)?;
    check_endpoints(env, start, goal)?;
    let sample = sample_nodes(cost, env, params)?;
    let mut nodes = Vec::with_capacity(sample.nodes.len() + 2);
    nodes.push(start);
    nodes.push(goal);
    nodes.extend(sample.nodes);

    let mut pairs = BTreeSet::new();
    for i in 0..nodes.len() {
        for j in nearest(&nodes, i, params.k_neighbors) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let mut edges = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        push_edge(&mut edges, &nodes, i, j, cost, env, params)?;
    }
    let mut roadmap = Roadmap::from_edges(nodes, edges);
    roadmap.params = Some(params.clone());
    roadmap.stalled = sample.stalled;
    Ok(roadmap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub roadmap: Roadmap,
    /// `None` when the goal is unreachable on the roadmap.
    pub path: Option<PlanPath>,
}

impl PlanResult {
    fn search(roadmap: Roadmap) -> Self {
        let path = if roadmap.nodes[0] == roadmap.nodes[1] {
            shortest_path(&roadmap, 0, 0).ok()
        } else {
            shortest_path(&roadmap, 0, 1).ok()
        };
        Self { roadmap, path }
    }
}

/// Builds a roadmap for `(start, goal)` and searches it.
pub fn plan(
    env: &EnvironmentMap,
    cost: &CostMap,
    start: Point,
    goal: Point,
    params: &PlannerParams,
) -> Result<PlanResult, PlanError> {
    let roadmap = build_roadmap(env, cost, start, goal, params)?;
    Ok(PlanResult::search(roadmap))
}

/// Uniform PRM: the same planner on an all-zero cost map.
pub fn plan_baseline(
    env: &EnvironmentMap,
    start: Point,
    goal: Point,
    params: &PlannerParams,
) -> Result<PlanResult, PlanError> {
    plan(env, &CostMap::zeros(env.width(), env.height()), start, goal, params)
}

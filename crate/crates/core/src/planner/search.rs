use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::roadmap::Roadmap;
use super::PlanError;
use crate::grid::Point;

/// A solution path on a roadmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPath {
    pub indices: Vec<usize>,
    pub points: Vec<Point>,
    pub edge_costs: Vec<f64>,
    pub total_cost: f64,
    /// Euclidean polyline length in cells.
    pub length: f64,
}

impl PlanPath {
    pub fn from_indices(roadmap: &Roadmap, indices: Vec<usize>, edge_costs: Vec<f64>) -> Self {
        let points: Vec<Point> = indices.iter().map(|&i| roadmap.nodes()[i]).collect();
        let length = points.windows(2).map(|w| w[0].distance(&w[1])).sum();
        let total_cost = edge_costs.iter().sum();
        Self {
            indices,
            points,
            edge_costs,
            total_cost,
            length,
        }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

// min-heap on (cost, node)
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra with a binary heap. Among equal-cost frontier entries the
/// smaller node index is settled first.
pub fn shortest_path(rm: &Roadmap, start: usize, goal: usize) -> Result<PlanPath, PlanError> {
    let n = rm.len();
    for idx in [start, goal] {
        if idx >= n {
            return Err(PlanError::InvalidIndex(idx));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(State { cost: 0.0, node: start });

    while let Some(State { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == goal {
            break;
        }
        for &(next, w) in rm.neighbors(node) {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = Some((node, w));
                heap.push(State { cost: c, node: next });
            }
        }
    }
    if !dist[goal].is_finite() {
        return Err(PlanError::NoPath);
    }

    let mut indices = vec![goal];
    let mut costs = Vec::new();
    let mut cur = goal;
    while let Some((p, w)) = prev[cur] {
        indices.push(p);
        costs.push(w);
        cur = p;
    }
    indices.reverse();
    costs.reverse();
    let mut path = PlanPath::from_indices(rm, indices, costs);
    path.total_cost = dist[goal];
    Ok(path)
}

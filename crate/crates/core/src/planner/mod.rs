//! Instruction-guided probabilistic roadmaps.
//!
//! The predicted cost map biases both halves of roadmap construction:
//! nodes are drawn with density inversely related to cost, and edge costs
//! integrate cost along the segment. A uniform PRM baseline is the same
//! planner run on an all-zero cost map.

mod roadmap;
mod sampling;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use roadmap::{build_roadmap, edge_cost, plan, plan_baseline, Edge, EdgeCost, PlanResult, Roadmap};
pub use sampling::{sample_nodes, NodeSample};
pub use search::{shortest_path, PlanPath};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error("cost map is {cost_w}x{cost_h} but the environment is {env_w}x{env_h}")]
    SizeMismatch {
        cost_w: usize,
        cost_h: usize,
        env_w: usize,
        env_h: usize,
    },
    #[error("environment has no traversable cell")]
    NoFreeSpace,
    #[error("{0} endpoint lies in a wall or outside the map")]
    InvalidEndpoint(&'static str),
    #[error("edge endpoints coincide")]
    DegenerateEdge,
    #[error("node index {0} out of range")]
    InvalidIndex(usize),
    #[error("goal is unreachable from start")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub n_nodes: usize,
    /// Floor added to the cost before inverting it for node acceptance.
    pub epsilon: f64,
    /// Fraction of nodes drawn uniformly regardless of cost.
    pub uniform_mix: f64,
    /// Nearest neighbours tried per node. 25 rather than the textbook 15:
    /// narrow gaps in thick walls need the extra reach to get threaded.
    pub k_neighbors: usize,
    /// Spacing of collision/cost samples along an edge, in cells.
    pub sample_interval: f64,
    /// Per-unit-length cost added to the accumulated map cost.
    pub length_weight: f64,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            n_nodes: 150,
            epsilon: 0.1,
            uniform_mix: 0.1,
            k_neighbors: 25,
            sample_interval: 0.5,
            length_weight: DEFAULT_LENGTH_WEIGHT,
            seed: 0,
        }
    }
}

/// Default `length_weight`. Small enough that crossing a two-cell band of
/// cost 1 outweighs any detour on a 64x64 map.
pub const DEFAULT_LENGTH_WEIGHT: f64 = 0.01;

impl PlannerParams {
    pub fn with_nodes(n_nodes: usize, seed: u64) -> Self {
        Self {
            n_nodes,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidParams(m.to_owned()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.uniform_mix) {
            return bad("uniform_mix must lie in [0, 1]");
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample_interval must be positive");
        }
        if self.k_neighbors == 0 {
            return bad("k_neighbors must be at least 1");
        }
        if !(self.length_weight > 0.0 && self.length_weight.is_finite()) {
            return bad("length_weight must be positive");
        }
        Ok(())
    }
}

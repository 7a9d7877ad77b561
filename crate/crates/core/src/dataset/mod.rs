//! Problem instances (map + instruction + ground-truth cost + ground-truth
//! path), split assignment, and the on-disk layout shared with the trainer.
//!
//! ```text
//! meta.json            written last; its presence marks a complete dataset
//! instructions.jsonl   {id, text, cls, split_tag, projected}
//! embeddings.jsonl     embedding cache records, one per instruction
//! instances/<id>/map.pgm, cost.pgm, meta.json
//! ```

mod build;
mod io;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envgen::{CostMap, EnvError, EnvKind, EnvironmentMap, InstructionClass, SynthConfig};
use crate::grid::Point;
use crate::instructions::{InstructionError, InstructionRecord, SplitTag};
use crate::metrics::{check_success, CHECK_INTERVAL, SUCCESS_THRESHOLD};
use crate::planner::{plan, PlanError, PlannerParams};

pub use build::{build_dataset, instance_seed};
pub use io::{load_dataset, Dataset};

pub const GT_NODES: usize = 400;
pub const GT_RETRIES: u64 = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Instruction(#[from] InstructionError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("ground-truth planner failed after {0} attempts")]
    OracleFailed(u64),
    #[error("instance {id}: no solvable instance after {attempts} regenerations")]
    RegenerationExhausted { id: usize, attempts: usize },
    #[error("no embedding for {0:?}")]
    MissingEmbedding(String),
    #[error("output directory {0} is not empty")]
    OutputExists(PathBuf),
    #[error("invalid dataset at {path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

/// Where raw 1536-D instruction embeddings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// Offline hash-seeded pseudo-embeddings.
    Pseudo,
    /// A prefilled embedding cache (see `igprm embed`).
    Cache { path: PathBuf, model: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    /// Half (rounded up) become test_known, the rest test_unknown.
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        Self {
            train: 800,
            val: 100,
            test: 200,
        }
    }
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn test_unknown(&self) -> usize {
        self.test / 2
    }

    pub fn test_known(&self) -> usize {
        self.test - self.test_unknown()
    }

    /// Split of instance `id`; ids run train, val, test_known, test_unknown.
    pub fn split_of(&self, id: usize) -> SplitTag {
        if id < self.train {
            SplitTag::Train
        } else if id < self.train + self.val {
            SplitTag::Val
        } else if id < self.train + self.val + self.test_known() {
            SplitTag::TestKnown
        } else {
            SplitTag::TestUnknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub kind: EnvKind,
    pub counts: SplitCounts,
    pub seed: u64,
    /// Projected embedding width stored in instructions.jsonl.
    pub k: usize,
    pub projection_seed: u64,
    /// Sentences in the instruction pool; 0 picks 132 (synthetic) or 90 (indoor).
    pub instruction_count: usize,
    /// Share of each class's sentences withheld for test_unknown.
    pub unknown_fraction: f64,
    /// Restricts instance classes; empty means every class of `kind`.
    pub classes: Vec<InstructionClass>,
    pub embedding: EmbeddingMode,
    pub gt_nodes: usize,
    pub synth: SynthConfig,
    /// Grayscale floor plans to crop from (indoor only).
    pub indoor_maps: Vec<PathBuf>,
    pub step_count: usize,
    pub step_size: usize,
    /// Minimum start-goal distance on indoor crops, in cells.
    pub min_endpoint_distance: f64,
    /// Regenerations allowed per instance before giving up.
    pub max_regenerations: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: EnvKind::Synthetic,
            counts: SplitCounts::default(),
            seed: 0,
            k: crate::costnet::DEFAULT_K,
            projection_seed: 42,
            instruction_count: 0,
            unknown_fraction: 0.25,
            classes: Vec::new(),
            embedding: EmbeddingMode::Pseudo,
            gt_nodes: GT_NODES,
            synth: SynthConfig::default(),
            indoor_maps: Vec::new(),
            step_count: 20,
            step_size: 4,
            min_endpoint_distance: 24.0,
            max_regenerations: 200,
        }
    }
}

impl DatasetConfig {
    pub fn instruction_count(&self) -> usize {
        match (self.instruction_count, self.kind) {
            (0, EnvKind::Synthetic) => 132,
            (0, EnvKind::Indoor) => 90,
            (n, _) => n,
        }
    }

    pub fn classes(&self) -> Vec<InstructionClass> {
        if self.classes.is_empty() {
            InstructionClass::for_kind(self.kind).to_vec()
        } else {
            self.classes.clone()
        }
    }
}

/// One planning query with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub id: usize,
    pub env: EnvironmentMap,
    pub instruction_id: usize,
    pub start: Point,
    pub goal: Point,
    pub gt_cost: CostMap,
    pub gt_path: Vec<Point>,
    pub split: SplitTag,
}

impl ProblemInstance {
    /// Checks the instance invariants against its instruction.
    pub fn validate(&self, instruction: &InstructionRecord) -> Result<(), String> {
        if !self.gt_cost.matches(&self.env) {
            return Err("cost map and map sizes differ".into());
        }
        if self.gt_path.first() != Some(&self.start) || self.gt_path.last() != Some(&self.goal) {
            return Err("gt_path does not run from start to goal".into());
        }
        if !check_success(Some(&self.gt_path), &self.gt_cost, SUCCESS_THRESHOLD, CHECK_INTERVAL) {
            return Err("gt_path crosses a high-cost cell".into());
        }
        if instruction.id != self.instruction_id {
            return Err("instruction id mismatch".into());
        }
        if instruction.cls.kind() != self.env.kind() {
            return Err("instruction class does not fit the map kind".into());
        }
        let withheld = instruction.split_tag == SplitTag::TestUnknown;
        if withheld != (self.split == SplitTag::TestUnknown) {
            return Err(format!(
                "split {} inconsistent with instruction tag {}",
                self.split.as_str(),
                instruction.split_tag.as_str()
            ));
        }
        Ok(())
    }
}

/// Ground-truth path: the planner on the ground-truth cost with `n` nodes,
/// retried with fresh seeds until a path exists and passes the success check.
/// Interior vertices are rounded to 6 fractional digits before the check so
/// the stored path is exactly the validated one.
pub fn gen_gt_path(
    env: &EnvironmentMap,
    gt_cost: &CostMap,
    start: Point,
    goal: Point,
    n: usize,
    seed: u64,
) -> Result<Vec<Point>, DatasetError> {
    for r in 0..GT_RETRIES {
        let params = PlannerParams::with_nodes(n, seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let Some(path) = plan(env, gt_cost, start, goal, &params)?.path else {
            continue;
        };
        let mut points: Vec<Point> = path.points.iter().map(Point::quantized).collect();
        // endpoints are stored exactly as given
        points[0] = start;
        if points.len() == 1 {
            points.push(goal);
        }
        *points.last_mut().unwrap() = goal;
        if check_success(Some(&points), gt_cost, SUCCESS_THRESHOLD, CHECK_INTERVAL) {
            return Ok(points);
        }
    }
    Err(DatasetError::OracleFailed(GT_RETRIES))
}

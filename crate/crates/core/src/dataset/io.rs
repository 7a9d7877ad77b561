use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetConfig, DatasetError, ProblemInstance, SplitCounts};
use crate::envgen::{CostMap, EnvKind, EnvironmentMap, InstructionClass};
use crate::grid::Point;
use crate::instructions::{read_records, write_records, CacheRecord, InstructionRecord, SplitTag, EMBED_DIM};

pub const META_FILE: &str = "meta.json";
pub const INSTRUCTIONS_FILE: &str = "instructions.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const INSTANCES_DIR: &str = "instances";
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: EnvKind,
    pub counts: SplitCounts,
    pub test_known: usize,
    pub test_unknown: usize,
    pub seed: u64,
    pub k: usize,
    pub projection_seed: u64,
    pub embedding_model: String,
    pub instruction_count: usize,
    pub classes: Vec<InstructionClass>,
    pub gt_nodes: usize,
}

impl DatasetMeta {
    pub(super) fn new(cfg: &DatasetConfig, embedding_model: String) -> Self {
        Self {
            kind: cfg.kind,
            counts: cfg.counts,
            test_known: cfg.counts.test_known(),
            test_unknown: cfg.counts.test_unknown(),
            seed: cfg.seed,
            k: cfg.k,
            projection_seed: cfg.projection_seed,
            embedding_model,
            instruction_count: cfg.instruction_count(),
            classes: cfg.classes(),
            gt_nodes: cfg.gt_nodes,
        }
    }
}

/// A complete dataset held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub instructions: Vec<InstructionRecord>,
    /// Sorted by id.
    pub instances: Vec<ProblemInstance>,
}

impl Dataset {
    pub fn instruction(&self, id: usize) -> Option<&InstructionRecord> {
        self.instructions.get(id).filter(|r| r.id == id)
    }

    pub fn instruction_for(&self, inst: &ProblemInstance) -> &InstructionRecord {
        self.instruction(inst.instruction_id).expect("validated on construction")
    }

    pub fn split(&self, tag: SplitTag) -> impl Iterator<Item = &ProblemInstance> {
        self.instances.iter().filter(move |i| i.split == tag)
    }

    pub fn test_instances(&self) -> impl Iterator<Item = &ProblemInstance> {
        self.instances.iter().filter(|i| i.split.is_test())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstructionRow {
    id: usize,
    text: String,
    cls: InstructionClass,
    split_tag: SplitTag,
    projected: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct InstanceFile {
    id: usize,
    instruction_id: usize,
    start: Point,
    goal: Point,
    gt_path: Vec<Point>,
    split: SplitTag,
}

pub fn instance_dir(root: &Path, id: usize) -> PathBuf {
    root.join(INSTANCES_DIR).join(format!("{id:06}"))
}

fn fmt_point(out: &mut String, p: Point) {
    write!(out, "[{:.6},{:.6}]", p.x, p.y).unwrap();
}

/// Instance metadata with every coordinate written as fixed 6-digit decimals.
fn instance_json(inst: &ProblemInstance) -> String {
    let mut s = format!("{{\"id\":{},\"instruction_id\":{},\"start\":", inst.id, inst.instruction_id);
    fmt_point(&mut s, inst.start);
    s.push_str(",\"goal\":");
    fmt_point(&mut s, inst.goal);
    s.push_str(",\"gt_path\":[");
    for (i, p) in inst.gt_path.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        fmt_point(&mut s, *p);
    }
    writeln!(s, "],\"split\":\"{}\"}}", inst.split.as_str()).unwrap();
    s
}

pub(super) fn write_dataset(ds: &Dataset, root: &Path) -> Result<(), DatasetError> {
    let mut lines = String::new();
    for r in &ds.instructions {
        let row = InstructionRow {
            id: r.id,
            text: r.text.clone(),
            cls: r.cls,
            split_tag: r.split_tag,
            projected: r.projected.clone(),
        };
        lines.push_str(&serde_json::to_string(&row)?);
        lines.push('\n');
    }
    fs::write(root.join(INSTRUCTIONS_FILE), lines)?;

    let records: Vec<CacheRecord> = ds
        .instructions
        .iter()
        .map(|r| CacheRecord {
            text: r.text.clone(),
            model: ds.meta.embedding_model.clone(),
            dim: r.embedding.len(),
            vector: r.embedding.clone(),
        })
        .collect();
    write_records(&root.join(EMBEDDINGS_FILE), &records)?;

    ds.instances.par_iter().try_for_each(|inst| -> Result<(), DatasetError> {
        let dir = instance_dir(root, inst.id);
        fs::create_dir_all(&dir)?;
        inst.env.save_pgm(dir.join("map.pgm"))?;
        inst.gt_cost.save_pgm(dir.join("cost.pgm"))?;
        fs::write(dir.join("meta.json"), instance_json(inst))?;
        Ok(())
    })?;

    // commit point
    fs::write(root.join(META_FILE), serde_json::to_string_pretty(&ds.meta)? + "\n")?;
    Ok(())
}

fn invalid(path: &Path, reason: impl Into<String>) -> DatasetError {
    DatasetError::Invalid {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

fn load_instructions(root: &Path, meta: &DatasetMeta) -> Result<Vec<InstructionRecord>, DatasetError> {
    let path = root.join(INSTRUCTIONS_FILE);
    let embeddings: HashMap<String, Vec<f64>> = read_records(&root.join(EMBEDDINGS_FILE))?
        .into_iter()
        .filter(|r| r.model == meta.embedding_model)
        .map(|r| (r.text, r.vector))
        .collect();
    let mut out = Vec::new();
    for (line_no, line) in fs::read_to_string(&path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: InstructionRow = serde_json::from_str(line)?;
        if row.id != out.len() {
            return Err(invalid(&path, format!("line {}: id {} out of sequence", line_no + 1, row.id)));
        }
        if row.projected.len() != meta.k {
            return Err(invalid(&path, format!("instruction {} projects to {} dims, meta says {}", row.id, row.projected.len(), meta.k)));
        }
        let embedding = embeddings
            .get(&row.text)
            .cloned()
            .ok_or_else(|| invalid(&path, format!("no embedding for instruction {}", row.id)))?;
        if embedding.len() != EMBED_DIM {
            return Err(invalid(&path, format!("instruction {} embedding has {} dims", row.id, embedding.len())));
        }
        out.push(InstructionRecord {
            id: row.id,
            text: row.text,
            cls: row.cls,
            embedding,
            projected: row.projected,
            split_tag: row.split_tag,
        });
    }
    Ok(out)
}

fn load_instance(root: &Path, id: usize, kind: EnvKind) -> Result<ProblemInstance, DatasetError> {
    let dir = instance_dir(root, id);
    let meta_path = dir.join("meta.json");
    let f: InstanceFile = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    if f.id != id {
        return Err(invalid(&meta_path, format!("id {} stored under {id}", f.id)));
    }
    let env = EnvironmentMap::load_pgm(dir.join("map.pgm"), kind)?;
    let gt_cost = CostMap::load_pgm(dir.join("cost.pgm"))?;
    Ok(ProblemInstance {
        id,
        env,
        instruction_id: f.instruction_id,
        start: f.start,
        goal: f.goal,
        gt_cost,
        gt_path: f.gt_path,
        split: f.split,
    })
}

/// Loads a dataset directory and re-validates every instance.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} is not a directory", root.display()),
        )
        .into());
    }
    if root.join(FAILED_MARKER).exists() {
        let why = fs::read_to_string(root.join(FAILED_MARKER)).unwrap_or_default();
        return Err(invalid(root, format!("build failed: {}", why.trim())));
    }
    let meta_path = root.join(META_FILE);
    if !meta_path.exists() {
        return Err(invalid(root, "missing meta.json (incomplete build?)"));
    }
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    let instructions = load_instructions(root, &meta)?;
    let n = meta.counts.total();
    let on_disk = fs::read_dir(root.join(INSTANCES_DIR))?.count();
    if on_disk != n {
        return Err(invalid(root, format!("{on_disk} instance folders, meta declares {n}")));
    }
    let instances = (0..n)
        .into_par_iter()
        .map(|id| load_instance(root, id, meta.kind))
        .collect::<Result<Vec<_>, _>>()?;

    for inst in &instances {
        let instr = instructions
            .get(inst.instruction_id)
            .ok_or_else(|| invalid(root, format!("instance {} names unknown instruction {}", inst.id, inst.instruction_id)))?;
        if inst.split != meta.counts.split_of(inst.id) {
            return Err(invalid(root, format!("instance {} has split {}", inst.id, inst.split.as_str())));
        }
        inst.validate(instr)
            .map_err(|reason| invalid(&instance_dir(root, inst.id), reason))?;
    }
    Ok(Dataset {
        meta,
        instructions,
        instances,
    })
}

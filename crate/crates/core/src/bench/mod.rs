//! Experiment harness: method x node-count grid, embedding-width ablation,
//! runtime measurement and SVG figures.

mod render;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costnet::{predict, CostNetError, Model};
use crate::dataset::{instance_seed, Dataset, ProblemInstance};
use crate::envgen::{CostMap, InstructionClass};
use crate::instructions::{make_projection, project, InstructionError, SplitTag};
use crate::metrics::{evaluate, MetricsError};
use crate::planner::{plan, PlanError, PlannerParams};

pub use render::{render_svg, svg_document, Palette, PALETTE};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("method igprm_learned needs a weight file")]
    MissingWeights,
    #[error("nothing to evaluate: {0}")]
    EmptyReport(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    CostNet(#[from] CostNetError),
    #[error(transparent)]
    Instruction(#[from] InstructionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IgprmLearned,
    IgprmOracle,
    PrmBaseline,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::IgprmLearned => "igprm_learned",
            Method::IgprmOracle => "igprm_oracle",
            Method::PrmBaseline => "prm_baseline",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "igprm_learned" => Ok(Method::IgprmLearned),
            "igprm_oracle" => Ok(Method::IgprmOracle),
            "prm_baseline" => Ok(Method::PrmBaseline),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub node_counts: Vec<usize>,
    pub trials_per_instance: usize,
    pub seed: u64,
    /// Remaining planner knobs; `n_nodes` and `seed` are overridden per run.
    pub planner: PlannerParams,
    /// Evaluate only instances whose instruction has one of these classes.
    pub classes: Vec<InstructionClass>,
    /// Cap on test instances (in id order); 0 means all.
    pub max_instances: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::IgprmLearned, Method::IgprmOracle, Method::PrmBaseline],
            node_counts: vec![50, 150, 300],
            trials_per_instance: 1,
            seed: 0,
            planner: PlannerParams::default(),
            classes: Vec::new(),
            max_instances: 0,
        }
    }
}

/// One evaluated planning run. The first nine columns are the canonical
/// per-instance report; `split` and `trial` identify the aggregation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance_id: usize,
    pub method: Method,
    pub n_nodes: usize,
    pub success: bool,
    pub spl_term: f64,
    /// Empty when no path was produced.
    pub dtw: Option<f64>,
    pub produced_length: f64,
    pub hidden_cost: f64,
    /// Roadmap construction plus search; excludes cost prediction.
    pub wall_clock_ms: f64,
    pub split: SplitTag,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub n_nodes: usize,
    pub split: SplitTag,
    pub runs: usize,
    pub success_rate: f64,
    pub mean_spl: f64,
    /// Mean over runs that produced a path.
    pub mean_dtw: Option<f64>,
    pub dtw_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    pub fn aggregate(&self, method: Method, n_nodes: usize, split: SplitTag) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.n_nodes == n_nodes && a.split == split)
    }
}

/// Means per `(method, n_nodes, split)`, in key order.
pub fn aggregate_rows(rows: &[Row]) -> Vec<Aggregate> {
    let mut cells: BTreeMap<(Method, usize, SplitTag), Vec<&Row>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.method, r.n_nodes, r.split)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((method, n_nodes, split), rs)| {
            let n = rs.len() as f64;
            let dtws: Vec<f64> = rs.iter().filter_map(|r| r.dtw).collect();
            Aggregate {
                method,
                n_nodes,
                split,
                runs: rs.len(),
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / n,
                mean_spl: rs.iter().map(|r| r.spl_term).sum::<f64>() / n,
                mean_dtw: (!dtws.is_empty()).then(|| dtws.iter().sum::<f64>() / dtws.len() as f64),
                dtw_runs: dtws.len(),
            }
        })
        .collect()
}

pub fn write_rows_csv<W: Write>(rows: &[Row], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: std::io::Read>(input: R) -> Result<Vec<Row>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<Row>, _>>()?)
}

pub fn write_aggregates_csv<W: Write>(aggs: &[Aggregate], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for a in aggs {
        w.serialize(a)?;
    }
    w.flush()?;
    Ok(())
}

/// Instruction embedding as the network consumes it.
pub fn embedding_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn selected<'a>(ds: &'a Dataset, classes: &[InstructionClass], max: usize) -> Vec<&'a ProblemInstance> {
    let it = ds
        .test_instances()
        .filter(|i| classes.is_empty() || classes.contains(&ds.instruction_for(i).cls));
    if max == 0 {
        it.collect()
    } else {
        it.take(max).collect()
    }
}

/// Planner seed shared by every method for one (instance, trial, n):
/// methods see the same random stream, so differences come from the cost map.
fn run_seed(seed: u64, id: usize, trial: usize, n: usize) -> u64 {
    instance_seed(seed ^ ((trial as u64) << 32) ^ n as u64, id)
}

/// Plans and scores one instance on `cost` for every node count and trial.
fn run_method(
    inst: &ProblemInstance,
    cost: &CostMap,
    method: Method,
    cfg: &BenchConfig,
) -> Result<Vec<Row>, BenchError> {
    let mut rows = Vec::new();
    for trial in 0..cfg.trials_per_instance {
        for &n in &cfg.node_counts {
            let params = PlannerParams {
                n_nodes: n,
                seed: run_seed(cfg.seed, inst.id, trial, n),
                ..cfg.planner.clone()
            };
            let t0 = Instant::now();
            let result = plan(&inst.env, cost, inst.start, inst.goal, &params)?;
            let wall_clock_ms = t0.elapsed().as_secs_f64() * 1e3;
            let produced = result.path.as_ref().map(|p| p.points.as_slice());
            let e = evaluate(produced, &inst.gt_path, &inst.gt_cost);
            rows.push(Row {
                instance_id: inst.id,
                method,
                n_nodes: n,
                success: e.success,
                spl_term: e.spl_term,
                dtw: e.dtw,
                produced_length: e.produced_length,
                hidden_cost: e.hidden_cost,
                wall_clock_ms,
                split: inst.split,
                trial,
            });
        }
    }
    Ok(rows)
}

/// Runs every (test instance x method x node count x trial). Rows are
/// sorted by instance, method, trial and node count; everything except
/// `wall_clock_ms` is a pure function of (dataset, config).
pub fn run_benchmark(ds: &Dataset, model: Option<&Model>, cfg: &BenchConfig) -> Result<Report, BenchError> {
    if cfg.trials_per_instance == 0 || cfg.methods.is_empty() || cfg.node_counts.is_empty() {
        return Err(BenchError::EmptyReport("no trials, methods or node counts".into()));
    }
    if cfg.methods.contains(&Method::IgprmLearned) && model.is_none() {
        return Err(BenchError::MissingWeights);
    }
    cfg.planner.validate()?;
    let instances = selected(ds, &cfg.classes, cfg.max_instances);
    if instances.is_empty() {
        return Err(BenchError::EmptyReport("no matching test instances".into()));
    }

    let per_instance = instances
        .par_iter()
        .map(|inst| -> Result<Vec<Row>, BenchError> {
            let mut rows = Vec::new();
            for &method in &cfg.methods {
                let cost = match method {
                    Method::PrmBaseline => CostMap::zeros(inst.env.width(), inst.env.height()),
                    Method::IgprmOracle => inst.gt_cost.clone(),
                    Method::IgprmLearned => {
                        let model = model.expect("checked above");
                        let emb = embedding_f32(&ds.instruction_for(inst).projected);
                        predict(model, &inst.env.to_input_channels(), &emb)?
                    }
                };
                rows.extend(run_method(inst, &cost, method, cfg)?);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<Row> = per_instance.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.instance_id, r.method, r.trial, r.n_nodes));
    let aggregates = aggregate_rows(&rows);
    Ok(Report { rows, aggregates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub dim: usize,
    pub split: SplitTag,
    pub runs: usize,
    pub success_rate: f64,
    pub mean_spl: f64,
    pub mean_dtw: Option<f64>,
}

/// Cost source for each embedding width in an ablation.
pub enum AblationCosts<'a> {
    /// One model per width, each fed the embedding re-projected to that width.
    Models(&'a BTreeMap<usize, Model>),
    /// Ground truth for every width; checks harness plumbing.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub dims: Vec<usize>,
    pub n_nodes: usize,
    pub seed: u64,
    pub planner: PlannerParams,
    pub max_instances: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            dims: vec![8, 16, 32, 64, 128],
            n_nodes: 150,
            seed: 0,
            planner: PlannerParams::default(),
            max_instances: 0,
        }
    }
}

/// SPL/DTW per embedding width, known and unknown test splits separately.
/// Embeddings are re-projected from the stored 1536-D vectors with the
/// dataset's projection seed at each width.
pub fn run_ablation(ds: &Dataset, costs: AblationCosts<'_>, cfg: &AblationConfig) -> Result<Vec<AblationRow>, BenchError> {
    if cfg.dims.is_empty() {
        return Err(BenchError::EmptyReport("no embedding widths".into()));
    }
    let instances = selected(ds, &[], cfg.max_instances);
    if instances.is_empty() {
        return Err(BenchError::EmptyReport("no test instances".into()));
    }
    let bench = BenchConfig {
        methods: vec![Method::IgprmLearned],
        node_counts: vec![cfg.n_nodes],
        trials_per_instance: 1,
        seed: cfg.seed,
        planner: cfg.planner.clone(),
        classes: Vec::new(),
        max_instances: 0,
    };
    let mut out = Vec::new();
    for &dim in &cfg.dims {
        let projection = make_projection(ds.meta.projection_seed, dim)?;
        let model = match &costs {
            AblationCosts::Models(m) => Some(m.get(&dim).ok_or(BenchError::MissingWeights)?),
            AblationCosts::Oracle => None,
        };
        let rows = instances
            .par_iter()
            .map(|inst| -> Result<Vec<Row>, BenchError> {
                let cost = match model {
                    Some(m) => {
                        let emb = project(&ds.instruction_for(inst).embedding, &projection)?;
                        predict(m, &inst.env.to_input_channels(), &embedding_f32(&emb))?
                    }
                    None => inst.gt_cost.clone(),
                };
                run_method(inst, &cost, Method::IgprmLearned, &bench)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Row> = rows.into_iter().flatten().collect();
        for split in [SplitTag::TestKnown, SplitTag::TestUnknown] {
            let cell: Vec<Row> = rows.iter().filter(|r| r.split == split).cloned().collect();
            if let Some(a) = aggregate_rows(&cell).first() {
                out.push(AblationRow {
                    dim,
                    split,
                    runs: a.runs,
                    success_rate: a.success_rate,
                    mean_spl: a.mean_spl,
                    mean_dtw: a.mean_dtw,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub predict_ms: f64,
    pub plan_ms: f64,
    pub repeats: usize,
}

/// Mean wall-clock of cost prediction and of planning on the predicted
/// map, timed separately over `repeats` runs on the calling thread.
pub fn measure_runtime(
    inst: &ProblemInstance,
    embedding: &[f32],
    model: &Model,
    n_nodes: usize,
    repeats: usize,
    seed: u64,
) -> Result<Runtime, BenchError> {
    if repeats == 0 {
        return Err(BenchError::EmptyReport("repeats must be positive".into()));
    }
    let channels = inst.env.to_input_channels();
    let (mut predict_s, mut plan_s) = (0.0, 0.0);
    for r in 0..repeats {
        let t0 = Instant::now();
        let cost = predict(model, &channels, embedding)?;
        predict_s += t0.elapsed().as_secs_f64();
        let params = PlannerParams {
            n_nodes,
            seed: seed.wrapping_add(r as u64),
            ..PlannerParams::default()
        };
        let t1 = Instant::now();
        plan(&inst.env, &cost, inst.start, inst.goal, &params)?;
        plan_s += t1.elapsed().as_secs_f64();
    }
    Ok(Runtime {
        predict_ms: predict_s * 1e3 / repeats as f64,
        plan_ms: plan_s * 1e3 / repeats as f64,
        repeats,
    })
}

/// Writes the per-run CSV and the aggregate CSV next to each other.
pub fn write_report(report: &Report, rows_path: &Path, aggregates_path: &Path) -> Result<(), BenchError> {
    write_rows_csv(&report.rows, std::fs::File::create(rows_path)?)?;
    write_aggregates_csv(&report.aggregates, std::fs::File::create(aggregates_path)?)?;
    Ok(())
}

mod error;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use igprm_core::bench::{
    embedding_f32, measure_runtime, render_svg, run_ablation, run_benchmark, write_ablation_csv, write_report,
    AblationConfig, AblationCosts, BenchConfig, Method,
};
use igprm_core::costnet::{load_weights, predict, Model};
use igprm_core::dataset::{build_dataset, load_dataset, Dataset, DatasetConfig, EmbeddingMode, ProblemInstance};
use igprm_core::envgen::{
    gen_synthetic_env, load_indoor_map, place_step_obstacles, CostMap, EnvKind, EnvironmentMap, InstructionClass,
    Passage, SynthConfig,
};
use igprm_core::grid::Point;
use igprm_core::instructions::{
    generate_instructions, make_projection, project, pseudo_embed, EmbeddingCache, EmbeddingClient, EndpointConfig,
    PSEUDO_MODEL,
};
use igprm_core::metrics::evaluate;
use igprm_core::planner::{plan, PlanPath, PlannerParams, Roadmap};

use error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "igprm", version, about = "Instruction-guided probabilistic roadmaps")]
struct Cli {
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config; missing sections and fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate one synthetic wall-and-passage map.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Crop a floor plan and scatter step obstacles over it.
    GenIndoor {
        #[arg(long, value_name = "PGM")]
        floor_plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the template instruction pool as JSON lines.
    GenInstructions {
        #[arg(long, default_value = "synthetic", value_parser = parse_kind)]
        kind: EnvKind,
        /// 0 picks the default pool size for the kind.
        #[arg(long, default_value_t = 0)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill an embedding cache for every sentence of a JSON-lines file.
    Embed(EmbedArgs),
    /// Generate a complete dataset directory.
    BuildDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<EnvKind>,
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        val: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        /// Floor plans to crop from (indoor); repeatable.
        #[arg(long, value_name = "PGM")]
        floor_plan: Vec<PathBuf>,
        /// Use a prefilled embedding cache instead of pseudo-embeddings.
        #[arg(long, value_name = "JSONL", requires = "model")]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Predict a cost map with trained weights.
    Predict {
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        scene: Scene,
        /// Instruction text; defaults to the instance's instruction.
        #[arg(long)]
        instruction: Option<String>,
        #[arg(long, default_value_t = 42)]
        projection_seed: u64,
        #[arg(long, value_name = "PGM")]
        out: PathBuf,
    },
    /// Build a roadmap and search it.
    Plan {
        #[command(flatten)]
        scene: Scene,
        /// Cost map; without it (and without --oracle) the planner is plain PRM.
        #[arg(long, value_name = "PGM", conflicts_with = "oracle")]
        cost: Option<PathBuf>,
        /// Plan on the instance's ground-truth cost.
        #[arg(long, requires = "dataset")]
        oracle: bool,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, value_name = "JSON")]
        out: PathBuf,
    },
    /// Score a plan against an instance's ground truth.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        instance: usize,
        #[arg(long, value_name = "JSON")]
        plan: PathBuf,
    },
    /// Run methods over the test split; writes rows.csv and aggregates.csv.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        max_instances: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embedding-width ablation.
    Ablate {
        #[arg(long)]
        dataset: PathBuf,
        /// Weights per width as DIM=PATH; repeatable.
        #[arg(long, value_parser = parse_dim_weights, required_unless_present = "oracle")]
        weights: Vec<(usize, PathBuf)>,
        /// Ground-truth costs for every width.
        #[arg(long, conflicts_with = "weights")]
        oracle: bool,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Time cost prediction and planning on one instance.
    Runtime {
        #[arg(long)]
        dataset: PathBuf,
        /// Defaults to the first test instance.
        #[arg(long)]
        instance: Option<usize>,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 300)]
        nodes: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Draw a map, roadmap and path as SVG.
    Render {
        #[command(flatten)]
        scene: Scene,
        /// Output of `igprm plan`.
        #[arg(long, value_name = "JSON")]
        plan: Option<PathBuf>,
        #[arg(long, value_name = "SVG")]
        out: PathBuf,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["offline", "endpoint"]))]
struct EmbedArgs {
    /// JSON lines with a "text" field (gen-instructions output).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    /// Hash-seeded pseudo-embeddings; no network.
    #[arg(long)]
    offline: bool,
    #[arg(long, value_name = "URL", requires = "credential_env")]
    endpoint: Option<String>,
    /// Environment variable holding the bearer credential.
    #[arg(long, value_name = "NAME", requires = "endpoint")]
    credential_env: Option<String>,
    #[arg(long, default_value = "text-embedding-ada-002")]
    model: String,
}

/// A map with endpoints: a dataset instance or a map file plus coordinates.
#[derive(Args)]
struct Scene {
    #[arg(long, conflicts_with = "map", requires = "instance")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    instance: Option<usize>,
    #[arg(long, value_name = "PGM", required_unless_present = "dataset", requires_all = ["start", "goal"])]
    map: Option<PathBuf>,
    #[arg(long, default_value = "synthetic", value_parser = parse_kind)]
    kind: EnvKind,
    /// x,y in cell units.
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    goal: Option<Point>,
}

struct Resolved {
    env: EnvironmentMap,
    start: Point,
    goal: Point,
    source: Option<(Dataset, usize)>,
}

impl Resolved {
    fn instance(&self) -> Option<(&Dataset, &ProblemInstance)> {
        self.source.as_ref().map(|(ds, i)| (ds, &ds.instances[*i]))
    }
}

impl Scene {
    fn resolve(&self) -> Result<Resolved> {
        if let (Some(dir), Some(id)) = (&self.dataset, self.instance) {
            let ds = load_dataset(dir)?;
            let idx = instance_index(&ds, id)?;
            let inst = &ds.instances[idx];
            let (env, start, goal) = (inst.env.clone(), self.start.unwrap_or(inst.start), self.goal.unwrap_or(inst.goal));
            return Ok(Resolved {
                env,
                start,
                goal,
                source: Some((ds, idx)),
            });
        }
        let map = self.map.as_ref().ok_or_else(|| CliError::invalid("need --map or --dataset"))?;
        let env = EnvironmentMap::load_pgm(map, self.kind)?;
        let (start, goal) = self.start.zip(self.goal).ok_or_else(|| CliError::invalid("need --start and --goal"))?;
        Ok(Resolved {
            env,
            start,
            goal,
            source: None,
        })
    }
}

/// Every tunable, grouped by subsystem.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    synth: SynthConfig,
    dataset: DatasetConfig,
    /// Used by `plan` and `render`.
    planner: PlannerParams,
    bench: BenchConfig,
    ablation: AblationConfig,
    /// Retry and timeout knobs for `embed --endpoint`.
    endpoint: Option<EndpointConfig>,
}

impl Config {
    fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg: Config = match path {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
            None => Config::default(),
        };
        if let Some(s) = seed {
            cfg.dataset.seed = s;
            cfg.planner.seed = s;
            cfg.bench.seed = s;
            cfg.ablation.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    path: Option<PlanPath>,
    roadmap: Roadmap,
}

#[derive(Serialize)]
struct WorldFile<'a> {
    seed: u64,
    start: Point,
    goal: Point,
    passages: &'a [Passage],
}

#[derive(Serialize)]
struct SentenceLine<'a> {
    id: usize,
    text: &'a str,
    cls: InstructionClass,
}

#[derive(Deserialize)]
struct TextLine {
    text: String,
}

fn parse_kind(s: &str) -> std::result::Result<EnvKind, String> {
    match s {
        "synthetic" => Ok(EnvKind::Synthetic),
        "indoor" => Ok(EnvKind::Indoor),
        _ => Err(format!("expected synthetic or indoor, got {s:?}")),
    }
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Point::new(f(x)?, f(y)?))
}

fn parse_dim_weights(s: &str) -> std::result::Result<(usize, PathBuf), String> {
    let (d, p) = s.split_once('=').ok_or("expected DIM=PATH")?;
    Ok((d.parse().map_err(|e| format!("{d:?}: {e}"))?, PathBuf::from(p)))
}

fn instance_index(ds: &Dataset, id: usize) -> Result<usize> {
    ds.instances
        .iter()
        .position(|i| i.id == id)
        .ok_or_else(|| CliError::invalid(format!("no instance {id}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref(), cli.seed)?;
    let seed = cli.seed.unwrap_or(cfg.dataset.seed);
    match cli.cmd {
        Cmd::GenSynth { out } => {
            let world = gen_synthetic_env(seed, &cfg.synth)?;
            fs::create_dir_all(&out)?;
            world.env.save_pgm(out.join("map.pgm"))?;
            let meta = WorldFile {
                seed,
                start: world.start,
                goal: world.goal,
                passages: world.env.passages(),
            };
            write_json(&out.join("world.json"), &meta)?;
            println!("wrote {}", out.display());
        }
        Cmd::GenIndoor { floor_plan, out } => {
            let env = load_indoor_map(&floor_plan, seed)?;
            let env = place_step_obstacles(&env, seed, cfg.dataset.step_count, cfg.dataset.step_size)?;
            fs::create_dir_all(&out)?;
            env.save_pgm(out.join("map.pgm"))?;
            println!("wrote {}", out.join("map.pgm").display());
        }
        Cmd::GenInstructions { kind, count, out } => {
            let count = match (count, kind) {
                (0, EnvKind::Synthetic) => 132,
                (0, EnvKind::Indoor) => 90,
                (n, _) => n,
            };
            let sentences = generate_instructions(kind, count)?;
            let mut w = std::io::BufWriter::new(fs::File::create(&out)?);
            for (id, (text, cls)) in sentences.iter().enumerate() {
                serde_json::to_writer(&mut w, &SentenceLine { id, text, cls: *cls })?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            println!("wrote {} sentences to {}", sentences.len(), out.display());
        }
        Cmd::Embed(args) => embed(args, cfg.endpoint)?,
        Cmd::BuildDataset {
            out,
            kind,
            train,
            val,
            test,
            floor_plan,
            embeddings,
            model,
        } => {
            let mut d = cfg.dataset;
            if let Some(k) = kind {
                d.kind = k;
            }
            d.counts.train = train.unwrap_or(d.counts.train);
            d.counts.val = val.unwrap_or(d.counts.val);
            d.counts.test = test.unwrap_or(d.counts.test);
            if !floor_plan.is_empty() {
                d.indoor_maps = floor_plan;
            }
            if let (Some(path), Some(model)) = (embeddings, model) {
                d.embedding = EmbeddingMode::Cache { path, model };
            }
            let ds = build_dataset(&d, &out)?;
            println!("wrote {} instances to {}", ds.instances.len(), out.display());
        }
        Cmd::Predict {
            weights,
            scene,
            instruction,
            projection_seed,
            out,
        } => {
            let model = load_weights(&weights)?;
            let r = scene.resolve()?;
            let raw = match (&instruction, r.instance()) {
                (Some(text), _) => pseudo_embed(text)?,
                (None, Some((ds, inst))) => ds.instruction_for(inst).embedding.clone(),
                (None, None) => return Err(CliError::invalid("need --instruction or a dataset instance")),
            };
            let emb = embedding_f32(&project(&raw, &make_projection(projection_seed, model.k())?)?);
            let cost = predict(&model, &r.env.to_input_channels(), &emb)?;
            cost.save_pgm(&out)?;
            println!("wrote {}", out.display());
        }
        Cmd::Plan {
            scene,
            cost,
            oracle,
            nodes,
            out,
        } => {
            let r = scene.resolve()?;
            let cost = match (cost, oracle) {
                (Some(p), _) => CostMap::load_pgm(p)?,
                (None, true) => r.instance().expect("--oracle requires --dataset").1.gt_cost.clone(),
                (None, false) => CostMap::zeros(r.env.width(), r.env.height()),
            };
            let mut params = cfg.planner;
            params.n_nodes = nodes.unwrap_or(params.n_nodes);
            let res = plan(&r.env, &cost, r.start, r.goal, &params)?;
            match &res.path {
                Some(p) => println!("path: {} vertices, cost {:.4}, length {:.3}", p.points.len(), p.total_cost, p.length),
                None => println!("no path"),
            }
            write_json(
                &out,
                &PlanFile {
                    path: res.path,
                    roadmap: res.roadmap,
                },
            )?;
        }
        Cmd::Eval { dataset, instance, plan } => {
            let ds = load_dataset(&dataset)?;
            let inst = &ds.instances[instance_index(&ds, instance)?];
            let pf: PlanFile = serde_json::from_str(&fs::read_to_string(&plan)?)?;
            let produced = pf.path.as_ref().map(|p| p.points.as_slice());
            print_json(&evaluate(produced, &inst.gt_path, &inst.gt_cost))?;
        }
        Cmd::Bench {
            dataset,
            weights,
            methods,
            nodes,
            trials,
            max_instances,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let model = weights.map(load_weights).transpose()?;
            let mut b = cfg.bench;
            if !methods.is_empty() {
                b.methods = methods;
            } else if model.is_none() {
                b.methods.retain(|m| *m != Method::IgprmLearned);
            }
            if !nodes.is_empty() {
                b.node_counts = nodes;
            }
            b.trials_per_instance = trials.unwrap_or(b.trials_per_instance);
            b.max_instances = max_instances.unwrap_or(b.max_instances);
            let report = run_benchmark(&ds, model.as_ref(), &b)?;
            fs::create_dir_all(&out)?;
            write_report(&report, &out.join("rows.csv"), &out.join("aggregates.csv"))?;
            for a in &report.aggregates {
                println!(
                    "{:<14} n={:<4} {:<12} runs={:<4} success={:.3} spl={:.3} dtw={}",
                    a.method.as_str(),
                    a.n_nodes,
                    a.split.as_str(),
                    a.runs,
                    a.success_rate,
                    a.mean_spl,
                    a.mean_dtw.map_or("-".into(), |d| format!("{d:.2}"))
                );
            }
        }
        Cmd::Ablate {
            dataset,
            weights,
            oracle,
            dims,
            out,
        } => {
            let ds = load_dataset(&dataset)?;
            let mut a = cfg.ablation;
            let models: BTreeMap<usize, Model> = weights
                .iter()
                .map(|(d, p)| Ok((*d, load_weights(p)?)))
                .collect::<Result<_>>()?;
            if !dims.is_empty() {
                a.dims = dims;
            } else if !oracle {
                a.dims = models.keys().copied().collect();
            }
            let costs = if oracle {
                AblationCosts::Oracle
            } else {
                AblationCosts::Models(&models)
            };
            let rows = run_ablation(&ds, costs, &a)?;
            write_ablation_csv(&rows, fs::File::create(&out)?)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Cmd::Runtime {
            dataset,
            instance,
            weights,
            nodes,
            repeats,
        } => {
            let ds = load_dataset(&dataset)?;
            let model = load_weights(&weights)?;
            let inst = match instance {
                Some(id) => &ds.instances[instance_index(&ds, id)?],
                None => ds
                    .test_instances()
                    .next()
                    .ok_or_else(|| CliError::invalid("dataset has no test instances"))?,
            };
            let raw = &ds.instruction_for(inst).embedding;
            let emb = embedding_f32(&project(raw, &make_projection(ds.meta.projection_seed, model.k())?)?);
            print_json(&measure_runtime(inst, &emb, &model, nodes, repeats, seed)?)?;
        }
        Cmd::Render { scene, plan, out } => {
            let r = scene.resolve()?;
            let pf: Option<PlanFile> = match plan {
                Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?)?),
                None => None,
            };
            let roadmap = pf.as_ref().map(|p| &p.roadmap);
            let path = pf.as_ref().and_then(|p| p.path.as_ref()).map(|p| p.points.as_slice());
            render_svg(&r.env, roadmap, path, r.start, r.goal, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn embed(args: EmbedArgs, endpoint_cfg: Option<EndpointConfig>) -> Result<()> {
    let reader = BufReader::new(fs::File::open(&args.input)?);
    let mut texts = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            texts.push(serde_json::from_str::<TextLine>(&line)?.text);
        }
    }
    let cache = EmbeddingCache::open(args.cache.clone())?;
    let mut fresh = 0;
    if args.offline {
        for t in &texts {
            if cache.get(t, PSEUDO_MODEL).is_none() {
                cache.insert(t, PSEUDO_MODEL, pseudo_embed(t)?)?;
                fresh += 1;
            }
        }
    } else {
        let (url, cred) = args.endpoint.zip(args.credential_env).expect("clap enforces the pair");
        let mut ec = endpoint_cfg.unwrap_or_else(|| EndpointConfig::new(&url, &args.model, &cred));
        (ec.url, ec.model, ec.credential_env) = (url, args.model, cred);
        let before = cache.len();
        let client = EmbeddingClient::new(ec, cache);
        for t in &texts {
            client.fetch_embedding(t)?;
        }
        fresh = client.cache().len() - before;
    }
    println!("{} sentences, {fresh} newly embedded into {}", texts.len(), args.cache.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("igprm: {e}");
            ExitCode::from(e.code())
        }
    }
}

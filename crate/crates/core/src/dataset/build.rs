use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::io::{self, Dataset, DatasetMeta};
use super::{gen_gt_path, DatasetConfig, DatasetError, EmbeddingMode, ProblemInstance};
use crate::envgen::{
    crop_indoor, gen_synthetic_env, gt_cost_map, place_step_obstacles, resize_shorter_edge, CellClass, CostMap,
    EnvError, EnvKind, EnvironmentMap, InstructionClass,
};
use crate::envgen::{CROP_SIDE, INDOOR_SHORT_EDGE};
use crate::grid::{cells_connected, Point};
use crate::instructions::{
    generate_instructions, make_projection, pseudo_embed, EmbeddingCache, InstructionRecord, SplitTag, PSEUDO_MODEL,
};
use crate::pgm::{self, GrayImage};

const WITHHOLD_SALT: u64 = 0x5e1d_0f7e_57ed;
const ENDPOINT_TRIES: usize = 1000;

/// Per-instance seed; instances are independent of each other and of the
/// order they are generated in.
pub fn instance_seed(seed: u64, id: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn validate(cfg: &DatasetConfig) -> Result<(), DatasetError> {
    let bad = |m: String| Err(DatasetError::InvalidConfig(m));
    if cfg.counts.total() == 0 {
        return bad("counts must include at least one instance".into());
    }
    if !(cfg.unknown_fraction > 0.0 && cfg.unknown_fraction < 1.0) {
        return bad("unknown_fraction must lie strictly between 0 and 1".into());
    }
    if cfg.gt_nodes < 2 {
        return bad("gt_nodes must be at least 2".into());
    }
    if let Some(c) = cfg.classes().iter().find(|c| c.kind() != cfg.kind) {
        return bad(format!("class {c:?} does not apply to {:?} maps", cfg.kind));
    }
    if cfg.kind == EnvKind::Indoor && cfg.indoor_maps.is_empty() {
        return bad("indoor datasets need at least one floor-plan image".into());
    }
    Ok(())
}

/// The instruction pool: each class's sentences are shuffled with a fixed
/// seed and the first `unknown_fraction` of them are withheld for
/// test_unknown. Everything else is shared by train, val and test_known.
pub(super) fn instruction_pool(cfg: &DatasetConfig) -> Result<(Vec<InstructionRecord>, String), DatasetError> {
    let sentences = generate_instructions(cfg.kind, cfg.instruction_count())?;
    let projection = make_projection(cfg.projection_seed, cfg.k)?;
    let (cache, model) = match &cfg.embedding {
        EmbeddingMode::Pseudo => (None, PSEUDO_MODEL.to_owned()),
        EmbeddingMode::Cache { path, model } => (Some(EmbeddingCache::open(path.clone())?), model.clone()),
    };

    let mut withheld = vec![false; sentences.len()];
    for &cls in InstructionClass::for_kind(cfg.kind) {
        let mut idx: Vec<usize> = (0..sentences.len()).filter(|&i| sentences[i].1 == cls).collect();
        if idx.len() < 2 {
            return Err(DatasetError::InvalidConfig(format!(
                "class {cls:?} needs at least two sentences to withhold one"
            )));
        }
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ WITHHOLD_SALT ^ cls as u64));
        let n = ((cfg.unknown_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        idx[..n].iter().for_each(|&i| withheld[i] = true);
    }

    let records = sentences
        .into_iter()
        .enumerate()
        .map(|(id, (text, cls))| {
            let embedding = match &cache {
                None => pseudo_embed(&text)?,
                Some(c) => c.get(&text, &model).ok_or_else(|| DatasetError::MissingEmbedding(text.clone()))?,
            };
            let tag = if withheld[id] {
                SplitTag::TestUnknown
            } else {
                SplitTag::Train
            };
            Ok(InstructionRecord::new(id, text, cls, embedding, &projection, tag)?)
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok((records, model))
}

struct World {
    env: EnvironmentMap,
    start: Point,
    goal: Point,
}

/// Whether start and goal are joined by 4-connected cells of cost < 0.5;
/// a cheap necessary condition for a successful ground-truth path.
fn feasible(gt: &CostMap, start: Point, goal: Point) -> bool {
    let (w, h) = (gt.width(), gt.height());
    match (start.cell(w, h), goal.cell(w, h)) {
        (Some(a), Some(b)) => cells_connected(w, h, a, b, |x, y| gt.get(x, y) < 0.5),
        _ => false,
    }
}

fn indoor_world(cfg: &DatasetConfig, maps: &[GrayImage], rng: &mut ChaCha8Rng) -> Result<Option<World>, DatasetError> {
    let img = maps.choose(rng).expect("validated non-empty");
    let crop = crop_indoor(img, rng.random(), CROP_SIDE)?;
    let env = match place_step_obstacles(&crop, rng.random(), cfg.step_count, cfg.step_size) {
        Ok(env) => env,
        Err(EnvError::PlacementFailed(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let free: Vec<(usize, usize)> = (0..env.height())
        .flat_map(|y| (0..env.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| env.get(x, y) == CellClass::Free)
        .collect();
    if free.len() < 2 {
        return Ok(None);
    }
    for _ in 0..ENDPOINT_TRIES {
        let a = *free.choose(rng).unwrap();
        let b = *free.choose(rng).unwrap();
        let (start, goal) = (Point::cell_center(a.0, a.1), Point::cell_center(b.0, b.1));
        if start.distance(&goal) >= cfg.min_endpoint_distance && env.connected_by(a, b, |c| c != CellClass::Wall) {
            return Ok(Some(World { env, start, goal }));
        }
    }
    Ok(None)
}

fn generate_instance(
    id: usize,
    cfg: &DatasetConfig,
    pool: &[InstructionRecord],
    maps: &[GrayImage],
) -> Result<ProblemInstance, DatasetError> {
    let split = cfg.counts.split_of(id);
    let classes = cfg.classes();
    let cls = classes[id % classes.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, id));
    let candidates: Vec<&InstructionRecord> = pool
        .iter()
        .filter(|r| r.cls == cls && (r.split_tag == SplitTag::TestUnknown) == (split == SplitTag::TestUnknown))
        .collect();
    let instruction = *candidates.choose(&mut rng).expect("every class has shared and withheld sentences");

    for _ in 0..cfg.max_regenerations {
        let world = match cfg.kind {
            EnvKind::Synthetic => {
                let w = gen_synthetic_env(rng.random(), &cfg.synth)?;
                World {
                    env: w.env,
                    start: w.start,
                    goal: w.goal,
                }
            }
            EnvKind::Indoor => match indoor_world(cfg, maps, &mut rng)? {
                Some(w) => w,
                None => continue,
            },
        };
        let gt_cost = gt_cost_map(&world.env, cls)?;
        if !feasible(&gt_cost, world.start, world.goal) {
            continue;
        }
        match gen_gt_path(&world.env, &gt_cost, world.start, world.goal, cfg.gt_nodes, rng.random()) {
            Ok(gt_path) => {
                return Ok(ProblemInstance {
                    id,
                    env: world.env,
                    instruction_id: instruction.id,
                    start: world.start,
                    goal: world.goal,
                    gt_cost,
                    gt_path,
                    split,
                })
            }
            Err(DatasetError::OracleFailed(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(DatasetError::RegenerationExhausted {
        id,
        attempts: cfg.max_regenerations,
    })
}

fn generate(cfg: &DatasetConfig) -> Result<Dataset, DatasetError> {
    validate(cfg)?;
    let (instructions, embedding_model) = instruction_pool(cfg)?;
    let maps = cfg
        .indoor_maps
        .iter()
        .map(|p| Ok(resize_shorter_edge(&pgm::read(p).map_err(EnvError::from)?, INDOOR_SHORT_EDGE)))
        .collect::<Result<Vec<_>, DatasetError>>()?;
    let instances = (0..cfg.counts.total())
        .into_par_iter()
        .map(|id| generate_instance(id, cfg, &instructions, &maps))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        meta: DatasetMeta::new(cfg, embedding_model),
        instructions,
        instances,
    })
}

/// Generates a dataset and writes it to `out`, which must be absent or
/// empty. On failure a `FAILED` marker holding the error is left in `out`
/// and no `meta.json` is written.
pub fn build_dataset(cfg: &DatasetConfig, out: &Path) -> Result<Dataset, DatasetError> {
    if out.exists() && fs::read_dir(out)?.next().is_some() {
        return Err(DatasetError::OutputExists(out.to_owned()));
    }
    fs::create_dir_all(out)?;
    let result = generate(cfg).and_then(|ds| io::write_dataset(&ds, out).map(|_| ds));
    if let Err(e) = &result {
        fs::write(out.join(io::FAILED_MARKER), format!("{e}\n"))?;
    }
    result
}

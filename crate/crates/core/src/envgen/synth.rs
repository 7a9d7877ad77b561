use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CellClass, CellRect, EnvError, EnvKind, EnvironmentMap, Passage, PassageWidth, MIN_SIDE};
use crate::grid::Point;

const MAX_ATTEMPTS: usize = 1000;
const PLACEMENT_TRIES: usize = 200;
/// Minimum free rows/columns between two parallel walls.
const MIN_ROOM: usize = 3;
/// Wall cells kept between the two passages of one wall.
const PASSAGE_GAP: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub wall_count_range: [usize; 2],
    pub wall_thickness: usize,
    pub narrow_width_range: [usize; 2],
    pub wide_width_range: [usize; 2],
    pub corner_margin: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            wall_count_range: [1, 4],
            wall_thickness: 2,
            narrow_width_range: [3, 4],
            wide_width_range: [8, 10],
            corner_margin: 6,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidConfig(m.to_owned()));
        let [wmin, wmax] = self.wall_count_range;
        let [nmin, nmax] = self.narrow_width_range;
        let [wdmin, wdmax] = self.wide_width_range;
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return bad("map sides must be at least 16 cells");
        }
        if wmin > wmax || nmin > nmax || wdmin > wdmax {
            return bad("ranges must be ordered [min, max]");
        }
        if nmin == 0 || self.wall_thickness == 0 || self.corner_margin == 0 {
            return bad("passage widths, wall thickness and corner margin must be positive");
        }
        if nmax >= wdmin {
            return bad("narrow passages must be strictly narrower than wide ones");
        }
        let side = self.width.min(self.height);
        if 2 * self.corner_margin + self.wall_thickness > side {
            return bad("walls do not fit between the corner margins");
        }
        if wmax > 0 && nmax + wdmax + PASSAGE_GAP + 2 > side {
            return bad("passages do not fit along a wall");
        }
        Ok(())
    }
}

/// A generated synthetic map together with its query endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub env: EnvironmentMap,
    pub start: Point,
    pub goal: Point,
}

#[derive(Debug, Clone, Copy)]
struct Wall {
    horizontal: bool,
    pos: usize,
}

/// Generates a wall-and-passage world. Every wall spans the full map and is
/// pierced by one narrow and one wide passage; start and goal sit in
/// opposite corners and are connected through free cells.
pub fn gen_synthetic_env(seed: u64, cfg: &SynthConfig) -> Result<SyntheticWorld, EnvError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(world) = try_generate(&mut rng, cfg) {
            return Ok(world);
        }
    }
    Err(EnvError::GenerationFailed(MAX_ATTEMPTS))
}

fn try_generate(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Option<SyntheticWorld> {
    let (w, h, t) = (cfg.width, cfg.height, cfg.wall_thickness);
    let n_walls = rng.random_range(cfg.wall_count_range[0]..=cfg.wall_count_range[1]);

    let mut walls: Vec<Wall> = Vec::with_capacity(n_walls);
    for _ in 0..n_walls {
        let horizontal = rng.random_bool(0.5);
        let extent = if horizontal { h } else { w };
        let lo = cfg.corner_margin;
        let hi = extent - cfg.corner_margin - t;
        let pos = (0..PLACEMENT_TRIES).map(|_| rng.random_range(lo..=hi)).find(|&p| {
            walls
                .iter()
                .filter(|o| o.horizontal == horizontal)
                .all(|o| p.abs_diff(o.pos) >= t + MIN_ROOM)
        })?;
        walls.push(Wall { horizontal, pos });
    }

    let mut cells = vec![CellClass::Free; w * h];
    for wall in &walls {
        for k in wall.pos..wall.pos + t {
            if wall.horizontal {
                cells[k * w..(k + 1) * w].fill(CellClass::Wall);
            } else {
                (0..h).for_each(|y| cells[y * w + k] = CellClass::Wall);
            }
        }
    }

    let mut passages = Vec::with_capacity(2 * walls.len());
    for wall in &walls {
        let length = if wall.horizontal { w } else { h };
        // openings must stay clear of perpendicular walls, plus one cell
        let blocked: Vec<(usize, usize)> = walls
            .iter()
            .filter(|o| o.horizontal != wall.horizontal)
            .map(|o| (o.pos.saturating_sub(1), o.pos + t + 1))
            .collect();
        let narrow = rng.random_range(cfg.narrow_width_range[0]..=cfg.narrow_width_range[1]);
        let wide = rng.random_range(cfg.wide_width_range[0]..=cfg.wide_width_range[1]);
        let mut taken: Vec<(usize, usize)> = Vec::new();
        for (width_class, span) in [(PassageWidth::Narrow, narrow), (PassageWidth::Wide, wide)] {
            let start = (0..PLACEMENT_TRIES)
                .map(|_| rng.random_range(0..=length - span))
                .find(|&s| {
                    let iv = (s, s + span);
                    blocked.iter().all(|&b| disjoint(iv, b, 0))
                        && taken.iter().all(|&o| disjoint(iv, o, PASSAGE_GAP))
                })?;
            taken.push((start, start + span));
            let rect = if wall.horizontal {
                CellRect { x: start, y: wall.pos, w: span, h: t }
            } else {
                CellRect { x: wall.pos, y: start, w: t, h: span }
            };
            rect.cells().for_each(|(x, y)| cells[y * w + x] = CellClass::Free);
            passages.push(Passage { width_class, rect });
        }
    }

    let env = EnvironmentMap::new(w, h, cells, EnvKind::Synthetic)
        .ok()?
        .with_passages(passages);

    let diagonal = rng.random_bool(0.5);
    let (a, b) = if diagonal { (0, 3) } else { (1, 2) };
    let (sc, gc) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
    let start_cell = corner_cell(rng, cfg, sc);
    let goal_cell = corner_cell(rng, cfg, gc);
    if env.get(start_cell.0, start_cell.1) != CellClass::Free
        || env.get(goal_cell.0, goal_cell.1) != CellClass::Free
        || !env.connected_by(start_cell, goal_cell, |c| c == CellClass::Free)
    {
        return None;
    }
    Some(SyntheticWorld {
        env,
        start: Point::cell_center(start_cell.0, start_cell.1),
        goal: Point::cell_center(goal_cell.0, goal_cell.1),
    })
}

/// Random cell inside corner `corner` (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right).
fn corner_cell(rng: &mut ChaCha8Rng, cfg: &SynthConfig, corner: u8) -> (usize, usize) {
    let m = cfg.corner_margin;
    let dx = rng.random_range(0..m);
    let dy = rng.random_range(0..m);
    let x = if corner % 2 == 0 { dx } else { cfg.width - 1 - dx };
    let y = if corner < 2 { dy } else { cfg.height - 1 - dy };
    (x, y)
}

fn disjoint(a: (usize, usize), b: (usize, usize), gap: usize) -> bool {
    a.1 + gap <= b.0 || b.1 + gap <= a.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_corner(p: Point, cfg: &SynthConfig) -> Option<u8> {
        let m = cfg.corner_margin as f64;
        let left = p.x < m;
        let right = p.x > cfg.width as f64 - m;
        let top = p.y < m;
        let bottom = p.y > cfg.height as f64 - m;
        match (left, right, top, bottom) {
            (true, _, true, _) => Some(0),
            (_, true, true, _) => Some(1),
            (true, _, _, true) => Some(2),
            (_, true, _, true) => Some(3),
            _ => None,
        }
    }

    #[test]
    fn default_world_has_walls_and_two_passages_each() {
        let cfg = SynthConfig::default();
        let world = gen_synthetic_env(1, &cfg).unwrap();
        let env = &world.env;
        assert_eq!((env.width(), env.height()), (64, 64));
        let p = env.passages();
        assert!(!p.is_empty() && p.len() <= 8 && p.len() % 2 == 0);
        let narrow = p.iter().filter(|p| p.width_class == PassageWidth::Narrow).count();
        assert_eq!(narrow * 2, p.len());
    }

    #[test]
    fn no_walls_degenerate_case() {
        let cfg = SynthConfig {
            wall_count_range: [0, 0],
            ..SynthConfig::default()
        };
        let world = gen_synthetic_env(3, &cfg).unwrap();
        assert_eq!(world.env.count(CellClass::Wall), 0);
        let (s, g) = (in_corner(world.start, &cfg).unwrap(), in_corner(world.goal, &cfg).unwrap());
        assert_eq!(s + g, 3, "start/goal must be opposite corners");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig::default();
        assert_eq!(gen_synthetic_env(7, &cfg).unwrap(), gen_synthetic_env(7, &cfg).unwrap());
    }

    #[test]
    fn many_seeds_satisfy_structure() {
        let cfg = SynthConfig::default();
        for seed in 0..200 {
            let world = gen_synthetic_env(seed, &cfg).unwrap();
            let env = &world.env;
            let walls = env.passages().len() / 2;
            assert!((1..=4).contains(&walls), "seed {seed}: {walls} walls");
            for p in env.passages() {
                assert!(p.rect.cells().all(|(x, y)| env.get(x, y) == CellClass::Free));
            }
            let s = world.start.cell(64, 64).unwrap();
            let g = world.goal.cell(64, 64).unwrap();
            assert!(env.connected_by(s, g, |c| c == CellClass::Free), "seed {seed}");
            let (cs, cg) = (in_corner(world.start, &cfg).unwrap(), in_corner(world.goal, &cfg).unwrap());
            assert_eq!(cs + cg, 3);
        }
    }

    #[test]
    fn passage_widths_follow_config() {
        let cfg = SynthConfig::default();
        for seed in 0..50 {
            let world = gen_synthetic_env(seed, &cfg).unwrap();
            for p in world.env.passages() {
                let span = if p.rect.h == cfg.wall_thickness { p.rect.w } else { p.rect.h };
                match p.width_class {
                    PassageWidth::Narrow => assert!((3..=4).contains(&span)),
                    PassageWidth::Wide => assert!((8..=10).contains(&span)),
                }
            }
        }
    }

    #[test]
    fn rejects_overlapping_width_classes() {
        let cfg = SynthConfig {
            narrow_width_range: [3, 8],
            ..SynthConfig::default()
        };
        assert!(matches!(gen_synthetic_env(0, &cfg), Err(EnvError::InvalidConfig(_))));
    }
}

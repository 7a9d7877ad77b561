use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellClass, EnvError, EnvKind, EnvironmentMap};
use crate::pgm::{self, GrayImage};

pub const INDOOR_SHORT_EDGE: usize = 128;
pub const CROP_SIDE: usize = 64;
pub const MIN_FREE_FRACTION: f64 = 0.3;
const CROP_ATTEMPTS: usize = 1000;
const FREE_THRESHOLD: u8 = 128;

/// Nearest-neighbour resize so that the shorter edge becomes `short_edge`.
pub fn resize_shorter_edge(img: &GrayImage, short_edge: usize) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let (nw, nh) = if w <= h {
        (short_edge, ((h * short_edge) as f64 / w as f64).round().max(1.0) as usize)
    } else {
        (((w * short_edge) as f64 / h as f64).round().max(1.0) as usize, short_edge)
    };
    let mut data = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        let sy = (y * h / nh).min(h - 1);
        for x in 0..nw {
            let sx = (x * w / nw).min(w - 1);
            data.push(img.get(sx, sy));
        }
    }
    GrayImage {
        width: nw,
        height: nh,
        data,
    }
}

/// Thresholds a grayscale scan and crops a random square patch whose free
/// fraction is at least [`MIN_FREE_FRACTION`].
pub fn crop_indoor(img: &GrayImage, crop_seed: u64, side: usize) -> Result<EnvironmentMap, EnvError> {
    if img.width < side || img.height < side {
        return Err(EnvError::InvalidMap(format!(
            "{}x{} image is smaller than a {side}x{side} crop",
            img.width, img.height
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crop_seed);
    let need = (MIN_FREE_FRACTION * (side * side) as f64).ceil() as usize;
    for _ in 0..CROP_ATTEMPTS {
        let x0 = rng.random_range(0..=img.width - side);
        let y0 = rng.random_range(0..=img.height - side);
        let cells: Vec<CellClass> = (y0..y0 + side)
            .flat_map(|y| (x0..x0 + side).map(move |x| (x, y)))
            .map(|(x, y)| {
                if img.get(x, y) >= FREE_THRESHOLD {
                    CellClass::Free
                } else {
                    CellClass::Wall
                }
            })
            .collect();
        if cells.iter().filter(|&&c| c == CellClass::Free).count() >= need {
            return EnvironmentMap::new(side, side, cells, EnvKind::Indoor);
        }
    }
    Err(EnvError::NoValidCrop(CROP_ATTEMPTS))
}

/// Loads a grayscale scan, resizes its shorter edge to 128 cells and crops a
/// 64x64 patch. Bright pixels (>= 128) become free space.
pub fn load_indoor_map(path: impl AsRef<Path>, crop_seed: u64) -> Result<EnvironmentMap, EnvError> {
    let img = pgm::read(path)?;
    let resized = resize_shorter_edge(&img, INDOOR_SHORT_EDGE);
    crop_indoor(&resized, crop_seed, CROP_SIDE)
}

/// Scatters `count` disjoint `size x size` step squares over free cells,
/// each labeled low or high with equal probability.
pub fn place_step_obstacles(
    env: &EnvironmentMap,
    seed: u64,
    count: usize,
    size: usize,
) -> Result<EnvironmentMap, EnvError> {
    if env.kind() != EnvKind::Indoor {
        return Err(EnvError::KindMismatch {
            expected: EnvKind::Indoor,
        });
    }
    if count == 0 {
        return Ok(env.clone());
    }
    if size == 0 || size > env.width() || size > env.height() {
        return Err(EnvError::InvalidConfig(format!("step size {size} does not fit the map")));
    }
    let budget = 10 * count * 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = env.clone();
    let mut placed = 0;
    let mut rejected = 0;
    while placed < count {
        let x0 = rng.random_range(0..=env.width() - size);
        let y0 = rng.random_range(0..=env.height() - size);
        let fits = (y0..y0 + size).all(|y| (x0..x0 + size).all(|x| out.get(x, y) == CellClass::Free));
        if !fits {
            rejected += 1;
            if rejected >= budget {
                return Err(EnvError::PlacementFailed(rejected));
            }
            continue;
        }
        let label = if rng.random_bool(0.5) {
            CellClass::StepHigh
        } else {
            CellClass::StepLow
        };
        for y in y0..y0 + size {
            for x in x0..x0 + size {
                out.set(x, y, label);
            }
        }
        placed += 1;
    }
    Ok(out)
}

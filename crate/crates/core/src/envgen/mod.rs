//! Occupancy environments and their expert ground-truth cost maps.
//!
//! Two kinds of worlds are produced here: synthetic wall-and-passage maps
//! generated from a seed, and indoor maps loaded from user-supplied PGM
//! scans with small step obstacles scattered over them. Cost maps are
//! derived from a fixed rule table keyed by [`InstructionClass`].

mod cost;
mod indoor;
mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Point;
use crate::pgm::{self, PgmError};

pub use cost::gt_cost_map;
pub use indoor::{
    crop_indoor, load_indoor_map, place_step_obstacles, resize_shorter_edge, CROP_SIDE, INDOOR_SHORT_EDGE,
    MIN_FREE_FRACTION,
};
pub use synth::{gen_synthetic_env, SynthConfig, SyntheticWorld};

pub const MIN_SIDE: usize = 16;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("environment generation failed after {0} rejected attempts")]
    GenerationFailed(usize),
    #[error("step placement failed after {0} rejected proposals")]
    PlacementFailed(usize),
    #[error("unreadable map: {0}")]
    UnreadableMap(#[from] PgmError),
    #[error("no crop with enough free space after {0} attempts")]
    NoValidCrop(usize),
    #[error("instruction class {cls:?} does not apply to {kind:?} environments")]
    ClassKindMismatch { cls: InstructionClass, kind: EnvKind },
    #[error("operation requires a {expected:?} environment")]
    KindMismatch { expected: EnvKind },
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Synthetic,
    Indoor,
}

/// Class of a single grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellClass {
    Free = 0,
    Wall = 1,
    StepLow = 2,
    StepHigh = 3,
}

impl CellClass {
    pub const ALL: [CellClass; 4] = [
        CellClass::Free,
        CellClass::Wall,
        CellClass::StepLow,
        CellClass::StepHigh,
    ];

    /// Gray level used when saving an environment as PGM.
    pub fn gray(self) -> u8 {
        match self {
            CellClass::Free => 255,
            CellClass::Wall => 0,
            CellClass::StepLow => 100,
            CellClass::StepHigh => 180,
        }
    }

    pub fn from_gray(v: u8) -> Option<Self> {
        match v {
            255 => Some(CellClass::Free),
            0 => Some(CellClass::Wall),
            100 => Some(CellClass::StepLow),
            180 => Some(CellClass::StepHigh),
            _ => None,
        }
    }

    pub fn is_step(self) -> bool {
        matches!(self, CellClass::StepLow | CellClass::StepHigh)
    }
}

/// Navigation preference expressed by an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InstructionClass {
    PreferNarrow,
    PreferWide,
    Shortest,
    WheeledCareful,
    WheeledRapid,
    LeggedCareful,
    LeggedRapid,
}

impl InstructionClass {
    pub fn for_kind(kind: EnvKind) -> &'static [InstructionClass] {
        use InstructionClass::*;
        match kind {
            EnvKind::Synthetic => &[PreferNarrow, PreferWide, Shortest],
            EnvKind::Indoor => &[WheeledCareful, WheeledRapid, LeggedCareful, LeggedRapid],
        }
    }

    pub fn kind(self) -> EnvKind {
        use InstructionClass::*;
        match self {
            PreferNarrow | PreferWide | Shortest => EnvKind::Synthetic,
            _ => EnvKind::Indoor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassageWidth {
    Narrow,
    Wide,
}

/// Axis-aligned block of cells `[x, x+w) x [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl CellRect {
    pub fn contains(&self, cx: usize, cy: usize) -> bool {
        cx >= self.x && cx < self.x + self.w && cy >= self.y && cy < self.y + self.h
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.h).flat_map(move |y| (self.x..self.x + self.w).map(move |x| (x, y)))
    }
}

/// Opening carved through a synthetic wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub width_class: PassageWidth,
    pub rect: CellRect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    width: usize,
    height: usize,
    cells: Vec<CellClass>,
    kind: EnvKind,
    passages: Vec<Passage>,
}

impl EnvironmentMap {
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<CellClass>,
        kind: EnvKind,
    ) -> Result<Self, EnvError> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(EnvError::InvalidMap(format!(
                "{width}x{height} is below the {MIN_SIDE}x{MIN_SIDE} minimum"
            )));
        }
        if cells.len() != width * height {
            return Err(EnvError::InvalidMap(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
            kind,
            passages: Vec::new(),
        })
    }

    pub fn filled(width: usize, height: usize, class: CellClass, kind: EnvKind) -> Result<Self, EnvError> {
        Self::new(width, height, vec![class; width * height], kind)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn cells(&self) -> &[CellClass] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> CellClass {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, class: CellClass) {
        self.cells[y * self.width + x] = class;
    }

    pub(crate) fn with_passages(mut self, passages: Vec<Passage>) -> Self {
        self.passages = passages;
        self
    }

    /// Class of the cell under `p`; positions outside the grid read as walls.
    pub fn class_at(&self, p: Point) -> CellClass {
        match p.cell(self.width, self.height) {
            Some((x, y)) => self.get(x, y),
            None => CellClass::Wall,
        }
    }

    pub fn is_blocked(&self, p: Point) -> bool {
        self.class_at(p) == CellClass::Wall
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    /// Connectivity of two cells through cells accepted by `passable`.
    pub fn connected_by(
        &self,
        a: (usize, usize),
        b: (usize, usize),
        passable: impl Fn(CellClass) -> bool,
    ) -> bool {
        crate::grid::cells_connected(self.width, self.height, a, b, |x, y| passable(self.get(x, y)))
    }

    /// One-hot planes in the order FREE, WALL, STEP_LOW, STEP_HIGH.
    pub fn to_input_channels(&self) -> ChannelStack {
        let plane = self.width * self.height;
        let mut data = vec![0.0f32; 4 * plane];
        for (i, c) in self.cells.iter().enumerate() {
            data[*c as usize * plane + i] = 1.0;
        }
        ChannelStack {
            channels: 4,
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn to_gray(&self) -> Vec<u8> {
        self.cells.iter().map(|c| c.gray()).collect()
    }

    pub fn from_gray(
        width: usize,
        height: usize,
        data: &[u8],
        kind: EnvKind,
    ) -> Result<Self, EnvError> {
        let cells = data
            .iter()
            .map(|&v| {
                CellClass::from_gray(v)
                    .ok_or_else(|| EnvError::InvalidMap(format!("gray level {v} is not a cell class")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(width, height, cells, kind)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), EnvError> {
        pgm::write_p5(path, self.width, self.height, &self.to_gray())?;
        Ok(())
    }

    /// Loads a map saved by [`EnvironmentMap::save_pgm`] (exact class encoding).
    pub fn load_pgm(path: impl AsRef<Path>, kind: EnvKind) -> Result<Self, EnvError> {
        let img = pgm::read(path)?;
        Self::from_gray(img.width, img.height, &img.data, kind)
    }
}

/// Stacked `channels x height x width` planes, row-major per plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl ChannelStack {
    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl CostMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, EnvError> {
        if values.len() != width * height {
            return Err(EnvError::InvalidMap(format!(
                "expected {} cost values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(EnvError::InvalidMap(format!("cost {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Nearest-cell lookup; out-of-grid positions read as cost 1.
    pub fn at(&self, p: Point) -> f64 {
        match p.cell(self.width, self.height) {
            Some((x, y)) => self.get(x, y),
            None => 1.0,
        }
    }

    pub fn matches(&self, env: &EnvironmentMap) -> bool {
        self.width == env.width() && self.height == env.height()
    }

    pub fn to_gray(&self) -> Vec<u8> {
        self.values.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), EnvError> {
        pgm::write_p5(path, self.width, self.height, &self.to_gray())?;
        Ok(())
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self, EnvError> {
        let img = pgm::read(path)?;
        let values = img.data.iter().map(|&v| v as f64 / 255.0).collect();
        Self::new(img.width, img.height, values)
    }
}

//! Conditional encoder-decoder that maps an occupancy map plus an
//! instruction embedding to a per-cell cost in (0, 1).
//!
//! The embedding is broadcast to `k` constant planes and concatenated with
//! the four one-hot occupancy planes. Two 3x3 conv blocks per level, two
//! 2x2 max-pools, nearest-neighbour upsampling with skip concatenation, and
//! a 1x1 conv + sigmoid head.

mod format;
mod net;
mod parity;

use thiserror::Error;

pub use format::{Container, Descriptor, Tensor, MAGIC, VERSION};
pub use net::{load_weights, predict, Conv, Model, NetSpec, DEFAULT_K, DEFAULT_WIDTHS};
pub use parity::ParityFixture;

#[derive(Debug, Error)]
pub enum CostNetError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an IGPW file")]
    BadMagic,
    #[error("unsupported IGPW version {0}")]
    VersionUnsupported(u32),
    #[error("file ends before the declared data")]
    TruncatedFile,
    #[error("bad descriptor: {0}")]
    Descriptor(String),
    #[error("tensor {tensor}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
}

//! Instruction sentences, their 1536-D embeddings and k-D projections.

mod client;
mod embed;
mod projection;
mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envgen::InstructionClass;

pub use client::{
    extract_vector, read_records, write_records, CacheRecord, EmbeddingCache, EmbeddingClient,
    EndpointConfig, HttpTransport, Transport, TransportError,
};
pub use embed::{cosine, fnv1a64, pseudo_embed, tokenize, PSEUDO_MODEL};
pub use projection::{make_projection, project, ProjectionMatrix};
pub use templates::{generate_instructions, template_grid};

/// Width of raw instruction embeddings.
pub const EMBED_DIM: usize = 1536;

#[derive(Debug, Error)]
pub enum InstructionError {
    #[error("requested {count} sentences but at least {min} are needed")]
    InvalidCount { count: usize, min: usize },
    #[error("template grid for {cls:?} yields {available} sentences, {requested} requested")]
    TemplateExhausted {
        cls: InstructionClass,
        available: usize,
        requested: usize,
    },
    #[error("text has no alphanumeric tokens")]
    EmptyText,
    #[error("projection dimension {0} outside 1..=1536")]
    InvalidDim(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("credential environment variable {0} is not set")]
    MissingCredential(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Val,
    TestKnown,
    TestUnknown,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::TestKnown => "test_known",
            SplitTag::TestUnknown => "test_unknown",
        }
    }

    pub fn is_test(self) -> bool {
        matches!(self, SplitTag::TestKnown | SplitTag::TestUnknown)
    }
}

/// A sentence with its class, raw embedding and projected embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionRecord {
    pub id: usize,
    pub text: String,
    pub cls: InstructionClass,
    pub embedding: Vec<f64>,
    pub projected: Vec<f64>,
    /// `TestUnknown` for withheld sentences, `Train` for the shared pool.
    pub split_tag: SplitTag,
}

impl InstructionRecord {
    pub fn new(
        id: usize,
        text: String,
        cls: InstructionClass,
        embedding: Vec<f64>,
        projection: &ProjectionMatrix,
        split_tag: SplitTag,
    ) -> Result<Self, InstructionError> {
        let projected = project(&embedding, projection)?;
        Ok(Self {
            id,
            text,
            cls,
            embedding,
            projected,
            split_tag,
        })
    }
}

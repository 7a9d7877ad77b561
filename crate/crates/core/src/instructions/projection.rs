use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{InstructionError, EMBED_DIM};

/// Dense Gaussian random projection from 1536-D embeddings down to `k`
/// dimensions. Entries are i.i.d. N(0, 1/k), so squared norms are preserved
/// in expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    k: usize,
    seed: u64,
    rows: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        EMBED_DIM
    }

    /// Row-major `k x 1536` entries.
    pub fn entries(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * EMBED_DIM..(i + 1) * EMBED_DIM]
    }
}

pub fn make_projection(seed: u64, k: usize) -> Result<ProjectionMatrix, InstructionError> {
    if !(1..=EMBED_DIM).contains(&k) {
        return Err(InstructionError::InvalidDim(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (1.0 / k as f64).sqrt();
    let rows = (0..k * EMBED_DIM)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    Ok(ProjectionMatrix { k, seed, rows })
}

pub fn project(v: &[f64], m: &ProjectionMatrix) -> Result<Vec<f64>, InstructionError> {
    if v.len() != EMBED_DIM {
        return Err(InstructionError::DimensionMismatch {
            expected: EMBED_DIM,
            found: v.len(),
        });
    }
    Ok((0..m.k)
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect())
}

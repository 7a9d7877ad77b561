use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{InstructionError, EMBED_DIM};

/// Model name recorded in caches for pseudo-embeddings.
pub const PSEUDO_MODEL: &str = "pseudo-fnv1a-1536";

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn token_vector(token: &str) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()));
    (0..EMBED_DIM).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Offline bag-of-tokens embedder: the normalized mean of per-token Gaussian
/// vectors seeded by each token's FNV-1a hash.
pub fn pseudo_embed(text: &str) -> Result<Vec<f64>, InstructionError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(InstructionError::EmptyText);
    }
    let mut acc = vec![0.0f64; EMBED_DIM];
    for t in &tokens {
        for (a, v) in acc.iter_mut().zip(token_vector(t)) {
            *a += v;
        }
    }
    let n = tokens.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
    acc.iter_mut().for_each(|a| *a /= norm);
    Ok(acc)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

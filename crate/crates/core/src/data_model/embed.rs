use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{IMAGE_WIDTH, TEXT_WIDTH};
use crate::error::{Error, Result};

/// Deterministic unit-norm stand-in for a text or image embedding.
///
/// The key is hashed with SHA-256 and the digest seeds a Gaussian draw, so
/// equal keys give equal vectors and distinct keys give nearly orthogonal ones.
pub fn pseudo_embed(key: &[u8], width: usize) -> Result<Vec<f64>> {
    if width != TEXT_WIDTH && width != IMAGE_WIDTH {
        return Err(Error::Validation(format!(
            "pseudo embedding width {width} unsupported (expected {TEXT_WIDTH} or {IMAGE_WIDTH})"
        )));
    }
    let mut hasher = Sha256::new();
    hasher.update((width as u64).to_le_bytes());
    hasher.update(key);
    let seed: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f64> = (0..width).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

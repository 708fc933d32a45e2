use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_matrix, AttentionError, FeatureSequence, GroundGuidedModel, Mat, ModelConfig, Result, Role};

/// 64-bit FNV-1a over `rows`, `cols` (u64 LE) and the row-major entries
/// (f64 LE, with `-0.0` written as `0.0`).
pub fn matrix_digest(m: &Mat) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&(m.nrows() as u64).to_le_bytes());
    h.write(&(m.ncols() as u64).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let x = m[(r, c)];
            let x = if x == 0.0 { 0.0 } else { x };
            h.write(&x.to_le_bytes());
        }
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureShapes {
    pub channels: usize,
    pub heads: usize,
    pub hidden: usize,
    pub queries: usize,
    pub visual_tokens: usize,
    pub ground_tokens: usize,
    pub encoder_blocks: usize,
    pub decoder_blocks: usize,
}

impl Default for FixtureShapes {
    fn default() -> Self {
        Self {
            channels: 32,
            heads: 4,
            hidden: 64,
            queries: 20,
            visual_tokens: 48,
            ground_tokens: 24,
            encoder_blocks: 3,
            decoder_blocks: 3,
        }
    }
}

/// Regression record of a seeded forward pass: the shapes, the seed and
/// hex digests of every output matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub seed: u64,
    pub shapes: FixtureShapes,
    pub digests: BTreeMap<String, String>,
}

/// Seeded model and inputs for `shapes`. Weights use stream 0 of the seed,
/// inputs stream 1.
pub fn fixture_inputs(seed: u64, s: &FixtureShapes) -> Result<(GroundGuidedModel, FeatureSequence, FeatureSequence)> {
    let model = GroundGuidedModel::seeded(ModelConfig {
        channels: s.channels,
        heads: s.heads,
        hidden: s.hidden,
        queries: s.queries,
        encoder_blocks: s.encoder_blocks,
        decoder_blocks: s.decoder_blocks,
        ground_positional: false,
        seed,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let fv = FeatureSequence::new(random_matrix(s.visual_tokens, s.channels, 1.0, &mut rng), Role::Visual)?;
    let fg = FeatureSequence::new(random_matrix(s.ground_tokens, s.channels, 1.0, &mut rng), Role::Ground)?;
    Ok((model, fv, fg))
}

impl Fixture {
    pub fn compute(name: &str, seed: u64, shapes: FixtureShapes) -> Result<Self> {
        let (model, fv, fg) = fixture_inputs(seed, &shapes)?;
        let out = model.forward(&fv, &fg)?;
        let mut digests = BTreeMap::new();
        let mut put = |k: String, m: &Mat| digests.insert(k, format!("{:016x}", matrix_digest(m)));
        put("visual_embeddings".into(), out.visual.tokens());
        put("ground_embeddings".into(), out.ground.tokens());
        put("queries".into(), out.queries.queries());
        for (i, a) in out.ground_attention.iter().enumerate() {
            put(format!("ground_attention_{i}"), a.weights());
        }
        Ok(Self { name: name.to_string(), seed, shapes, digests })
    }

    /// Recomputes the outputs; returns the keys whose digest changed.
    pub fn verify(&self) -> Result<Vec<String>> {
        let now = Self::compute(&self.name, self.seed, self.shapes.clone())?;
        let keys: BTreeSet<&String> = self.digests.keys().chain(now.digests.keys()).collect();
        Ok(keys.into_iter().filter(|k| self.digests.get(*k) != now.digests.get(*k)).cloned().collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AttentionError::Fixture(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_known_values() {
        // FNV-1a 64 of sixteen zero bytes
        let mut h = FnvHasher::default();
        h.write(&[0u8; 16]);
        assert_eq!(matrix_digest(&Mat::zeros(0, 0)), h.finish());
        let a = Mat::from_row_slice(1, 2, &[0.0, 1.0]);
        let b = Mat::from_row_slice(1, 2, &[-0.0, 1.0]);
        assert_eq!(matrix_digest(&a), matrix_digest(&b));
        assert_ne!(matrix_digest(&a), matrix_digest(&a.transpose()));
    }

    #[test]
    fn fixture_round_trips_and_verifies() {
        let f = Fixture::compute("small", 5, FixtureShapes { queries: 6, visual_tokens: 10, ground_tokens: 8, ..FixtureShapes::default() }).unwrap();
        assert_eq!(f.digests.len(), 6);
        let back = Fixture::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(back.verify().unwrap().is_empty());
        let mut tampered = back.clone();
        tampered.digests.insert("queries".into(), "0".repeat(16));
        assert_eq!(tampered.verify().unwrap(), vec!["queries".to_string()]);
        assert!(Fixture::from_json("{").is_err());
    }
}

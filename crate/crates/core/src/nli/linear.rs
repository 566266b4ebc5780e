//! Softmax classification head over hand-built pair features.
//!
//! Features: bias, hypothesis coverage by the premise, premise coverage by the
//! hypothesis, token Jaccard, a negation-mismatch flag, hypothesis length,
//! plus hashed buckets for hypothesis tokens, matched tokens and unmatched
//! tokens. Logits are `W x` with one weight row per label.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NliBackend, NliTrainConfig, ProbSimplex3};
use crate::artifact;
use crate::text::normalized_token_set;
use crate::Result;

pub const DENSE_FEATURES: usize = 6;
pub const DEFAULT_BUCKETS: usize = 4096;
const NEGATIONS: &[&str] = &["not", "no", "never", "don't", "dont", "can't", "cannot", "isn't", "won't", "nothing"];

pub const METADATA_FILE: &str = "metadata.json";
pub const WEIGHTS_FILE: &str = "weights.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearNli {
    pub backend_id: String,
    pub buckets: usize,
    pub max_input_words: usize,
    /// Row-major `[label][feature]`.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NliCheckpointMeta {
    pub backend_id: String,
    pub kind: String,
    pub config: NliTrainConfig,
    pub seed: u64,
    pub best_valid_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub config_hash: String,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl LinearNli {
    pub fn new(backend_id: impl Into<String>, buckets: usize) -> Self {
        LinearNli {
            backend_id: backend_id.into(),
            buckets,
            max_input_words: 256,
            weights: vec![0.0; 3 * (DENSE_FEATURES + buckets)],
        }
    }

    pub fn dim(&self) -> usize {
        DENSE_FEATURES + self.buckets
    }

    fn bucket(&self, kind: &str, token: &str) -> usize {
        let mut key = Vec::with_capacity(kind.len() + token.len() + 1);
        key.extend_from_slice(kind.as_bytes());
        key.push(b'|');
        key.extend_from_slice(token.as_bytes());
        DENSE_FEATURES + (fnv1a(&key) % self.buckets as u64) as usize
    }

    /// Sparse feature vector `(index, value)`.
    pub fn features(&self, premise: &str, hypothesis: &str) -> Vec<(usize, f64)> {
        let p = normalized_token_set(premise);
        let h = normalized_token_set(hypothesis);
        let matched = h.intersection(&p).count() as f64;
        let union = h.union(&p).count().max(1) as f64;
        let neg = |s: &std::collections::BTreeSet<String>| NEGATIONS.iter().any(|n| s.contains(*n));

        let mut f = vec![
            (0, 1.0),
            (1, if h.is_empty() { 0.0 } else { matched / h.len() as f64 }),
            (2, if p.is_empty() { 0.0 } else { matched / p.len() as f64 }),
            (3, matched / union),
            (4, if neg(&p) != neg(&h) { 1.0 } else { 0.0 }),
            (5, (h.len() as f64 / 20.0).min(1.0)),
        ];
        if self.buckets > 0 {
            let scale = 1.0 / (h.len().max(1) as f64).sqrt();
            for t in &h {
                f.push((self.bucket("h", t), scale));
                let kind = if p.contains(t) { "m" } else { "u" };
                f.push((self.bucket(kind, t), scale));
            }
        }
        f
    }

    pub fn logits(&self, features: &[(usize, f64)]) -> [f64; 3] {
        let dim = self.dim();
        let mut z = [0.0; 3];
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.weights[k * dim..(k + 1) * dim];
            *zk = features.iter().map(|(i, x)| row[*i] * x).sum();
        }
        z
    }

    pub fn save(&self, dir: &Path, meta: &NliCheckpointMeta) -> Result<()> {
        artifact::write_json(&dir.join(METADATA_FILE), meta)?;
        artifact::write_json(&dir.join(WEIGHTS_FILE), self)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        artifact::read_json(&dir.join(WEIGHTS_FILE))
    }

    pub fn load_metadata(dir: &Path) -> Result<NliCheckpointMeta> {
        artifact::read_json(&dir.join(METADATA_FILE))
    }
}

impl NliBackend for LinearNli {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn max_input_words(&self) -> usize {
        self.max_input_words
    }

    fn predict(&self, premise: &str, hypothesis: &str) -> Result<ProbSimplex3> {
        Ok(ProbSimplex3::from_logits(self.logits(&self.features(premise, hypothesis))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_uniform() {
        let m = LinearNli::new("x", 16);
        let p = m.predict("a b", "a c").unwrap();
        for v in p.as_array() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_features() {
        let m = LinearNli::new("x", 0);
        let f = m.features("i do not like dogs", "i like dogs");
        assert_eq!(f.len(), DENSE_FEATURES);
        assert_eq!(f[1].1, 1.0);
        assert_eq!(f[2].1, 3.0 / 5.0);
        assert_eq!(f[4].1, 1.0);
    }

    #[test]
    fn hashing_is_stable() {
        let m = LinearNli::new("x", 4096);
        assert_eq!(m.features("a b", "b c"), m.features("a b", "b c"));
        assert!(m.features("a b", "b c").iter().all(|(i, _)| *i < m.dim()));
    }
}

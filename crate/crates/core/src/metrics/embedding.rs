use std::collections::HashMap;

use rayon::prelude::*;

use super::check_corpus;
use crate::text::words;
use crate::{Error, Result};

/// Maps a token sequence to one vector per token. Implementations may be
/// contextual.
pub trait TokenEmbedder: Send + Sync {
    /// Identifier recorded in every report.
    fn model_id(&self) -> &str;

    fn embed(&self, tokens: &[&str]) -> Result<Vec<Vec<f64>>>;
}

/// Fixed token-to-vector table; unknown tokens are an error.
#[derive(Clone, Debug)]
pub struct TableEmbedder {
    id: String,
    table: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn new(id: impl Into<String>, table: HashMap<String, Vec<f64>>) -> Self {
        TableEmbedder { id: id.into(), table }
    }
}

impl TokenEmbedder for TableEmbedder {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn embed(&self, tokens: &[&str]) -> Result<Vec<Vec<f64>>> {
        tokens
            .iter()
            .map(|t| {
                self.table
                    .get(*t)
                    .cloned()
                    .ok_or_else(|| Error::backend(&self.id, format!("no embedding for {t:?}")))
            })
            .collect()
    }
}

/// Bag of hashed character trigrams of `#token#`. Deterministic and
/// context-free; related word forms get positive similarity.
#[derive(Clone, Debug)]
pub struct CharNgramEmbedder {
    id: String,
    dim: usize,
}

impl CharNgramEmbedder {
    pub fn new(dim: usize) -> Self {
        CharNgramEmbedder {
            id: format!("stub:char-trigram-{dim}"),
            dim: dim.max(1),
        }
    }

    fn vector(&self, token: &str) -> Vec<f64> {
        let chars: Vec<char> = std::iter::once('#')
            .chain(token.to_lowercase().chars())
            .chain(std::iter::once('#'))
            .collect();
        let mut v = vec![0.0; self.dim];
        for w in chars.windows(3) {
            let mut h: u64 = 0xcbf29ce484222325;
            for c in w {
                for b in c.to_string().bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
            }
            v[(h % self.dim as u64) as usize] += 1.0;
        }
        v
    }
}

impl Default for CharNgramEmbedder {
    fn default() -> Self {
        CharNgramEmbedder::new(256)
    }
}

impl TokenEmbedder for CharNgramEmbedder {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn embed(&self, tokens: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(tokens.iter().map(|t| self.vector(t)).collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Greedy-matching F1 of one pair as a fraction. Similarities below zero
/// count as zero.
pub(crate) fn embedding_pair(cand: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    match (cand.is_empty(), reference.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let sim: Vec<Vec<f64>> = cand
        .iter()
        .map(|c| reference.iter().map(|r| cosine(c, r).clamp(0.0, 1.0)).collect())
        .collect();
    let precision = sim.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).sum::<f64>() / cand.len() as f64;
    let recall = (0..reference.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean per-example greedy-matching F1 as a percentage.
pub fn embedding_score(candidates: &[&str], references: &[&str], embedder: &dyn TokenEmbedder) -> Result<f64> {
    check_corpus(candidates, references)?;
    let scores: Vec<f64> = candidates
        .par_iter()
        .zip(references)
        .map(|(c, r)| {
            let ce = embedder.embed(&words(c))?;
            let re = embedder.embed(&words(r))?;
            Ok(embedding_pair(&ce, &re))
        })
        .collect::<Result<_>>()?;
    Ok(100.0 * scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TableEmbedder {
        let t = [("a".to_string(), vec![1.0, 0.0]), ("b".to_string(), vec![0.6, 0.8])];
        TableEmbedder::new("stub:table", t.into_iter().collect())
    }

    #[test]
    fn two_token_table_by_hand() {
        // cos(a, b) = 0.6; P = 1, R = (1 + 0.6) / 2 = 0.8, F1 = 1.6 / 1.8
        let s = embedding_score(&["a"], &["a b"], &table()).unwrap();
        assert!((s - 100.0 * 1.6 / 1.8).abs() < 1e-4);
        // P = R = 0.6
        let s = embedding_score(&["b"], &["a"], &table()).unwrap();
        assert!((s - 60.0).abs() < 1e-4);
    }

    #[test]
    fn identity_is_100_with_any_backend() {
        let c = ["a b a", "b"];
        assert!((embedding_score(&c, &c, &table()).unwrap() - 100.0).abs() < 1e-9);
        let c = ["i love reading mysteries", "sorry"];
        assert!((embedding_score(&c, &c, &CharNgramEmbedder::default()).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn backend_failure_propagates() {
        assert!(matches!(embedding_score(&["zzz"], &["a"], &table()), Err(Error::Backend { .. })));
    }

    #[test]
    fn trigram_stub_relates_word_forms() {
        let e = CharNgramEmbedder::default();
        let v = e.embed(&["mystery", "mysteries", "cat"]).unwrap();
        assert!(cosine(&v[0], &v[1]) > 0.4);
        assert!(cosine(&v[0], &v[1]) > cosine(&v[0], &v[2]));
        assert_eq!(embedding_score(&[""], &["a"], &e).unwrap(), 0.0);
    }
}

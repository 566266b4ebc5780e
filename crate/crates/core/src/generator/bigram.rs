//! A small trainable decoder: next-token logits are
//! `bias + bigram[last] + segment[s] + mean(cond[u] for distinct utterance
//! tokens u)`, where `s` counts the `<sep>` tokens emitted after `<gen>`.
//! The utterance is whatever precedes the first `<gen>` in the prefix.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::format::FormattedExample;
use super::loss::{pg_loss_grad, pg_loss_with, Reduction};
use super::model::DecoderModel;
use super::vocab::Vocab;
use crate::artifact;
use crate::{Error, Result};

pub const BIGRAM_KIND: &str = "conditional-bigram";
const WEIGHTS_FILE: &str = "weights.bin";
const VOCAB_FILE: &str = "vocab.json";
/// Segment rows; later profiles share the last one.
const SEGMENTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalBigramLm {
    backend_id: String,
    vocab: Vocab,
    /// `(1 + 2V + SEGMENTS)` rows of `V`: bias, bigram rows, conditioning
    /// rows, segment rows.
    params: Vec<f64>,
}

impl ConditionalBigramLm {
    pub fn new(backend_id: impl Into<String>, vocab: Vocab) -> Self {
        let v = vocab.len();
        ConditionalBigramLm {
            backend_id: backend_id.into(),
            vocab,
            params: vec![0.0; (1 + 2 * v + SEGMENTS) * v],
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn row_len(&self) -> usize {
        self.vocab.len()
    }

    fn bigram_row(&self, last: u32) -> usize {
        1 + last as usize
    }

    fn cond_row(&self, token: u32) -> usize {
        1 + self.vocab.len() + token as usize
    }

    fn segment_row(&self, seps: usize) -> usize {
        1 + 2 * self.vocab.len() + seps.min(SEGMENTS - 1)
    }

    fn row(&self, r: usize) -> &[f64] {
        let v = self.vocab.len();
        &self.params[r * v..(r + 1) * v]
    }

    /// Distinct tokens before the first `<gen>`; empty when there is none.
    fn context(&self, prefix: &[u32]) -> Vec<u32> {
        let gen = self.vocab.specials().gen;
        match prefix.iter().position(|t| *t == gen) {
            Some(b) => prefix[..b].iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
            None => Vec::new(),
        }
    }

    /// Number of `<sep>` after the first `<gen>` in `prefix`.
    fn seps(&self, prefix: &[u32]) -> usize {
        let s = self.vocab.specials();
        match prefix.iter().position(|t| *t == s.gen) {
            Some(b) => prefix[b..].iter().filter(|t| **t == s.sep).count(),
            None => 0,
        }
    }

    /// Rows feeding the next-token logits, with their weights.
    fn active_rows(&self, last: u32, seps: usize, context: &[u32]) -> Vec<(usize, f64)> {
        let mut rows = vec![(0, 1.0), (self.bigram_row(last), 1.0), (self.segment_row(seps), 1.0)];
        let w = 1.0 / context.len().max(1) as f64;
        rows.extend(context.iter().map(|u| (self.cond_row(*u), w)));
        rows
    }

    fn logits_from(&self, rows: &[(usize, f64)]) -> Vec<f64> {
        let mut z = vec![0.0; self.vocab.len()];
        for (r, w) in rows {
            for (zk, p) in z.iter_mut().zip(self.row(*r)) {
                *zk += w * p;
            }
        }
        z
    }

    fn example_logits(&self, example: &FormattedExample) -> (Vec<Vec<(usize, f64)>>, Vec<Vec<f64>>) {
        let (inputs, _, _) = example.shifted();
        let context = self.context(&example.token_ids);
        let rows: Vec<_> = (0..inputs.len())
            .map(|i| self.active_rows(inputs[i], self.seps(&inputs[..=i]), &context))
            .collect();
        let logits = rows.iter().map(|r| self.logits_from(r)).collect();
        (rows, logits)
    }

    /// Masked loss of one formatted example.
    pub fn example_loss(&self, example: &FormattedExample, reduction: Reduction) -> Result<f64> {
        let (_, targets, mask) = example.shifted();
        let (_, logits) = self.example_logits(example);
        pg_loss_with(&logits, targets, mask, reduction)
    }

    /// Adds `scale * d loss / d params` into `grads` and records touched rows.
    pub(crate) fn accumulate_grad(
        &self,
        example: &FormattedExample,
        reduction: Reduction,
        scale: f64,
        grads: &mut [f64],
        touched: &mut BTreeSet<usize>,
    ) -> Result<f64> {
        let (_, targets, mask) = example.shifted();
        let (rows, logits) = self.example_logits(example);
        let (loss, dlogits) = pg_loss_grad(&logits, targets, mask, reduction)?;
        let v = self.vocab.len();
        for ((active, g), m) in rows.iter().zip(&dlogits).zip(mask) {
            if !*m {
                continue;
            }
            for (r, w) in active {
                touched.insert(*r);
                for (dst, gk) in grads[r * v..(r + 1) * v].iter_mut().zip(g) {
                    *dst += scale * w * gk;
                }
            }
        }
        Ok(loss)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        artifact::write_json(&dir.join(VOCAB_FILE), &self.vocab)?;
        let path = dir.join(WEIGHTS_FILE);
        let mut f = artifact::create_file(&path)?;
        let bytes: Vec<u8> = self.params.iter().flat_map(|p| p.to_le_bytes()).collect();
        f.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
        f.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path, backend_id: impl Into<String>) -> Result<Self> {
        let vocab: Vocab = artifact::read_json(&dir.join(VOCAB_FILE))?;
        let path = dir.join(WEIGHTS_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let mut model = ConditionalBigramLm::new(backend_id, vocab);
        if bytes.len() != model.params.len() * 8 {
            return Err(Error::ShapeMismatch(format!(
                "{} holds {} bytes, expected {}",
                path.display(),
                bytes.len(),
                model.params.len() * 8
            )));
        }
        for (p, chunk) in model.params.iter_mut().zip(bytes.chunks_exact(8)) {
            *p = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Ok(model)
    }
}

impl DecoderModel for ConditionalBigramLm {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logits(&self, prefix: &[u32]) -> Vec<f64> {
        let last = prefix.last().copied().unwrap_or(self.vocab.specials().gen);
        self.logits_from(&self.active_rows(last, self.seps(prefix), &self.context(prefix)))
    }
}

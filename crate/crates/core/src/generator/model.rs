use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::vocab::Vocab;
use crate::{Error, Result};

/// A left-to-right language model over a fixed vocabulary.
pub trait DecoderModel: Send + Sync {
    fn backend_id(&self) -> &str;

    fn vocab(&self) -> &Vocab;

    /// Scores for the token following `prefix`, one per vocabulary entry.
    fn next_logits(&self, prefix: &[u32]) -> Vec<f64>;
}

/// Shared, immutable decoder.
#[derive(Clone)]
pub struct DecoderHandle {
    inner: Arc<dyn DecoderModel>,
}

impl fmt::Debug for DecoderHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecoderHandle")
            .field("backend_id", &self.backend_id())
            .finish()
    }
}

impl DecoderHandle {
    pub fn new<M: DecoderModel + 'static>(model: M) -> Result<Self> {
        Self::from_arc(Arc::new(model))
    }

    pub fn from_arc(model: Arc<dyn DecoderModel>) -> Result<Self> {
        let s = model.vocab().specials();
        let ids = [s.unk, s.gen, s.sep, s.eos];
        for (i, a) in ids.iter().enumerate() {
            if ids[i + 1..].contains(a) {
                return Err(Error::InvalidInput(format!(
                    "decoder {} maps two special tokens to id {a}",
                    model.backend_id()
                )));
            }
        }
        Ok(DecoderHandle { inner: model })
    }

    pub fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    pub fn vocab(&self) -> &Vocab {
        self.inner.vocab()
    }

    pub fn next_logits(&self, prefix: &[u32]) -> Result<Vec<f64>> {
        let logits = self.inner.next_logits(prefix);
        if logits.len() != self.vocab().len() {
            return Err(Error::backend(
                self.backend_id(),
                format!("{} logits for a vocabulary of {}", logits.len(), self.vocab().len()),
            ));
        }
        Ok(logits)
    }
}

/// Always predicts end-of-sequence.
#[derive(Clone, Debug)]
pub struct EosStub {
    vocab: Vocab,
}

impl EosStub {
    pub fn new(vocab: Vocab) -> Self {
        EosStub { vocab }
    }
}

impl DecoderModel for EosStub {
    fn backend_id(&self) -> &str {
        "stub:eos"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logits(&self, _prefix: &[u32]) -> Vec<f64> {
        let mut z = vec![0.0; self.vocab.len()];
        z[self.vocab.specials().eos as usize] = 1.0;
        z
    }
}

/// Predicts the next token from the last one via a fixed table; anything
/// not in the table is followed by end-of-sequence.
#[derive(Clone, Debug)]
pub struct LookupStub {
    vocab: Vocab,
    table: HashMap<u32, u32>,
}

impl LookupStub {
    pub fn new(vocab: Vocab, table: HashMap<u32, u32>) -> Self {
        LookupStub { vocab, table }
    }

    /// Table given as token strings; unknown strings map to `<unk>`.
    pub fn from_words(vocab: Vocab, pairs: &[(&str, &str)]) -> Self {
        let table = pairs.iter().map(|(a, b)| (vocab.id(a), vocab.id(b))).collect();
        LookupStub { vocab, table }
    }
}

impl DecoderModel for LookupStub {
    fn backend_id(&self) -> &str {
        "stub:lookup"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logits(&self, prefix: &[u32]) -> Vec<f64> {
        let eos = self.vocab.specials().eos;
        let next = prefix.last().and_then(|t| self.table.get(t)).copied().unwrap_or(eos);
        let mut z = vec![0.0; self.vocab.len()];
        z[next as usize] = 1.0;
        z
    }
}

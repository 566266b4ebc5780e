//! Three-way entailment classification.
//!
//! A [`ClassifierHandle`] wraps any [`NliBackend`]: the token-overlap stub, the
//! trainable linear head in [`linear`], or an external encoder. The handle
//! validates inputs, applies the truncation policy and checks that every
//! backend output is a proper probability simplex.

pub mod linear;
mod overlap;
mod train;

use std::borrow::Cow;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::NliExample;
use crate::{Error, Result};

pub use linear::LinearNli;
pub use overlap::{token_overlap, OverlapStub, OVERLAP_STUB_ID};
pub use train::{train_nli, EpochRecord, NliTrainConfig, NliTrainOutcome};

/// Label order is contradiction < neutral < entailment. Argmax ties resolve to
/// the earliest label in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NliLabel {
    #[serde(rename = "C")]
    Contradiction,
    #[serde(rename = "N")]
    Neutral,
    #[serde(rename = "E")]
    Entailment,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Contradiction, NliLabel::Neutral, NliLabel::Entailment];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<NliLabel> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NliLabel::Contradiction => "C",
            NliLabel::Neutral => "N",
            NliLabel::Entailment => "E",
        })
    }
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Distribution over (contradiction, neutral, entailment).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbSimplex3([f64; 3]);

impl ProbSimplex3 {
    pub fn new(contradiction: f64, neutral: f64, entailment: f64) -> Result<Self> {
        let p = [contradiction, neutral, entailment];
        if p.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
            return Err(Error::InvalidInput(format!("probabilities out of range: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbSimplex3(p))
    }

    pub fn from_logits(logits: [f64; 3]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp = logits.map(|z| (z - max).exp());
        let sum: f64 = exp.iter().sum();
        ProbSimplex3(exp.map(|e| e / sum))
    }

    pub fn prob(&self, label: NliLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn entailment(&self) -> f64 {
        self.0[NliLabel::Entailment.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn argmax(&self) -> NliLabel {
        let mut best = 0;
        for i in 1..3 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        NliLabel::ALL[best]
    }
}

/// A classifier producing `p(y | premise, hypothesis)`.
///
/// Implementations must be deterministic: the same inputs always give the
/// same distribution.
pub trait NliBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    /// Input budget in whitespace words for premise and hypothesis together.
    fn max_input_words(&self) -> usize {
        usize::MAX
    }

    fn predict(&self, premise: &str, hypothesis: &str) -> Result<ProbSimplex3>;
}

#[derive(Clone)]
pub struct ClassifierHandle {
    backend: Arc<dyn NliBackend>,
}

impl fmt::Debug for ClassifierHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassifierHandle")
            .field("backend", &self.backend.backend_id())
            .finish()
    }
}

impl ClassifierHandle {
    pub fn new<B: NliBackend + 'static>(backend: B) -> Self {
        ClassifierHandle {
            backend: Arc::new(backend),
        }
    }

    pub fn from_arc(backend: Arc<dyn NliBackend>) -> Self {
        ClassifierHandle { backend }
    }

    pub fn overlap_stub() -> Self {
        Self::new(OverlapStub)
    }

    /// Loads a checkpoint directory written by [`LinearNli::save`].
    pub fn load_checkpoint(dir: &Path) -> Result<Self> {
        Ok(Self::new(LinearNli::load(dir)?))
    }

    pub fn backend_id(&self) -> &str {
        self.backend.backend_id()
    }

    pub fn classify(&self, premise: &str, hypothesis: &str) -> Result<ProbSimplex3> {
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(Error::InvalidInput("premise and hypothesis must be non-empty".into()));
        }
        let (premise, hypothesis) = truncate_pair(premise, hypothesis, self.backend.max_input_words());
        let out = self.backend.predict(&premise, &hypothesis)?;
        // re-validate: backends are pluggable
        let [c, n, e] = out.as_array();
        ProbSimplex3::new(c, n, e).map_err(|err| Error::backend(self.backend_id(), err.to_string()))
    }

    /// Classifies pairs in parallel; results come back in input order.
    pub fn classify_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ProbSimplex3>> {
        pairs
            .par_iter()
            .map(|(p, h)| self.classify(p, h))
            .collect()
    }

    pub fn predict_label(&self, premise: &str, hypothesis: &str) -> Result<NliLabel> {
        Ok(self.classify(premise, hypothesis)?.argmax())
    }
}

/// Fits `premise + hypothesis` into `budget` whitespace words. Words are
/// dropped from the end of the premise first; the hypothesis is truncated
/// last, only when it alone exceeds the budget.
pub fn truncate_pair<'a>(premise: &'a str, hypothesis: &'a str, budget: usize) -> (Cow<'a, str>, Cow<'a, str>) {
    let p_words: Vec<&str> = premise.split_whitespace().collect();
    let h_words: Vec<&str> = hypothesis.split_whitespace().collect();
    if p_words.len() + h_words.len() <= budget {
        return (Cow::Borrowed(premise), Cow::Borrowed(hypothesis));
    }
    let h_keep = h_words.len().min(budget);
    let p_keep = budget - h_keep;
    log::warn!(
        "truncating NLI input from {}+{} to {p_keep}+{h_keep} words",
        p_words.len(),
        h_words.len()
    );
    (
        Cow::Owned(p_words[..p_keep].join(" ")),
        Cow::Owned(h_words[..h_keep].join(" ")),
    )
}

pub fn classify(handle: &ClassifierHandle, premise: &str, hypothesis: &str) -> Result<ProbSimplex3> {
    handle.classify(premise, hypothesis)
}

/// Fraction of examples whose argmax prediction equals the gold label.
pub fn evaluate_accuracy(handle: &ClassifierHandle, test: &[NliExample]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let pairs: Vec<(&str, &str)> = test
        .iter()
        .map(|e| (e.premise.as_str(), e.hypothesis.as_str()))
        .collect();
    let predictions = handle.classify_batch(&pairs)?;
    let correct = predictions
        .iter()
        .zip(test)
        .filter(|(p, e)| p.argmax() == e.label)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Concatenates both sets and shuffles deterministically by `seed`.
pub fn merge_training_sets(a: Vec<NliExample>, b: Vec<NliExample>, seed: u64) -> Vec<NliExample> {
    let mut out = a;
    out.extend(b);
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

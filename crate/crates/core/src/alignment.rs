//! Entailment-based alignment of utterances with persona sentences.
//!
//! For an utterance `u` and a persona `P` of the same speaker, the aligned
//! profile sentences are `{p in P : argmax_y p(y | u, p) = E}`, with the
//! utterance as premise and the profile sentence as hypothesis. Each aligned
//! pair keeps `p(E)` as its confidence.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifact;
use crate::corpus::{enumerate_pairs, DialogueCorpus, ProfileSentence, Utterance};
use crate::nli::{ClassifierHandle, NliLabel};
use crate::{Error, Result};

/// One entailed (utterance, profile sentence) pair. Serializes as one line of
/// the aligned-pair dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    #[serde(rename = "dialogue")]
    pub dialogue_id: String,
    #[serde(rename = "turn")]
    pub turn_index: usize,
    pub speaker: String,
    pub utterance: String,
    pub profile: String,
    /// Entailment probability in (0, 1], full precision.
    pub p_entail: f64,
}

impl AlignedPair {
    fn new(u: &Utterance, p: &ProfileSentence, p_entail: f64) -> Self {
        AlignedPair {
            dialogue_id: u.dialogue_id.clone(),
            turn_index: u.turn_index,
            speaker: u.speaker.clone(),
            utterance: u.text.clone(),
            profile: p.text.clone(),
            p_entail,
        }
    }

    /// Stable short identifier derived from dialogue, turn and profile text.
    pub fn pair_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.dialogue_id.as_bytes());
        h.update([0]);
        h.update(self.turn_index.to_le_bytes());
        h.update([0]);
        h.update(self.profile.as_bytes());
        h.finalize()[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn confidence_percent(&self) -> f64 {
        self.p_entail * 100.0
    }
}

/// Profile sentences of `persona` entailed by `utterance`, in persona order.
pub fn entailed_profiles(
    utterance: &Utterance,
    persona: &[ProfileSentence],
    classifier: &ClassifierHandle,
) -> Result<Vec<AlignedPair>> {
    if persona.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty persona for speaker {:?}",
            utterance.speaker
        )));
    }
    let inputs: Vec<(&str, &str)> = persona
        .iter()
        .map(|p| (utterance.text.as_str(), p.text.as_str()))
        .collect();
    let dists = classifier.classify_batch(&inputs)?;
    Ok(persona
        .iter()
        .zip(dists)
        .filter(|(_, d)| d.argmax() == NliLabel::Entailment)
        .map(|(p, d)| AlignedPair::new(utterance, p, d.entailment()))
        .collect())
}

/// Runs the alignment over every enumerated pair of the corpus. Pairs are
/// classified in parallel; output order is enumeration order.
pub fn align_corpus(corpus: &DialogueCorpus, classifier: &ClassifierHandle) -> Result<Vec<AlignedPair>> {
    let candidates: Vec<(&Utterance, &ProfileSentence)> = enumerate_pairs(corpus).collect();
    let inputs: Vec<(&str, &str)> = candidates
        .iter()
        .map(|(u, p)| (u.text.as_str(), p.text.as_str()))
        .collect();
    let dists = classifier.classify_batch(&inputs)?;
    Ok(candidates
        .into_iter()
        .zip(dists)
        .filter(|(_, d)| d.argmax() == NliLabel::Entailment)
        .map(|((u, p), d)| AlignedPair::new(u, p, d.entailment()))
        .collect())
}

/// Pairs whose confidence is strictly greater than `threshold`.
pub fn filter_by_confidence(pairs: &[AlignedPair], threshold: f64) -> Vec<AlignedPair> {
    pairs.iter().filter(|p| p.p_entail > threshold).cloned().collect()
}

pub const DEFAULT_BIN_WIDTH: f64 = 1.0;

/// Histogram and moments of entailment confidences, in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSummary {
    pub bin_width: f64,
    /// `bins[i]` counts confidences in `[i * w, (i + 1) * w)`; 100% falls in
    /// the last bin.
    pub bins: Vec<u64>,
    pub total: u64,
    pub mean: f64,
    /// Population variance, percent squared.
    pub variance: f64,
}

impl ConfidenceSummary {
    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_width
    }

    /// `bin_start;count` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start;count\n");
        for (i, c) in self.bins.iter().enumerate() {
            let _ = writeln!(out, "{};{}", self.bin_start(i), c);
        }
        out
    }
}

pub fn confidence_summary(pairs: &[AlignedPair], bin_width: f64) -> Result<ConfidenceSummary> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no aligned pairs to summarize".into()));
    }
    if !(bin_width > 0.0 && bin_width <= 100.0) {
        return Err(Error::InvalidInput(format!("bin width {bin_width} outside (0, 100]")));
    }
    let n_bins = (100.0 / bin_width).ceil() as usize;
    let mut bins = vec![0u64; n_bins];
    let percents: Vec<f64> = pairs.iter().map(AlignedPair::confidence_percent).collect();
    for x in &percents {
        // epsilon absorbs representation error such as 0.29 * 100 = 28.999..
        let idx = ((x / bin_width) + 1e-9).floor().max(0.0) as usize;
        bins[idx.min(n_bins - 1)] += 1;
    }
    let n = percents.len() as f64;
    let mean = percents.iter().sum::<f64>() / n;
    let variance = percents.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(ConfidenceSummary {
        bin_width,
        bins,
        total: pairs.len() as u64,
        mean,
        variance,
    })
}

pub fn write_pairs(path: &Path, pairs: &[AlignedPair]) -> Result<()> {
    artifact::write_jsonl(path, pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<AlignedPair>> {
    artifact::read_jsonl(path)
}

pub fn write_histogram_csv(path: &Path, summary: &ConfidenceSummary) -> Result<()> {
    use std::io::Write;
    let mut out = artifact::create_file(path)?;
    out.write_all(summary.to_csv().as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

//! The profile-generation dataset: one record per utterance that keeps at
//! least one entailed profile sentence above the confidence threshold.
//!
//! On disk a dataset is a JSON-lines file plus a `<file>.meta.json` sidecar
//! holding the threshold, classifier id, build timestamp and statistics.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::alignment::{align_corpus, filter_by_confidence, AlignedPair};
use crate::artifact::{self, sidecar_path};
use crate::corpus::{DialogueCorpus, Split};
use crate::nli::ClassifierHandle;
use crate::text::word_count;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dialogue: String,
    pub turn: usize,
    pub speaker: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub text: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawRecord", try_from = "RawRecord")]
pub struct PgdRecord {
    pub utterance: String,
    /// Persona order, deduplicated by text.
    pub profiles: Vec<ProfileEntry>,
    pub split: Split,
    pub provenance: Provenance,
}

impl PgdRecord {
    pub fn profile_texts(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.text.as_str()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    utterance: String,
    profiles: Vec<String>,
    confidences: Vec<f64>,
    split: Split,
    provenance: Provenance,
}

impl From<PgdRecord> for RawRecord {
    fn from(r: PgdRecord) -> Self {
        let (profiles, confidences) = r.profiles.into_iter().map(|p| (p.text, p.confidence)).unzip();
        RawRecord {
            utterance: r.utterance,
            profiles,
            confidences,
            split: r.split,
            provenance: r.provenance,
        }
    }
}

impl TryFrom<RawRecord> for PgdRecord {
    type Error = String;

    fn try_from(r: RawRecord) -> std::result::Result<Self, String> {
        if r.profiles.len() != r.confidences.len() {
            return Err(format!(
                "{} profiles but {} confidences",
                r.profiles.len(),
                r.confidences.len()
            ));
        }
        if r.profiles.is_empty() {
            return Err("record has no profile sentence".into());
        }
        Ok(PgdRecord {
            utterance: r.utterance,
            profiles: r
                .profiles
                .into_iter()
                .zip(r.confidences)
                .map(|(text, confidence)| ProfileEntry { text, confidence })
                .collect(),
            split: r.split,
            provenance: r.provenance,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdDataset {
    pub records: Vec<PgdRecord>,
    /// Strict lower bound every stored confidence exceeds.
    pub threshold: f64,
    pub classifier_id: String,
}

impl PgdDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &PgdRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

/// Groups aligned pairs per utterance after filtering at `threshold`.
/// Record order is the first-appearance order of each utterance.
pub fn records_from_pairs(split: Split, pairs: &[AlignedPair], threshold: f64) -> Vec<PgdRecord> {
    let mut grouped: IndexMap<(String, usize), PgdRecord> = IndexMap::new();
    for pair in filter_by_confidence(pairs, threshold) {
        let record = grouped
            .entry((pair.dialogue_id.clone(), pair.turn_index))
            .or_insert_with(|| PgdRecord {
                utterance: pair.utterance.clone(),
                profiles: Vec::new(),
                split,
                provenance: Provenance {
                    dialogue: pair.dialogue_id.clone(),
                    turn: pair.turn_index,
                    speaker: pair.speaker.clone(),
                },
            });
        if record.profiles.iter().all(|p| p.text != pair.profile) {
            record.profiles.push(ProfileEntry {
                text: pair.profile,
                confidence: pair.p_entail,
            });
        }
    }
    grouped.into_values().collect()
}

/// Builds the dataset from already aligned pairs, one pair list per split.
pub fn build_from_pairs(
    pairs_by_split: &[(Split, Vec<AlignedPair>)],
    classifier_id: &str,
    threshold: f64,
) -> Result<PgdDataset> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!("threshold {threshold} outside [0, 1]")));
    }
    let records: Vec<PgdRecord> = pairs_by_split
        .iter()
        .flat_map(|(split, pairs)| records_from_pairs(*split, pairs, threshold))
        .collect();
    if records.is_empty() {
        log::warn!("dataset is empty at threshold {threshold}");
    }
    Ok(PgdDataset {
        records,
        threshold,
        classifier_id: classifier_id.to_string(),
    })
}

/// Aligns every corpus with `classifier` and assembles the dataset. Each
/// record inherits the split of the corpus it came from.
pub fn build_pgd(corpora: &[DialogueCorpus], classifier: &ClassifierHandle, threshold: f64) -> Result<PgdDataset> {
    let mut by_split = Vec::with_capacity(corpora.len());
    for corpus in corpora {
        by_split.push((corpus.split, align_corpus(corpus, classifier)?));
    }
    build_from_pairs(&by_split, classifier.backend_id(), threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub samples: usize,
    /// `None` for an empty split.
    pub avg_profiles: Option<f64>,
    pub avg_utterance_words: Option<f64>,
    /// Averaged over all profile sentences of the split.
    pub avg_profile_words: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdStats {
    pub splits: Vec<SplitStats>,
}

impl PgdStats {
    pub fn get(&self, split: Split) -> &SplitStats {
        self.splits.iter().find(|s| s.split == split).expect("all splits present")
    }

    /// Text table in the split / metric / value layout.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(out, "{:<7}{:<30}{}", "Split", "Metric", "Value");
        for s in &self.splits {
            let name = match s.split {
                Split::Train => "Train",
                Split::Valid => "Valid",
                Split::Test => "Test",
            };
            let _ = writeln!(out, "{:<7}{:<30}{}", name, "# Samples", s.samples);
            let _ = writeln!(out, "{:<7}{:<30}{}", "", "Avg. Profile Sentences", fmt(s.avg_profiles));
            let _ = writeln!(out, "{:<7}{:<30}{}", "", "Avg. Utterance Words", fmt(s.avg_utterance_words));
            let _ = writeln!(out, "{:<7}{:<30}{}", "", "Avg. Profile Sentence Words", fmt(s.avg_profile_words));
        }
        out
    }
}

/// Per-split counts and averages; words are whitespace-separated tokens of
/// the raw text.
pub fn compute_statistics(records: &[PgdRecord]) -> PgdStats {
    let splits = Split::ALL
        .iter()
        .map(|&split| {
            let rows: Vec<&PgdRecord> = records.iter().filter(|r| r.split == split).collect();
            if rows.is_empty() {
                return SplitStats {
                    split,
                    samples: 0,
                    avg_profiles: None,
                    avg_utterance_words: None,
                    avg_profile_words: None,
                };
            }
            let n = rows.len() as f64;
            let profiles: usize = rows.iter().map(|r| r.profiles.len()).sum();
            let utterance_words: usize = rows.iter().map(|r| word_count(&r.utterance)).sum();
            let profile_words: usize = rows
                .iter()
                .flat_map(|r| &r.profiles)
                .map(|p| word_count(&p.text))
                .sum();
            SplitStats {
                split,
                samples: rows.len(),
                avg_profiles: Some(profiles as f64 / n),
                avg_utterance_words: Some(utterance_words as f64 / n),
                avg_profile_words: Some(profile_words as f64 / profiles as f64),
            }
        })
        .collect();
    PgdStats { splits }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgdMetadata {
    pub threshold: f64,
    pub classifier_id: String,
    pub build_timestamp: u64,
    pub record_count: usize,
    pub statistics: PgdStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Writes the records to `path` and the metadata sidecar next to it.
pub fn write_pgd(dataset: &PgdDataset, path: &Path, config_hash: Option<&str>) -> Result<PgdMetadata> {
    artifact::write_jsonl(path, &dataset.records)?;
    let meta = PgdMetadata {
        threshold: dataset.threshold,
        classifier_id: dataset.classifier_id.clone(),
        build_timestamp: artifact::build_timestamp(),
        record_count: dataset.records.len(),
        statistics: compute_statistics(&dataset.records),
        config_hash: config_hash.map(str::to_string),
    };
    artifact::write_json(&sidecar_path(path), &meta)?;
    Ok(meta)
}

/// Reads a dataset and re-checks every record against the stored threshold.
pub fn read_pgd(path: &Path) -> Result<PgdDataset> {
    let meta: PgdMetadata = artifact::read_json(&sidecar_path(path))?;
    let records: Vec<PgdRecord> = artifact::read_jsonl(path)?;
    for (i, r) in records.iter().enumerate() {
        let bad = |message: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            record: i + 1,
            message,
        };
        if let Some(p) = r.profiles.iter().find(|p| !(p.confidence > meta.threshold)) {
            return Err(bad(format!(
                "confidence {} does not exceed threshold {}",
                p.confidence, meta.threshold
            )));
        }
        for (j, p) in r.profiles.iter().enumerate() {
            if r.profiles[..j].iter().any(|q| q.text == p.text) {
                return Err(bad(format!("duplicate profile {:?}", p.text)));
            }
        }
    }
    if records.len() != meta.record_count {
        return Err(Error::InvalidInput(format!(
            "{}: metadata lists {} records, file has {}",
            path.display(),
            meta.record_count,
            records.len()
        )));
    }
    Ok(PgdDataset {
        records,
        threshold: meta.threshold,
        classifier_id: meta.classifier_id,
    })
}

pub fn read_pgd_metadata(path: &Path) -> Result<PgdMetadata> {
    artifact::read_json(&sidecar_path(path))
}

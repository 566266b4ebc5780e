use std::collections::HashSet;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IntervalSpec;
use crate::alignment::AlignedPair;
use crate::artifact;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub pair_id: String,
    pub utterance: String,
    pub profile: String,
    /// Index into the batch's interval list. Never shown to annotators.
    pub interval: usize,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBatch {
    pub id: String,
    pub seed: u64,
    pub intervals: Vec<IntervalSpec>,
    pub items: Vec<BatchItem>,
}

impl AnnotationBatch {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.pair_id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate pair id {:?} in batch", item.pair_id)));
            }
            let interval = self.intervals.get(item.interval).ok_or_else(|| {
                Error::InvalidInput(format!("item {:?} refers to missing interval", item.pair_id))
            })?;
            if !interval.contains(item.confidence * 100.0) {
                return Err(Error::InvalidInput(format!(
                    "item {:?} confidence {} outside {interval}",
                    item.pair_id, item.confidence
                )));
            }
        }
        Ok(())
    }

    pub fn item(&self, pair_id: &str) -> Option<&BatchItem> {
        self.items.iter().find(|i| i.pair_id == pair_id)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let batch: AnnotationBatch = artifact::read_json(path)?;
        batch.validate()?;
        Ok(batch)
    }
}

/// Draws `n_per_interval` pairs uniformly without replacement from each
/// interval, then shuffles the union so item order does not reveal the
/// interval. Deterministic for a given seed.
pub fn stratified_sample(
    batch_id: &str,
    pairs: &[AlignedPair],
    intervals: &[IntervalSpec],
    n_per_interval: usize,
    seed: u64,
) -> Result<AnnotationBatch> {
    for (i, a) in intervals.iter().enumerate() {
        if let Some(b) = intervals[i + 1..].iter().find(|b| a.overlaps(b)) {
            return Err(Error::InvalidInput(format!("intervals {a} and {b} overlap")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let unique: Vec<(&AlignedPair, String)> = pairs
        .iter()
        .map(|p| (p, p.pair_id()))
        .filter(|(_, id)| seen.insert(id.clone()))
        .collect();

    let mut items = Vec::with_capacity(intervals.len() * n_per_interval);
    for (k, interval) in intervals.iter().enumerate() {
        let members: Vec<&(&AlignedPair, String)> = unique
            .iter()
            .filter(|(p, _)| interval.contains(p.confidence_percent()))
            .collect();
        if members.len() < n_per_interval {
            return Err(Error::InsufficientPairs {
                interval: interval.to_string(),
                available: members.len(),
                requested: n_per_interval,
            });
        }
        let mut picked = index::sample(&mut rng, members.len(), n_per_interval).into_vec();
        picked.sort_unstable();
        items.extend(picked.into_iter().map(|i| {
            let (p, id) = members[i];
            BatchItem {
                pair_id: id.clone(),
                utterance: p.utterance.clone(),
                profile: p.profile.clone(),
                interval: k,
                confidence: p.p_entail,
            }
        }));
    }
    items.shuffle(&mut rng);
    Ok(AnnotationBatch {
        id: batch_id.to_string(),
        seed,
        intervals: intervals.to_vec(),
        items,
    })
}

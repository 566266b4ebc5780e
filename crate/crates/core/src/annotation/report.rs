//! Accuracy and agreement over effective judgments.
//!
//! * Interval accuracy: for each annotator, marked items over judged items in
//!   the interval; averaged over annotators, in percent.
//! * Agreement rate: for each pair of annotators, the share of commonly judged
//!   items with identical marks; averaged over annotator pairs, in percent.
//! * Unanimous rate: share of items judged by every annotator on which all
//!   marks coincide.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::JudgmentStore;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalAccuracy {
    pub interval: String,
    pub items: usize,
    /// Effective judgments on items of this interval.
    pub judgments: usize,
    /// `None` when nobody judged an item of this interval.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub batch: String,
    /// Mean pairwise observed agreement; `None` with fewer than two annotators.
    pub agreement_rate: Option<f64>,
    pub unanimous_rate: Option<f64>,
    pub intervals: Vec<IntervalAccuracy>,
    pub annotator_count: usize,
    pub item_count: usize,
    /// Effective judgments over `annotators x items`, in percent.
    pub coverage: f64,
    /// Every annotator judged every item.
    pub complete: bool,
}

impl AgreementReport {
    pub fn to_text(&self) -> String {
        let pct = |v: Option<f64>| v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(out, "batch {}: {} items, {} annotators", self.batch, self.item_count, self.annotator_count);
        let _ = writeln!(out, "agreement rate (pairwise): {}", pct(self.agreement_rate));
        let _ = writeln!(out, "unanimous rate: {}", pct(self.unanimous_rate));
        for iv in &self.intervals {
            let _ = writeln!(out, "accuracy {:<12} {}", iv.interval, pct(iv.accuracy));
        }
        if !self.complete {
            let _ = writeln!(out, "coverage {:.2}% (incomplete; computed on judged subset)", self.coverage);
        }
        out
    }
}

type Marks = BTreeMap<String, BTreeMap<String, bool>>;

/// annotator -> pair id -> marked
fn marks_by_annotator(store: &JudgmentStore, batch_id: &str) -> Result<Marks> {
    let mut out: Marks = BTreeMap::new();
    for ((annotator, pair), marked) in store.effective(batch_id)? {
        out.entry(annotator.clone()).or_default().insert(pair.clone(), *marked);
    }
    Ok(out)
}

pub fn interval_accuracy(store: &JudgmentStore, batch_id: &str) -> Result<Vec<IntervalAccuracy>> {
    let batch = store.batch(batch_id)?;
    let marks = marks_by_annotator(store, batch_id)?;
    if marks.is_empty() {
        return Err(Error::InvalidInput(format!("batch {batch_id:?} has no judgments")));
    }
    Ok(batch
        .intervals
        .iter()
        .enumerate()
        .map(|(k, interval)| {
            let items: Vec<&str> = batch
                .items
                .iter()
                .filter(|i| i.interval == k)
                .map(|i| i.pair_id.as_str())
                .collect();
            let mut ratios = Vec::new();
            let mut judgments = 0;
            for by_pair in marks.values() {
                let judged: Vec<bool> = items.iter().filter_map(|p| by_pair.get(*p).copied()).collect();
                if judged.is_empty() {
                    continue;
                }
                judgments += judged.len();
                let marked = judged.iter().filter(|m| **m).count();
                ratios.push(marked as f64 / judged.len() as f64);
            }
            IntervalAccuracy {
                interval: interval.to_string(),
                items: items.len(),
                judgments,
                accuracy: (!ratios.is_empty()).then(|| 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64),
            }
        })
        .collect())
}

fn agreement_between(a: &BTreeMap<String, bool>, b: &BTreeMap<String, bool>) -> Option<f64> {
    let common: Vec<bool> = a
        .iter()
        .filter_map(|(pair, ma)| b.get(pair).map(|mb| ma == mb))
        .collect();
    if common.is_empty() {
        return None;
    }
    Some(100.0 * common.iter().filter(|x| **x).count() as f64 / common.len() as f64)
}

/// Observed agreement of two annotators over the items both judged.
pub fn pairwise_agreement(store: &JudgmentStore, batch_id: &str, a: &str, b: &str) -> Result<Option<f64>> {
    let marks = marks_by_annotator(store, batch_id)?;
    match (marks.get(a), marks.get(b)) {
        (Some(x), Some(y)) => Ok(agreement_between(x, y)),
        _ => Ok(None),
    }
}

pub fn agreement_rate(store: &JudgmentStore, batch_id: &str) -> Result<f64> {
    let marks = marks_by_annotator(store, batch_id)?;
    if marks.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "agreement needs at least two annotators, batch {batch_id:?} has {}",
            marks.len()
        )));
    }
    let annotators: Vec<&BTreeMap<String, bool>> = marks.values().collect();
    let mut rates = Vec::new();
    for i in 0..annotators.len() {
        for j in i + 1..annotators.len() {
            rates.extend(agreement_between(annotators[i], annotators[j]));
        }
    }
    if rates.is_empty() {
        return Err(Error::InvalidInput("no item was judged by two annotators".into()));
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

pub fn unanimous_rate(store: &JudgmentStore, batch_id: &str) -> Result<Option<f64>> {
    let batch = store.batch(batch_id)?;
    let marks = marks_by_annotator(store, batch_id)?;
    if marks.len() < 2 {
        return Ok(None);
    }
    let mut full = 0;
    let mut unanimous = 0;
    for item in &batch.items {
        let judged: Option<BTreeSet<bool>> = marks.values().map(|m| m.get(&item.pair_id).copied()).collect();
        if let Some(set) = judged {
            full += 1;
            if set.len() == 1 {
                unanimous += 1;
            }
        }
    }
    Ok((full > 0).then(|| 100.0 * unanimous as f64 / full as f64))
}

pub fn report(store: &JudgmentStore, batch_id: &str) -> Result<AgreementReport> {
    let batch = store.batch(batch_id)?;
    let intervals = interval_accuracy(store, batch_id)?;
    let marks = marks_by_annotator(store, batch_id)?;
    let annotator_count = marks.len();
    let judged: usize = marks.values().map(BTreeMap::len).sum();
    let possible = annotator_count * batch.items.len();
    let agreement = if annotator_count >= 2 {
        agreement_rate(store, batch_id).ok()
    } else {
        None
    };
    Ok(AgreementReport {
        batch: batch_id.to_string(),
        agreement_rate: agreement,
        unanimous_rate: unanimous_rate(store, batch_id)?,
        intervals,
        annotator_count,
        item_count: batch.items.len(),
        coverage: if possible == 0 { 0.0 } else { 100.0 * judged as f64 / possible as f64 },
        complete: judged == possible,
    })
}

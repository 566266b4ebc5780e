//! Append-only judgment log with last-write-wins effective judgments.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::AnnotationBatch;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub annotator: String,
    pub pair_id: String,
    /// `true` when the profile sentence can be extracted from the utterance.
    pub marked: bool,
    /// Milliseconds since the epoch.
    pub timestamp: u64,
}

/// One line of the judgment log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEntry {
    Judgment {
        seq: u64,
        batch: String,
        annotator: String,
        pair_id: String,
        marked: bool,
        timestamp: u64,
        /// An earlier judgment by the same annotator on the same pair existed.
        overwrite: bool,
    },
    Close {
        seq: u64,
        batch: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    pub overwrite: bool,
    /// The effective judgment changed.
    pub changed: bool,
}

/// Payload served to an annotator: no confidence, no interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextItem {
    pub pair_id: String,
    pub utterance: String,
    pub profile: String,
    /// 1-based position of the item in the batch.
    pub position: usize,
    pub batch_size: usize,
}

#[derive(Debug)]
struct BatchState {
    batch: AnnotationBatch,
    closed: bool,
    /// (annotator, pair id) -> marked
    effective: BTreeMap<(String, String), bool>,
}

/// In-memory judgment state backed by an optional JSON-lines log file.
/// Mutations go through `&mut self`; callers sharing a store across threads
/// serialize writes behind a lock.
#[derive(Debug)]
pub struct JudgmentStore {
    batches: IndexMap<String, BatchState>,
    pair_index: HashMap<String, String>,
    log: Vec<LogEntry>,
    log_path: Option<PathBuf>,
    log_file: Option<File>,
}

impl JudgmentStore {
    pub fn new(batches: Vec<AnnotationBatch>) -> Result<Self> {
        let mut store = JudgmentStore {
            batches: IndexMap::new(),
            pair_index: HashMap::new(),
            log: Vec::new(),
            log_path: None,
            log_file: None,
        };
        for batch in batches {
            batch.validate()?;
            if store.batches.contains_key(&batch.id) {
                return Err(Error::InvalidInput(format!("duplicate batch id {:?}", batch.id)));
            }
            for item in &batch.items {
                if let Some(other) = store.pair_index.insert(item.pair_id.clone(), batch.id.clone()) {
                    return Err(Error::InvalidInput(format!(
                        "pair {:?} appears in batches {other:?} and {:?}",
                        item.pair_id, batch.id
                    )));
                }
            }
            store.batches.insert(
                batch.id.clone(),
                BatchState {
                    batch,
                    closed: false,
                    effective: BTreeMap::new(),
                },
            );
        }
        Ok(store)
    }

    /// Opens a durable store: replays `log_path` when it exists, then appends
    /// every new event to it.
    pub fn open(batches: Vec<AnnotationBatch>, log_path: &Path) -> Result<Self> {
        let mut store = Self::new(batches)?;
        if log_path.exists() {
            let file = File::open(log_path).map_err(|e| Error::io(log_path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(log_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogEntry = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    path: log_path.to_path_buf(),
                    record: i + 1,
                    message: e.to_string(),
                })?;
                store.apply(entry)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|e| Error::io(log_path, e))?;
        store.log_path = Some(log_path.to_path_buf());
        store.log_file = Some(file);
        Ok(store)
    }

    /// Rebuilds a store from log entries alone.
    pub fn replay(batches: Vec<AnnotationBatch>, entries: impl IntoIterator<Item = LogEntry>) -> Result<Self> {
        let mut store = Self::new(batches)?;
        for entry in entries {
            store.apply(entry)?;
        }
        Ok(store)
    }

    fn apply(&mut self, entry: LogEntry) -> Result<()> {
        match &entry {
            LogEntry::Judgment {
                batch,
                annotator,
                pair_id,
                marked,
                ..
            } => {
                let state = self
                    .batches
                    .get_mut(batch)
                    .ok_or_else(|| Error::UnknownBatch(batch.clone()))?;
                state.effective.insert((annotator.clone(), pair_id.clone()), *marked);
            }
            LogEntry::Close { batch, .. } => {
                self.batches
                    .get_mut(batch)
                    .ok_or_else(|| Error::UnknownBatch(batch.clone()))?
                    .closed = true;
            }
        }
        self.log.push(entry);
        Ok(())
    }

    fn append(&mut self, entry: LogEntry) -> Result<()> {
        if let Some(file) = self.log_file.as_mut() {
            let path = self.log_path.clone().unwrap_or_default();
            let mut line = serde_json::to_vec(&entry)?;
            line.push(b'\n');
            file.write_all(&line)
                .and_then(|_| file.flush())
                .map_err(|e| Error::io(path, e))?;
        }
        self.apply(entry)
    }

    pub fn record_judgment(&mut self, judgment: Judgment) -> Result<Ack> {
        let batch_id = self
            .pair_index
            .get(&judgment.pair_id)
            .ok_or_else(|| Error::UnknownPair(judgment.pair_id.clone()))?
            .clone();
        let state = &self.batches[&batch_id];
        if state.closed {
            return Err(Error::ClosedBatch(batch_id));
        }
        let previous = state
            .effective
            .get(&(judgment.annotator.clone(), judgment.pair_id.clone()))
            .copied();
        let seq = self.log.len() as u64;
        let ack = Ack {
            seq,
            overwrite: previous.is_some(),
            changed: previous != Some(judgment.marked),
        };
        self.append(LogEntry::Judgment {
            seq,
            batch: batch_id,
            annotator: judgment.annotator,
            pair_id: judgment.pair_id,
            marked: judgment.marked,
            timestamp: judgment.timestamp,
            overwrite: ack.overwrite,
        })?;
        Ok(ack)
    }

    pub fn close_batch(&mut self, batch_id: &str) -> Result<()> {
        if !self.batches.contains_key(batch_id) {
            return Err(Error::UnknownBatch(batch_id.to_string()));
        }
        let seq = self.log.len() as u64;
        self.append(LogEntry::Close {
            seq,
            batch: batch_id.to_string(),
        })
    }

    pub fn batch(&self, batch_id: &str) -> Result<&AnnotationBatch> {
        self.batches
            .get(batch_id)
            .map(|s| &s.batch)
            .ok_or_else(|| Error::UnknownBatch(batch_id.to_string()))
    }

    pub fn is_closed(&self, batch_id: &str) -> Result<bool> {
        self.batches
            .get(batch_id)
            .map(|s| s.closed)
            .ok_or_else(|| Error::UnknownBatch(batch_id.to_string()))
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Effective judgments of a batch as `(annotator, pair id) -> marked`.
    pub fn effective(&self, batch_id: &str) -> Result<&BTreeMap<(String, String), bool>> {
        self.batches
            .get(batch_id)
            .map(|s| &s.effective)
            .ok_or_else(|| Error::UnknownBatch(batch_id.to_string()))
    }

    /// First item, in batch order, the annotator has not judged yet.
    pub fn next_item(&self, batch_id: &str, annotator: &str) -> Result<Option<NextItem>> {
        let state = self
            .batches
            .get(batch_id)
            .ok_or_else(|| Error::UnknownBatch(batch_id.to_string()))?;
        if state.closed {
            return Ok(None);
        }
        let size = state.batch.items.len();
        Ok(state
            .batch
            .items
            .iter()
            .enumerate()
            .find(|(_, item)| {
                !state
                    .effective
                    .contains_key(&(annotator.to_string(), item.pair_id.clone()))
            })
            .map(|(i, item)| NextItem {
                pair_id: item.pair_id.clone(),
                utterance: item.utterance.clone(),
                profile: item.profile.clone(),
                position: i + 1,
                batch_size: size,
            }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BatchItem, IntervalSpec};

    pub(crate) fn batch(id: &str, n: usize) -> AnnotationBatch {
        AnnotationBatch {
            id: id.into(),
            seed: 0,
            intervals: IntervalSpec::second_round(),
            items: (0..n)
                .map(|i| BatchItem {
                    pair_id: format!("{id}-p{i}"),
                    utterance: format!("u{i}"),
                    profile: format!("p{i}"),
                    interval: 0,
                    confidence: 0.995,
                })
                .collect(),
        }
    }

    fn j(annotator: &str, pair: &str, marked: bool) -> Judgment {
        Judgment {
            annotator: annotator.into(),
            pair_id: pair.into(),
            marked,
            timestamp: 0,
        }
    }

    #[test]
    fn log_grows_and_overwrites() {
        let mut s = JudgmentStore::new(vec![batch("b", 4)]).unwrap();
        let ack = s.record_judgment(j("a1", "b-p0", true)).unwrap();
        assert_eq!(s.log().len(), 1);
        assert!(!ack.overwrite && ack.changed);
        let ack = s.record_judgment(j("a1", "b-p0", true)).unwrap();
        assert_eq!(s.log().len(), 2);
        assert!(ack.overwrite && !ack.changed);
        assert_eq!(s.effective("b").unwrap().len(), 1);
        let ack = s.record_judgment(j("a1", "b-p0", false)).unwrap();
        assert!(ack.changed);
        assert_eq!(s.effective("b").unwrap()[&("a1".into(), "b-p0".into())], false);
    }

    #[test]
    fn three_annotators_four_items_give_twelve_judgments() {
        let mut s = JudgmentStore::new(vec![batch("b", 4)]).unwrap();
        for a in ["x", "y", "z"] {
            for i in 0..4 {
                s.record_judgment(j(a, &format!("b-p{i}"), i % 2 == 0)).unwrap();
            }
        }
        s.record_judgment(j("x", "b-p0", true)).unwrap();
        assert_eq!(s.effective("b").unwrap().len(), 12);
        assert_eq!(s.log().len(), 13);
    }

    #[test]
    fn unknown_pair_and_closed_batch() {
        let mut s = JudgmentStore::new(vec![batch("b", 2)]).unwrap();
        assert!(matches!(s.record_judgment(j("a", "nope", true)), Err(Error::UnknownPair(_))));
        s.close_batch("b").unwrap();
        assert!(matches!(s.record_judgment(j("a", "b-p0", true)), Err(Error::ClosedBatch(_))));
        assert_eq!(s.next_item("b", "a").unwrap(), None);
    }

    #[test]
    fn next_item_walks_batch() {
        let mut s = JudgmentStore::new(vec![batch("b", 2)]).unwrap();
        let first = s.next_item("b", "a").unwrap().unwrap();
        assert_eq!((first.pair_id.as_str(), first.position, first.batch_size), ("b-p0", 1, 2));
        s.record_judgment(j("a", "b-p0", false)).unwrap();
        assert_eq!(s.next_item("b", "a").unwrap().unwrap().position, 2);
        s.record_judgment(j("a", "b-p1", false)).unwrap();
        assert_eq!(s.next_item("b", "a").unwrap(), None);
        // another annotator starts from the top
        assert_eq!(s.next_item("b", "other").unwrap().unwrap().position, 1);
        assert!(s.next_item("missing", "a").is_err());
    }

    #[test]
    fn durable_log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("judgments.jsonl");
        {
            let mut s = JudgmentStore::open(vec![batch("b", 3)], &path).unwrap();
            s.record_judgment(j("a", "b-p0", true)).unwrap();
            s.record_judgment(j("a", "b-p1", false)).unwrap();
        }
        let mut s = JudgmentStore::open(vec![batch("b", 3)], &path).unwrap();
        assert_eq!(s.log().len(), 2);
        s.record_judgment(j("a", "b-p2", true)).unwrap();
        let lines = std::fs::read_to_string(&path).unwrap();
        assert_eq!(lines.lines().count(), 3);
        assert!(lines.lines().next().unwrap().starts_with("{\"event\":\"judgment\",\"seq\":0"));
    }

    #[test]
    fn pair_in_two_batches_rejected() {
        let mut b2 = batch("c", 1);
        b2.items[0].pair_id = "b-p0".into();
        assert!(JudgmentStore::new(vec![batch("b", 1), b2]).is_err());
    }
}

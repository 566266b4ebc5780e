//! Dialogue and NLI corpora.
//!
//! The canonical dialogue file is JSON-lines, one dialogue per line:
//!
//! ```json
//! {"id": "d1", "turns": [{"speaker": "A", "text": "hi"}], "personas": {"A": ["i like dogs."]}}
//! ```
//!
//! Text is kept verbatim. Dialogues that break an invariant (non-alternating
//! turns, a speaker without persona, empty text, more than two speakers,
//! duplicate id) are dropped and logged; syntactically malformed lines abort
//! the load.

mod nli;
pub mod personachat;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::{Error, Result};

pub use nli::{load_nli_corpus, parse_label, NliExample, NliFormat, DIALOGUE_NLI_LABELS, MULTI_GENRE_LABELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!(
                "split must be one of train|valid|test, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub speaker: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSentence {
    /// `{speaker}:{index}` within the dialogue.
    pub id: String,
    pub speaker: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Utterance>,
    /// Speaker id to persona, in file order.
    pub personas: IndexMap<String, Vec<ProfileSentence>>,
}

impl Dialogue {
    /// Validates a raw record. The error string is the rejection reason.
    pub fn from_record(record: DialogueRecord) -> std::result::Result<Dialogue, String> {
        let DialogueRecord { id, turns, personas } = record;

        let mut personas_out = IndexMap::with_capacity(personas.len());
        for (speaker, sentences) in personas {
            let mut persona = Vec::with_capacity(sentences.len());
            for (i, text) in sentences.into_iter().enumerate() {
                if text.trim().is_empty() {
                    return Err(format!("persona sentence {i} of speaker {speaker:?} is empty"));
                }
                persona.push(ProfileSentence {
                    id: format!("{speaker}:{i}"),
                    speaker: speaker.clone(),
                    text,
                });
            }
            personas_out.insert(speaker, persona);
        }

        let mut speakers: Vec<&str> = Vec::new();
        let mut turns_out = Vec::with_capacity(turns.len());
        for (turn_index, turn) in turns.into_iter().enumerate() {
            if turn.text.trim().is_empty() {
                return Err(format!("turn {turn_index} has empty text"));
            }
            if let Some(prev) = turns_out.last().map(|u: &Utterance| u.speaker.as_str()) {
                if prev == turn.speaker {
                    return Err(format!(
                        "turns {} and {turn_index} do not alternate speakers",
                        turn_index - 1
                    ));
                }
            }
            match personas_out.get(&turn.speaker) {
                Some(p) if !p.is_empty() => {}
                _ => return Err(format!("speaker {:?} has no persona", turn.speaker)),
            }
            turns_out.push(Utterance {
                dialogue_id: id.clone(),
                turn_index,
                speaker: turn.speaker,
                text: turn.text,
            });
        }
        for u in &turns_out {
            if !speakers.contains(&u.speaker.as_str()) {
                speakers.push(&u.speaker);
            }
        }
        if speakers.len() > 2 {
            return Err(format!("{} speakers; only two-party dialogues are supported", speakers.len()));
        }
        for speaker in &speakers {
            let n = personas_out[*speaker].len();
            if !(3..=5).contains(&n) {
                log::warn!("dialogue {id}: persona of {speaker:?} has {n} sentences (expected 3 to 5)");
            }
        }

        Ok(Dialogue {
            id,
            turns: turns_out,
            personas: personas_out,
        })
    }

    pub fn to_record(&self) -> DialogueRecord {
        DialogueRecord {
            id: self.id.clone(),
            turns: self
                .turns
                .iter()
                .map(|u| TurnRecord {
                    speaker: u.speaker.clone(),
                    text: u.text.clone(),
                })
                .collect(),
            personas: self
                .personas
                .iter()
                .map(|(s, p)| (s.clone(), p.iter().map(|ps| ps.text.clone()).collect()))
                .collect(),
        }
    }

    pub fn persona(&self, speaker: &str) -> &[ProfileSentence] {
        self.personas.get(speaker).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One line of the canonical dialogue file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub id: String,
    pub turns: Vec<TurnRecord>,
    pub personas: IndexMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub speaker: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub record: usize,
    pub dialogue_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DialogueCorpus {
    pub split: Split,
    pub dialogues: Vec<Dialogue>,
    /// Dialogues dropped at load time. Not part of corpus equality in spirit,
    /// but kept so callers can report them.
    pub rejected: Vec<Rejection>,
}

impl DialogueCorpus {
    /// Builds a corpus from raw records, applying the same validation as
    /// [`load_dialogue_corpus`].
    pub fn from_records(split: Split, records: impl IntoIterator<Item = DialogueRecord>) -> Self {
        let mut seen = HashSet::new();
        let mut dialogues = Vec::new();
        let mut rejected = Vec::new();
        for (idx, record) in records.into_iter().enumerate() {
            let id = record.id.clone();
            let outcome = if !seen.insert(id.clone()) {
                Err(format!("duplicate dialogue id {id:?}"))
            } else {
                Dialogue::from_record(record)
            };
            match outcome {
                Ok(d) => dialogues.push(d),
                Err(reason) => {
                    log::warn!("rejecting dialogue {id:?} (record {}): {reason}", idx + 1);
                    rejected.push(Rejection {
                        record: idx + 1,
                        dialogue_id: id,
                        reason,
                    });
                }
            }
        }
        DialogueCorpus {
            split,
            dialogues,
            rejected,
        }
    }

    pub fn utterance_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    pub fn records(&self) -> Vec<DialogueRecord> {
        self.dialogues.iter().map(Dialogue::to_record).collect()
    }
}

pub fn load_dialogue_corpus(path: &Path, split: Split) -> Result<DialogueCorpus> {
    let records: Vec<DialogueRecord> = artifact::read_jsonl(path)?;
    Ok(DialogueCorpus::from_records(split, records))
}

pub fn write_dialogue_corpus(corpus: &DialogueCorpus, path: &Path) -> Result<()> {
    artifact::write_jsonl(path, &corpus.records())
}

/// Every utterance paired with every profile sentence of the same speaker,
/// in dialogue, turn, then persona order.
pub fn enumerate_pairs(
    corpus: &DialogueCorpus,
) -> impl Iterator<Item = (&Utterance, &ProfileSentence)> + '_ {
    corpus.dialogues.iter().flat_map(|d| {
        d.turns
            .iter()
            .flat_map(move |u| d.persona(&u.speaker).iter().map(move |p| (u, p)))
    })
}

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::nli::NliLabel;
use crate::{Error, Result};

/// Label strings of multi-genre NLI style corpora.
pub const MULTI_GENRE_LABELS: &[(&str, NliLabel)] = &[
    ("entailment", NliLabel::Entailment),
    ("neutral", NliLabel::Neutral),
    ("contradiction", NliLabel::Contradiction),
];

/// Label strings of the dialogue NLI corpus, where "positive" pairs are
/// entailments and "negative" pairs are contradictions.
pub const DIALOGUE_NLI_LABELS: &[(&str, NliLabel)] = &[
    ("positive", NliLabel::Entailment),
    ("neutral", NliLabel::Neutral),
    ("negative", NliLabel::Contradiction),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NliFormat {
    MultiGenre,
    DialogueNli,
}

impl NliFormat {
    pub fn label_table(self) -> &'static [(&'static str, NliLabel)] {
        match self {
            NliFormat::MultiGenre => MULTI_GENRE_LABELS,
            NliFormat::DialogueNli => DIALOGUE_NLI_LABELS,
        }
    }
}

impl FromStr for NliFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi-genre" | "mnli" => Ok(NliFormat::MultiGenre),
            "dialogue-nli" | "dnli" => Ok(NliFormat::DialogueNli),
            other => Err(Error::InvalidInput(format!(
                "NLI format must be multi-genre or dialogue-nli, got {other:?}"
            ))),
        }
    }
}

pub fn parse_label(format: NliFormat, raw: &str) -> Result<NliLabel> {
    format
        .label_table()
        .iter()
        .find(|(name, _)| *name == raw)
        .map(|(_, label)| *label)
        .ok_or_else(|| Error::UnknownLabel(raw.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliExample {
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
}

#[derive(Deserialize)]
struct RawNliRecord {
    #[serde(alias = "sentence1")]
    premise: String,
    #[serde(alias = "sentence2")]
    hypothesis: String,
    #[serde(alias = "gold_label")]
    label: String,
}

/// Loads `{"premise", "hypothesis", "label"}` records (the upstream field
/// names `sentence1`/`sentence2`/`gold_label` are accepted too). The file may
/// be JSON-lines or a single JSON array.
pub fn load_nli_corpus(path: &Path, format: NliFormat) -> Result<Vec<NliExample>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<RawNliRecord> = if content.trim_start().starts_with('[') {
        serde_json::from_str(&content).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            record: 1,
            message: e.to_string(),
        })?
    } else {
        artifact::read_jsonl(path)?
    };
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = parse_label(format, &r.label).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                record: i + 1,
                message: e.to_string(),
            })?;
            Ok(NliExample {
                premise: r.premise,
                hypothesis: r.hypothesis,
                label,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_tables() {
        assert_eq!(parse_label(NliFormat::MultiGenre, "entailment").unwrap(), NliLabel::Entailment);
        assert_eq!(parse_label(NliFormat::DialogueNli, "positive").unwrap(), NliLabel::Entailment);
        assert_eq!(parse_label(NliFormat::DialogueNli, "negative").unwrap(), NliLabel::Contradiction);
        let err = parse_label(NliFormat::MultiGenre, "maybe").unwrap_err();
        assert!(err.to_string().contains("unknown label \"maybe\""));
        // each table only knows its own vocabulary
        assert!(parse_label(NliFormat::MultiGenre, "positive").is_err());
    }

    #[test]
    fn loads_jsonl_and_array() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        std::fs::write(
            &a,
            "{\"premise\":\"p\",\"hypothesis\":\"h\",\"label\":\"neutral\"}\n",
        )
        .unwrap();
        let got = load_nli_corpus(&a, NliFormat::MultiGenre).unwrap();
        assert_eq!(got[0].label, NliLabel::Neutral);

        let b = dir.path().join("b.json");
        std::fs::write(
            &b,
            "[{\"sentence1\":\"p\",\"sentence2\":\"h\",\"label\":\"positive\"}]",
        )
        .unwrap();
        let got = load_nli_corpus(&b, NliFormat::DialogueNli).unwrap();
        assert_eq!(got[0].label, NliLabel::Entailment);
    }

    #[test]
    fn unknown_label_names_value_and_record() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        std::fs::write(
            &a,
            "{\"premise\":\"p\",\"hypothesis\":\"h\",\"label\":\"entailment\"}\n{\"premise\":\"p\",\"hypothesis\":\"h\",\"label\":\"maybe\"}\n",
        )
        .unwrap();
        let msg = load_nli_corpus(&a, NliFormat::MultiGenre).unwrap_err().to_string();
        assert!(msg.contains("record 2"), "{msg}");
        assert!(msg.contains("maybe"), "{msg}");
    }
}

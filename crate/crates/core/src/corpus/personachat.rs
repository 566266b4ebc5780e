//! Converter from the ConvAI2/PersonaChat text format to canonical records.
//!
//! Each dialogue starts at line number 1. Persona lines look like
//! `1 your persona: i like to ski.` or `2 partner's persona: i have a cat.`;
//! dialogue lines hold the partner utterance and the self reply separated by
//! a tab, optionally followed by a reward and candidate list.

use indexmap::IndexMap;

use super::{DialogueRecord, TurnRecord};

pub const SELF_SPEAKER: &str = "self";
pub const PARTNER_SPEAKER: &str = "partner";
const SILENCE: &str = "__SILENCE__";

/// Converts the whole file content. Dialogue ids are `{prefix}-{n}`, `n`
/// counting from 0.
pub fn convert_personachat(content: &str, prefix: &str) -> Vec<DialogueRecord> {
    let mut out = Vec::new();
    let mut current: Option<Builder> = None;

    for line in content.lines() {
        let line = line.trim_end();
        let Some((num, rest)) = line.split_once(' ') else {
            continue;
        };
        let Ok(num) = num.parse::<usize>() else {
            continue;
        };
        if num == 1 {
            if let Some(b) = current.take() {
                out.push(b.finish(format!("{prefix}-{}", out.len())));
            }
            current = Some(Builder::default());
        }
        let Some(b) = current.as_mut() else { continue };

        if let Some(p) = rest.strip_prefix("your persona:") {
            b.persona(SELF_SPEAKER, p.trim());
        } else if let Some(p) = rest.strip_prefix("partner's persona:") {
            b.persona(PARTNER_SPEAKER, p.trim());
        } else {
            let mut cols = rest.split('\t');
            if let Some(partner) = cols.next() {
                b.turn(PARTNER_SPEAKER, partner.trim());
            }
            if let Some(own) = cols.next() {
                b.turn(SELF_SPEAKER, own.trim());
            }
        }
    }
    if let Some(b) = current.take() {
        out.push(b.finish(format!("{prefix}-{}", out.len())));
    }
    out
}

#[derive(Default)]
struct Builder {
    turns: Vec<TurnRecord>,
    personas: IndexMap<String, Vec<String>>,
}

impl Builder {
    fn persona(&mut self, speaker: &str, text: &str) {
        self.personas
            .entry(speaker.to_string())
            .or_default()
            .push(text.to_string());
    }

    fn turn(&mut self, speaker: &str, text: &str) {
        if text.is_empty() || (text == SILENCE && self.turns.is_empty()) {
            return;
        }
        self.turns.push(TurnRecord {
            speaker: speaker.to_string(),
            text: text.to_string(),
        });
    }

    fn finish(self, id: String) -> DialogueRecord {
        DialogueRecord {
            id,
            turns: self.turns,
            personas: self.personas,
        }
    }
}

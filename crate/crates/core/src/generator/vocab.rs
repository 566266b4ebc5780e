use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GEN_TOKEN: &str = "<gen>";
pub const SEP_TOKEN: &str = "<sep>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub unk: u32,
    pub gen: u32,
    pub sep: u32,
    pub eos: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    /// Whitespace-separated words.
    Word,
    /// One token per character, spaces included.
    Char,
}

/// Token inventory with `<unk>`, `<gen>`, `<sep>` and `<eos>` at ids 0..4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    kind: TokenizerKind,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    specials: SpecialTokens,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    kind: TokenizerKind,
    tokens: Vec<String>,
}

impl TryFrom<VocabRepr> for Vocab {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        Vocab::from_tokens(r.kind, r.tokens)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            kind: v.kind,
            tokens: v.tokens,
        }
    }
}

impl Vocab {
    /// Builds a vocabulary from an explicit token list, which must contain
    /// every special token exactly once.
    pub fn from_tokens(kind: TokenizerKind, tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token {t:?} in vocabulary")));
            }
        }
        let find = |t: &str| {
            index
                .get(t)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("vocabulary lacks special token {t}")))
        };
        let specials = SpecialTokens {
            unk: find(UNK_TOKEN)?,
            gen: find(GEN_TOKEN)?,
            sep: find(SEP_TOKEN)?,
            eos: find(EOS_TOKEN)?,
        };
        Ok(Vocab {
            kind,
            tokens,
            index,
            specials,
        })
    }

    fn with_specials(kind: TokenizerKind, rest: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<String> = [UNK_TOKEN, GEN_TOKEN, SEP_TOKEN, EOS_TOKEN]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for t in rest {
            if !tokens.contains(&t) {
                tokens.push(t);
            }
        }
        Vocab::from_tokens(kind, tokens).expect("specials present")
    }

    /// Word vocabulary over `texts`, keeping words seen at least `min_count`
    /// times, most frequent first (ties alphabetical), capped at `max_size`
    /// entries including the specials.
    pub fn build_word<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize, max_size: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for text in texts {
            for w in text.split_whitespace() {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let room = max_size.saturating_sub(4);
        Self::with_specials(
            TokenizerKind::Word,
            ranked.into_iter().take(room).map(|(w, _)| w.to_string()),
        )
    }

    pub fn char_level(alphabet: &str) -> Self {
        Self::with_specials(TokenizerKind::Char, alphabet.chars().map(|c| c.to_string()))
    }

    pub fn kind(&self) -> TokenizerKind {
        self.kind
    }

    pub fn specials(&self) -> SpecialTokens {
        self.specials
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(self.specials.unk)
    }

    pub fn is_special(&self, id: u32) -> bool {
        let s = self.specials;
        id == s.unk || id == s.gen || id == s.sep || id == s.eos
    }

    /// Encodes plain text. Special-token strings are not recognized here.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        match self.kind {
            TokenizerKind::Word => text.split_whitespace().map(|w| self.id(w)).collect(),
            TokenizerKind::Char => text.chars().map(|c| self.id(c.encode_utf8(&mut [0; 4]))).collect(),
        }
    }

    /// Decodes ids; `<gen>` and `<sep>` render as ` <gen> ` / ` <sep> `,
    /// `<eos>` ends the text.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        let mut pieces: Vec<&str> = Vec::new();
        let flush = |pieces: &mut Vec<&str>, out: &mut String| {
            let joined = match self.kind {
                TokenizerKind::Word => pieces.join(" "),
                TokenizerKind::Char => pieces.concat(),
            };
            out.push_str(&joined);
            pieces.clear();
        };
        for &id in ids {
            if id == self.specials.eos {
                break;
            }
            if id == self.specials.gen || id == self.specials.sep {
                flush(&mut pieces, &mut out);
                out.push(' ');
                out.push_str(self.token(id).unwrap_or(UNK_TOKEN));
                out.push(' ');
                continue;
            }
            pieces.push(self.token(id).unwrap_or(UNK_TOKEN));
        }
        flush(&mut pieces, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_first_and_distinct() {
        let v = Vocab::build_word(["b a a", "c"], 1, 100);
        let s = v.specials();
        assert_eq!((s.unk, s.gen, s.sep, s.eos), (0, 1, 2, 3));
        assert_eq!(v.token(4), Some("a"));
        assert_eq!(v.encode("a zz"), vec![4, 0]);
    }

    #[test]
    fn size_cap_and_min_count() {
        let v = Vocab::build_word(["a a a b b c"], 2, 5);
        assert_eq!(v.len(), 5);
        assert_eq!(v.token(4), Some("a"));
        assert_eq!(v.id("b"), v.specials().unk);
    }

    #[test]
    fn missing_special_is_rejected() {
        let err = Vocab::from_tokens(TokenizerKind::Word, vec!["<unk>".into(), "<gen>".into(), "<eos>".into()]);
        assert!(err.unwrap_err().to_string().contains("<sep>"));
    }

    #[test]
    fn decode_renders_separators() {
        let v = Vocab::build_word(["i like dogs"], 1, 100);
        let mut ids = v.encode("i like");
        ids.push(v.specials().sep);
        ids.extend(v.encode("dogs"));
        ids.push(v.specials().eos);
        ids.extend(v.encode("i"));
        assert_eq!(v.decode(&ids), "i like <sep> dogs");
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocab::char_level("ab ");
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}

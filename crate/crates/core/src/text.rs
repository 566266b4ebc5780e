//! Text helpers shared across modules.

use std::collections::BTreeSet;

/// Whitespace word split of raw text. This is the word notion used for
/// dataset statistics and for BLEU/ROUGE tokenization.
pub fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased alphanumeric tokens (apostrophes kept inside words).
pub fn normalized_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn normalized_token_set(text: &str) -> BTreeSet<String> {
    normalized_tokens(text).into_iter().collect()
}

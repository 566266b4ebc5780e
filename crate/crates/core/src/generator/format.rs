use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, EOS_TOKEN, GEN_TOKEN, SEP_TOKEN};
use crate::{Error, Result};

/// Textual form of the training template, recorded in checkpoint metadata.
pub const TEMPLATE: &str = "{utterance} <gen> {profile_1} <sep> {profile_2} ... <eos>";

/// Token ids plus a loss mask. `loss_mask[i]` says whether token `i` is a
/// prediction target; it is false up to and including `<gen>` and true from
/// the first profile token through `<eos>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedExample {
    pub token_ids: Vec<u32>,
    pub loss_mask: Vec<bool>,
    /// Position of `<gen>`.
    pub boundary_index: usize,
}

impl FormattedExample {
    /// Next-token view: `(inputs, targets, target_mask)` where `targets[i] =
    /// token_ids[i + 1]`.
    pub fn shifted(&self) -> (&[u32], &[u32], &[bool]) {
        let n = self.token_ids.len();
        (&self.token_ids[..n - 1], &self.token_ids[1..], &self.loss_mask[1..])
    }
}

/// `tokens(utterance) <gen> tokens(p1) <sep> tokens(p2) ... <eos>`.
pub fn format_example(utterance: &str, profiles: &[&str], vocab: &Vocab) -> Result<FormattedExample> {
    if profiles.is_empty() {
        return Err(Error::InvalidInput("at least one profile sentence is required".into()));
    }
    let s = vocab.specials();
    let mut ids = vocab.encode(utterance);
    let boundary_index = ids.len();
    ids.push(s.gen);
    for (i, p) in profiles.iter().enumerate() {
        if i > 0 {
            ids.push(s.sep);
        }
        ids.extend(vocab.encode(p));
    }
    ids.push(s.eos);
    let loss_mask = (0..ids.len()).map(|i| i > boundary_index).collect();
    Ok(FormattedExample {
        token_ids: ids,
        loss_mask,
        boundary_index,
    })
}

/// The template as text, single space around each special token.
pub fn render_template(utterance: &str, profiles: &[&str]) -> String {
    format!(
        "{utterance} {GEN_TOKEN} {} {EOS_TOKEN}",
        profiles.join(&format!(" {SEP_TOKEN} "))
    )
}

/// Recovers `(utterance, profiles)` from a formatted example.
pub fn detokenize_example(example: &FormattedExample, vocab: &Vocab) -> (String, Vec<String>) {
    let ids = &example.token_ids;
    let utterance = vocab.decode(&ids[..example.boundary_index]);
    let profiles = split_profiles(&vocab.decode(&ids[example.boundary_index + 1..]));
    (utterance, profiles)
}

/// Splits generated text on `<sep>`, trimming pieces and dropping empties.
pub fn split_profiles(generated: &str) -> Vec<String> {
    generated
        .split(SEP_TOKEN)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn char_fixture_exact_arrays() {
        // ids: <unk>=0 <gen>=1 <sep>=2 <eos>=3 a=4 b=5 ' '=6
        let v = Vocab::char_level("ab ");
        let ex = format_example("ab", &["b", "a a"], &v).unwrap();
        assert_eq!(ex.token_ids, vec![4, 5, 1, 5, 2, 4, 6, 4, 3]);
        assert_eq!(
            ex.loss_mask,
            vec![false, false, false, true, true, true, true, true, true]
        );
        assert_eq!(ex.boundary_index, 2);
    }

    #[test]
    fn word_example_mask() {
        let v = Vocab::build_word(["i like dogs", "i have a dog"], 1, 100);
        let ex = format_example("i like dogs", &["i have a dog"], &v).unwrap();
        assert_eq!(v.decode(&ex.token_ids[..]), "i like dogs <gen> i have a dog");
        assert_eq!(ex.boundary_index, 3);
        assert_eq!(ex.token_ids[3], v.specials().gen);
        assert_eq!(ex.loss_mask.iter().filter(|m| **m).count(), 5);
        assert_eq!(*ex.token_ids.last().unwrap(), v.specials().eos);
        assert_eq!(
            render_template("i like dogs", &["i have a dog"]),
            "i like dogs <gen> i have a dog <eos>"
        );
    }

    #[test]
    fn separators_between_profiles_only() {
        let v = Vocab::build_word(["a b c"], 1, 100);
        let ex = format_example("a", &["b", "c", "a"], &v).unwrap();
        let seps = ex.token_ids.iter().filter(|t| **t == v.specials().sep).count();
        assert_eq!(seps, 2);
        let n = ex.token_ids.len();
        assert_ne!(ex.token_ids[n - 2], v.specials().sep);
        assert!(format_example("a", &[], &v).is_err());
    }

    #[test]
    fn split_rules() {
        assert_eq!(split_profiles("a <sep> b"), vec!["a", "b"]);
        assert_eq!(split_profiles("a"), vec!["a"]);
        assert_eq!(split_profiles("a <sep> <sep> b "), vec!["a", "b"]);
        assert!(split_profiles("  ").is_empty());
    }

    #[test]
    fn shifted_view() {
        let v = Vocab::char_level("ab");
        let ex = format_example("a", &["b"], &v).unwrap();
        let (inputs, targets, mask) = ex.shifted();
        assert_eq!(inputs, &[4, 1, 5]);
        assert_eq!(targets, &[1, 5, 3]);
        assert_eq!(mask, &[false, true, true]);
    }

    fn sentence() -> impl Strategy<Value = String> {
        prop::collection::vec("[a-e]{1,4}", 1..6).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn format_detokenize_round_trip(utt in sentence(), profiles in prop::collection::vec(sentence(), 1..4)) {
            let texts: Vec<&str> = std::iter::once(utt.as_str()).chain(profiles.iter().map(String::as_str)).collect();
            let v = Vocab::build_word(texts.iter().copied(), 1, 10_000);
            let refs: Vec<&str> = profiles.iter().map(String::as_str).collect();
            let ex = format_example(&utt, &refs, &v).unwrap();
            let (u, p) = detokenize_example(&ex, &v);
            prop_assert_eq!(u, utt);
            prop_assert_eq!(p, profiles);
            prop_assert_eq!(ex.token_ids[ex.boundary_index], v.specials().gen);
            prop_assert!(!ex.loss_mask[ex.boundary_index]);
            prop_assert!(ex.loss_mask[ex.boundary_index + 1]);
        }
    }
}

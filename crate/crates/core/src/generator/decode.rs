use rayon::prelude::*;

use super::model::DecoderHandle;
use crate::{Error, Result};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy decoding from `tokens(utterance) <gen>` until `<eos>` or
/// `max_new_tokens` tokens. Returns the text after `<gen>`.
pub fn generate(model: &DecoderHandle, utterance: &str, max_new_tokens: usize) -> Result<String> {
    if utterance.trim().is_empty() {
        return Err(Error::InvalidInput("cannot generate from an empty utterance".into()));
    }
    let vocab = model.vocab();
    let specials = vocab.specials();
    let mut ids = vocab.encode(utterance);
    ids.push(specials.gen);
    let start = ids.len();
    for _ in 0..max_new_tokens {
        let next = argmax_lowest(&model.next_logits(&ids)?) as u32;
        if next == specials.eos {
            break;
        }
        ids.push(next);
    }
    Ok(vocab.decode(&ids[start..]).trim().to_string())
}

/// `generate` over many utterances in parallel, order preserved.
pub fn generate_batch(model: &DecoderHandle, utterances: &[&str], max_new_tokens: usize) -> Result<Vec<String>> {
    utterances
        .par_iter()
        .map(|u| generate(model, u, max_new_tokens))
        .collect()
}

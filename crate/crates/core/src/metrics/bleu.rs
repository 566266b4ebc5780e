use std::collections::HashMap;

use super::check_corpus;
use crate::text::words;
use crate::{Error, Result};

/// Counts of every `n`-gram in `tokens`.
pub fn ngram_counts<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU with uniform weights over orders `1..=n`, clipped
/// counts, brevity penalty and no smoothing. Whitespace tokens.
pub fn bleu(candidates: &[&str], references: &[&str], n: usize) -> Result<f64> {
    check_corpus(candidates, references)?;
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("BLEU order must be 1..=4, got {n}")));
    }
    let mut matched = vec![0usize; n];
    let mut total = vec![0usize; n];
    let mut cand_len = 0;
    let mut ref_len = 0;
    for (c, r) in candidates.iter().zip(references) {
        let c = words(c);
        let r = words(r);
        cand_len += c.len();
        ref_len += r.len();
        for k in 1..=n {
            let rc = ngram_counts(&r, k);
            for (gram, count) in ngram_counts(&c, k) {
                matched[k - 1] += count.min(rc.get(&gram).copied().unwrap_or(0));
                total[k - 1] += count;
            }
        }
    }
    if matched.iter().any(|m| *m == 0) {
        return Ok(0.0);
    }
    let log_precision: f64 = matched
        .iter()
        .zip(&total)
        .map(|(m, t)| (*m as f64 / *t as f64).ln())
        .sum::<f64>()
        / n as f64;
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    Ok(100.0 * bp * log_precision.exp())
}

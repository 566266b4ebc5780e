use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::ngram_counts;
use super::check_corpus;
use crate::text::words;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "L")]
    L,
}

impl FromStr for RougeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(RougeVariant::One),
            "2" => Ok(RougeVariant::Two),
            "L" | "l" => Ok(RougeVariant::L),
            other => Err(Error::InvalidInput(format!("unknown ROUGE variant {other:?}"))),
        }
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RougeVariant::One => "1",
            RougeVariant::Two => "2",
            RougeVariant::L => "L",
        })
    }
}

/// Length of the longest common subsequence, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn f1(overlap: usize, cand: usize, reference: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

/// F1 of one pair as a fraction. When neither side has a unit of the
/// requested size, identical token sequences score 1 and others 0.
pub fn rouge_pair(cand: &[&str], reference: &[&str], variant: RougeVariant) -> f64 {
    match variant {
        RougeVariant::L => {
            if cand.is_empty() && reference.is_empty() {
                return 1.0;
            }
            f1(lcs_len(cand, reference), cand.len(), reference.len())
        }
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let cc = ngram_counts(cand, n);
            let rc = ngram_counts(reference, n);
            if cc.is_empty() && rc.is_empty() {
                return if cand == reference { 1.0 } else { 0.0 };
            }
            let overlap: usize = cc.iter().map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0))).sum();
            let total = |m: &std::collections::HashMap<Vec<&str>, usize>| m.values().sum::<usize>();
            f1(overlap, total(&cc), total(&rc))
        }
    }
}

/// Mean per-example F1 as a percentage. Whitespace tokens.
pub fn rouge(candidates: &[&str], references: &[&str], variant: RougeVariant) -> Result<f64> {
    check_corpus(candidates, references)?;
    let scores: Vec<f64> = candidates
        .par_iter()
        .zip(references)
        .map(|(c, r)| rouge_pair(&words(c), &words(r), variant))
        .collect();
    Ok(100.0 * scores.iter().sum::<f64>() / scores.len() as f64)
}

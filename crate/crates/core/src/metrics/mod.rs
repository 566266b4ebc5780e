//! Generation metrics: corpus BLEU-1..4, per-example ROUGE-1/2/L F1 and a
//! greedy-matching embedding score, all as percentages, plus multi-seed
//! aggregation.

mod bleu;
mod embedding;
mod report;
mod rouge;

pub use bleu::{bleu, ngram_counts};
pub use embedding::{embedding_score, CharNgramEmbedder, TableEmbedder, TokenEmbedder};
pub use report::{
    aggregate, evaluate_predictions, render_table, AggregateReport, MetricReport, METRIC_NAMES, REFERENCE_JOINING,
};
pub use rouge::{lcs_len, rouge, rouge_pair, RougeVariant};

use crate::{Error, Result};

fn check_corpus(candidates: &[&str], references: &[&str]) -> Result<()> {
    if candidates.len() != references.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidates for {} references",
            candidates.len(),
            references.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty corpus".into()));
    }
    Ok(())
}

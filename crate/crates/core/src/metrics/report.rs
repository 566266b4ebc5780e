use std::cmp::Ordering;
use std::fmt::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::embedding::TokenEmbedder;
use super::rouge::RougeVariant;
use super::{bleu, embedding_score, rouge};
use crate::generator::{split_profiles, PredictionRecord};
use crate::{Error, Result};

pub const METRIC_NAMES: [&str; 8] = [
    "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L", "Embedding",
];

/// How multi-profile references (and `<sep>`-separated generations) are
/// flattened before scoring.
pub const REFERENCE_JOINING: &str = "profiles joined with a single space";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub seed: u64,
    pub n_examples: usize,
    pub embedding_model: String,
    pub reference_joining: String,
    /// Percentages keyed by metric name.
    pub scores: IndexMap<String, f64>,
}

impl MetricReport {
    pub fn score(&self, metric: &str) -> Option<f64> {
        self.scores.get(metric).copied()
    }
}

/// Scores one prediction dump. All records must carry the same seed.
pub fn evaluate_predictions(
    model: &str,
    predictions: &[PredictionRecord],
    embedder: &dyn TokenEmbedder,
) -> Result<MetricReport> {
    let first = predictions
        .first()
        .ok_or_else(|| Error::InvalidInput("prediction dump is empty".into()))?;
    if let Some(p) = predictions.iter().find(|p| p.seed != first.seed) {
        return Err(Error::InvalidInput(format!(
            "prediction dump mixes seeds {} and {}",
            first.seed, p.seed
        )));
    }
    let cand: Vec<String> = predictions.iter().map(|p| split_profiles(&p.generated).join(" ")).collect();
    let refs: Vec<String> = predictions.iter().map(|p| p.golden.join(" ")).collect();
    let c: Vec<&str> = cand.iter().map(String::as_str).collect();
    let r: Vec<&str> = refs.iter().map(String::as_str).collect();

    let mut scores = IndexMap::new();
    for n in 1..=4 {
        scores.insert(format!("BLEU-{n}"), bleu(&c, &r, n)?);
    }
    for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
        scores.insert(format!("ROUGE-{v}"), rouge(&c, &r, v)?);
    }
    scores.insert("Embedding".into(), embedding_score(&c, &r, embedder)?);
    Ok(MetricReport {
        model: model.into(),
        seed: first.seed,
        n_examples: predictions.len(),
        embedding_model: embedder.model_id().into(),
        reference_joining: REFERENCE_JOINING.into(),
        scores,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub model: String,
    pub embedding_model: String,
    /// Seeds in ascending order; `per_seed` values follow this order.
    pub seeds: Vec<u64>,
    pub mean: IndexMap<String, f64>,
    pub per_seed: IndexMap<String, Vec<f64>>,
}

fn metric_order(a: &str, b: &str) -> Ordering {
    let pos = |m: &str| METRIC_NAMES.iter().position(|n| *n == m).unwrap_or(usize::MAX);
    pos(a).cmp(&pos(b)).then_with(|| a.cmp(b))
}

/// Mean of each metric over runs. Runs are ordered by seed first so the
/// result does not depend on input order.
pub fn aggregate(reports: &[MetricReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to aggregate".into()))?;
    for r in reports {
        if r.scores.len() != first.scores.len() || r.scores.keys().any(|k| !first.scores.contains_key(k)) {
            return Err(Error::InvalidInput(format!(
                "seed {} reports metrics {:?}, seed {} reports {:?}",
                first.seed,
                first.scores.keys().collect::<Vec<_>>(),
                r.seed,
                r.scores.keys().collect::<Vec<_>>()
            )));
        }
        if r.model != first.model || r.embedding_model != first.embedding_model {
            return Err(Error::InvalidInput("reports come from different models or embedders".into()));
        }
    }
    let mut metrics: Vec<&String> = first.scores.keys().collect();
    metrics.sort_by(|a, b| metric_order(a, b));

    let mut sorted: Vec<&MetricReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        a.seed.cmp(&b.seed).then_with(|| {
            metrics
                .iter()
                .map(|m| a.scores[*m].total_cmp(&b.scores[*m]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });

    let mut mean = IndexMap::new();
    let mut per_seed = IndexMap::new();
    for m in metrics {
        let values: Vec<f64> = sorted.iter().map(|r| r.scores[m]).collect();
        mean.insert(m.clone(), values.iter().sum::<f64>() / values.len() as f64);
        per_seed.insert(m.clone(), values);
    }
    Ok(AggregateReport {
        model: first.model.clone(),
        embedding_model: first.embedding_model.clone(),
        seeds: sorted.iter().map(|r| r.seed).collect(),
        mean,
        per_seed,
    })
}

/// Model-by-metric table of means, two decimals.
pub fn render_table(reports: &[AggregateReport]) -> String {
    let width = reports.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}", "Model");
    for m in METRIC_NAMES {
        write!(out, " | {m:>9}").unwrap();
    }
    out.push('\n');
    out.push_str(&"-".repeat(width + METRIC_NAMES.len() * 12));
    out.push('\n');
    for r in reports {
        write!(out, "{:<width$}", r.model).unwrap();
        for m in METRIC_NAMES {
            match r.mean.get(m) {
                Some(v) => write!(out, " | {v:>9.2}").unwrap(),
                None => write!(out, " | {:>9}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}

//! Causal LM loss and its profile-only masked variant.
//!
//! `logits[i]` scores the token `targets[i]`; callers shift sequences so that
//! row `i` is the prediction made after seeing tokens `0..=i`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

fn log_softmax_at(row: &[f64], target: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    row[target] - lse
}

fn check_shapes(logits: &[Vec<f64>], targets: &[u32], mask: Option<&[bool]>) -> Result<()> {
    if logits.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit rows for {} targets",
            logits.len(),
            targets.len()
        )));
    }
    if let Some(m) = mask {
        if m.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!("mask of {} for {} targets", m.len(), targets.len())));
        }
    }
    for (i, (row, t)) in logits.iter().zip(targets).enumerate() {
        if *t as usize >= row.len() {
            return Err(Error::ShapeMismatch(format!(
                "target {t} at position {i} outside a vocabulary of {}",
                row.len()
            )));
        }
    }
    Ok(())
}

fn masked_nll(logits: &[Vec<f64>], targets: &[u32], mask: Option<&[bool]>, reduction: Reduction) -> Result<f64> {
    check_shapes(logits, targets, mask)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, (row, t)) in logits.iter().zip(targets).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        total -= log_softmax_at(row, *t as usize);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("no position contributes to the loss".into()));
    }
    Ok(match reduction {
        Reduction::Mean => total / count as f64,
        Reduction::Sum => total,
    })
}

/// Mean negative log-likelihood over every position.
pub fn clm_loss(logits: &[Vec<f64>], targets: &[u32]) -> Result<f64> {
    masked_nll(logits, targets, None, Reduction::Mean)
}

/// Mean negative log-likelihood over positions where `mask` is true.
pub fn pg_loss(logits: &[Vec<f64>], targets: &[u32], mask: &[bool]) -> Result<f64> {
    masked_nll(logits, targets, Some(mask), Reduction::Mean)
}

pub fn pg_loss_with(logits: &[Vec<f64>], targets: &[u32], mask: &[bool], reduction: Reduction) -> Result<f64> {
    masked_nll(logits, targets, Some(mask), reduction)
}

/// Loss and its analytic gradient with respect to every logit. Rows of
/// masked-out positions are all zeros.
pub fn pg_loss_grad(
    logits: &[Vec<f64>],
    targets: &[u32],
    mask: &[bool],
    reduction: Reduction,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let loss = masked_nll(logits, targets, Some(mask), reduction)?;
    let count = mask.iter().filter(|m| **m).count() as f64;
    let scale = match reduction {
        Reduction::Mean => 1.0 / count,
        Reduction::Sum => 1.0,
    };
    let grads = logits
        .iter()
        .zip(targets)
        .zip(mask)
        .map(|((row, t), m)| {
            if !*m {
                return vec![0.0; row.len()];
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = row.iter().map(|z| (z - max).exp()).collect();
            let sum: f64 = exp.iter().sum();
            exp.iter()
                .enumerate()
                .map(|(k, e)| scale * (e / sum - if k == *t as usize { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    Ok((loss, grads))
}

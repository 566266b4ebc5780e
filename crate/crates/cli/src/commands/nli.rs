use serde_json::json;

use pgtask_core::artifact;
use pgtask_core::corpus::{load_nli_corpus, NliFormat};
use pgtask_core::nli::{evaluate_accuracy, merge_training_sets, train_nli, NliTrainConfig};

use super::{cache_dir, print_json, resolve_classifier, RunConfig};
use crate::args::{NliEvalArgs, NliTrainArgs};
use crate::{invalid, Failure};

fn format(s: &str) -> Result<NliFormat, Failure> {
    s.parse().map_err(|_| invalid(format!("unknown NLI format {s:?}; expected mnli or dnli")))
}

pub fn train(a: &NliTrainArgs, run: &RunConfig) -> Result<(), Failure> {
    if a.mnli.is_none() && a.dnli.is_none() {
        return Err(invalid("give at least one of --mnli and --dnli"));
    }
    let config = NliTrainConfig {
        backend_id: a.backend_id.clone(),
        learning_rate: a.lr,
        batch_size: a.batch_size,
        max_epochs: a.max_epochs,
        early_stop_patience: a.patience,
        seed: a.seed,
        hash_buckets: a.hash_buckets,
    };
    config.validate()?;
    let valid_format = format(&a.valid_format)?;

    let mnli = match &a.mnli {
        Some(p) => load_nli_corpus(p, NliFormat::MultiGenre)?,
        None => Vec::new(),
    };
    let dnli = match &a.dnli {
        Some(p) => load_nli_corpus(p, NliFormat::DialogueNli)?,
        None => Vec::new(),
    };
    let train = merge_training_sets(mnli, dnli, a.seed);
    let valid = load_nli_corpus(&a.valid, valid_format)?;
    let outcome = train_nli(&train, &valid, &config)?;

    let dir = a.out_dir.clone().unwrap_or_else(|| cache_dir().join("nli")).join(&a.backend_id);
    outcome.model.save(&dir, &outcome.meta)?;
    let history = dir.join("history.json");
    artifact::write_json(&history, &outcome.history)?;
    run.write_sidecar(&history, json!({}))?;
    println!(
        "checkpoint {} (best epoch {}, validation accuracy {:.2}%)",
        dir.display(),
        outcome.meta.best_epoch,
        100.0 * outcome.meta.best_valid_accuracy
    );
    Ok(())
}

pub fn eval(a: &NliEvalArgs, run: &RunConfig) -> Result<(), Failure> {
    let format = format(&a.format)?;
    let classifier = resolve_classifier(&a.checkpoint)?;
    let test = load_nli_corpus(&a.test, format)?;
    let accuracy = evaluate_accuracy(&classifier, &test)?;
    let report = json!({
        "classifier_id": classifier.backend_id(),
        "examples": test.len(),
        "accuracy": 100.0 * accuracy,
        "config_hash": run.hash,
    });
    match &a.out {
        Some(out) => {
            artifact::write_json(out, &report)?;
            run.write_sidecar(out, json!({}))?;
            println!("accuracy {:.2}% on {} examples", 100.0 * accuracy, test.len());
        }
        None => print_json(&report)?,
    }
    Ok(())
}

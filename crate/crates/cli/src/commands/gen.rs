use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use pgtask_core::artifact;
use pgtask_core::corpus::{load_dialogue_corpus, Split};
use pgtask_core::generator::{
    generate as generate_one, generate_batch, model_spec, read_predictions, train_generator, write_predictions,
    DecoderHandle, GenTrainConfig, GenTrainOutcome, PredictionRecord,
};
use pgtask_core::metrics::{aggregate, evaluate_predictions, render_table, AggregateReport, MetricReport, TokenEmbedder};
use pgtask_core::pgd::{build_from_pairs, read_pgd, write_pgd, PgdDataset, PgdRecord};

use super::data::{align_to, histogram_path, DATASET_FILE};
use super::{cache_dir, parse_split, resolve_classifier, resolve_embedder, RunConfig};
use crate::args::{BenchmarkArgs, EvaluateArgs, GenTrainArgs, GenerateArgs, TrainOverrides};
use crate::{invalid, Failure};

/// Report file written by `evaluate` and `benchmark`.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub config_hash: String,
    pub runs: Vec<MetricReport>,
    pub aggregate: AggregateReport,
}

fn train_config(model: &str, o: &TrainOverrides, seeds: Vec<u64>) -> Result<GenTrainConfig, Failure> {
    let spec = model_spec(model).ok_or_else(|| invalid(format!("unknown decoder {model:?}")))?;
    if !spec.available {
        return Err(invalid(format!(
            "decoder {model} ({}M parameters) has no local weights in this build",
            spec.params_millions
        )));
    }
    let mut c = GenTrainConfig::for_model(model)?;
    c.seeds = seeds;
    if let Some(v) = o.lr {
        c.learning_rate = v;
    }
    if let Some(v) = o.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = o.grad_accum {
        c.grad_accum_steps = v;
    }
    if let Some(v) = o.max_epochs {
        c.max_epochs = v;
    }
    if let Some(v) = o.patience {
        c.early_stop_patience = v;
    }
    if let Some(v) = o.max_vocab {
        c.max_vocab = v;
    }
    if let Some(v) = o.min_count {
        c.min_count = v;
    }
    if let Some(v) = o.reduction {
        c.reduction = v;
    }
    c.validate()?;
    Ok(c)
}

fn split_records(dataset: &PgdDataset, split: Split) -> Vec<PgdRecord> {
    dataset.split(split).cloned().collect()
}

fn require(records: &[PgdRecord], split: Split) -> Result<(), Failure> {
    if records.is_empty() {
        return Err(Failure::Runtime(format!("dataset has no {split} records")));
    }
    Ok(())
}

fn save_run(outcome: &GenTrainOutcome, dir: &Path, run: &RunConfig) -> Result<(), Failure> {
    outcome.save(dir)?;
    let history = dir.join("history.json");
    artifact::write_json(&history, &outcome.history)?;
    run.write_sidecar(&history, json!({ "seed": outcome.meta.seed }))?;
    Ok(())
}

pub fn train(a: &GenTrainArgs, run: &RunConfig) -> Result<(), Failure> {
    let config = train_config(&a.model, &a.overrides, vec![a.seed])?;
    let dataset = read_pgd(&a.dataset)?;
    let train = split_records(&dataset, Split::Train);
    let valid = split_records(&dataset, Split::Valid);
    require(&train, Split::Train)?;
    require(&valid, Split::Valid)?;
    let outcome = train_generator(&train, &valid, &config, a.seed)?;
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| cache_dir().join("gen").join(&a.model).join(format!("seed-{}", a.seed)));
    save_run(&outcome, &dir, run)?;
    println!(
        "checkpoint {} (best epoch {}, validation loss {:.4})",
        dir.display(),
        outcome.meta.best_epoch,
        outcome.meta.best_valid_loss
    );
    Ok(())
}

fn predict(handle: &DecoderHandle, records: &[PgdRecord], seed: u64, budget: usize) -> Result<Vec<PredictionRecord>, Failure> {
    let utterances: Vec<&str> = records.iter().map(|r| r.utterance.as_str()).collect();
    let generated = generate_batch(handle, &utterances, budget)?;
    Ok(records
        .iter()
        .zip(generated)
        .map(|(r, g)| PredictionRecord {
            utterance: r.utterance.clone(),
            golden: r.profiles.iter().map(|p| p.text.clone()).collect(),
            generated: g,
            seed,
        })
        .collect())
}

pub fn generate(a: &GenerateArgs, run: &RunConfig) -> Result<(), Failure> {
    if a.max_new_tokens == 0 {
        return Err(invalid("--max-new-tokens must be positive"));
    }
    let split = parse_split(&a.split)?;
    let (handle, meta) = GenTrainOutcome::load(&a.checkpoint)?;
    if let Some(u) = &a.utterance {
        println!("{}", generate_one(&handle, u, a.max_new_tokens)?);
        return Ok(());
    }
    let dataset = read_pgd(a.dataset.as_deref().expect("clap requires dataset"))?;
    let records = split_records(&dataset, split);
    require(&records, split)?;
    let predictions = predict(&handle, &records, meta.seed, a.max_new_tokens)?;
    match &a.out {
        Some(out) => {
            write_predictions(out, &predictions)?;
            run.write_sidecar(out, json!({ "checkpoint": meta, "split": split }))?;
            println!("{} predictions -> {}", predictions.len(), out.display());
        }
        None => {
            for p in &predictions {
                println!("{}", serde_json::to_string(p).map_err(|e| Failure::Runtime(e.to_string()))?);
            }
        }
    }
    Ok(())
}

fn write_evaluation(out: &Path, runs: Vec<MetricReport>, run: &RunConfig) -> Result<AggregateReport, Failure> {
    let agg = aggregate(&runs)?;
    let output = EvaluationOutput {
        config_hash: run.hash.clone(),
        runs,
        aggregate: agg.clone(),
    };
    artifact::write_json(out, &output)?;
    Ok(agg)
}

pub fn evaluate(a: &EvaluateArgs, run: &RunConfig) -> Result<(), Failure> {
    let embedder = resolve_embedder(&a.embedder)?;
    let mut runs = Vec::new();
    for path in &a.predictions {
        let predictions = read_predictions(path)?;
        runs.push(evaluate_predictions(&a.model, &predictions, embedder.as_ref())?);
    }
    let agg = match &a.out {
        Some(out) => write_evaluation(out, runs, run)?,
        None => aggregate(&runs)?,
    };
    print!("{}", render_table(&[agg]));
    Ok(())
}

fn corpus_specs(specs: &[String]) -> Result<Vec<(Split, std::path::PathBuf)>, Failure> {
    let mut out = Vec::new();
    for spec in specs {
        let (s, p) = spec
            .split_once('=')
            .ok_or_else(|| invalid(format!("--corpus expects split=path, got {spec:?}")))?;
        out.push((parse_split(s)?, std::path::PathBuf::from(p)));
    }
    for split in Split::ALL {
        match out.iter().filter(|(s, _)| *s == split).count() {
            1 => {}
            0 => return Err(invalid(format!("missing --corpus {split}=<path>"))),
            _ => return Err(invalid(format!("--corpus {split} given more than once"))),
        }
    }
    out.sort_by_key(|(s, _)| Split::ALL.iter().position(|x| x == s));
    Ok(out)
}

fn run_seed(
    a: &BenchmarkArgs,
    config: &GenTrainConfig,
    seed: u64,
    splits: &[Vec<PgdRecord>; 3],
    embedder: &dyn TokenEmbedder,
    run: &RunConfig,
) -> Result<MetricReport, Failure> {
    let outcome = train_generator(&splits[0], &splits[1], config, seed)?;
    save_run(&outcome, &a.out.join("checkpoints").join(format!("seed-{seed}")), run)?;
    let predictions = predict(&outcome.handle(), &splits[2], seed, a.max_new_tokens)?;
    let path = a.out.join("predictions").join(format!("seed-{seed}.jsonl"));
    write_predictions(&path, &predictions)?;
    run.write_sidecar(&path, json!({ "seed": seed, "best_epoch": outcome.meta.best_epoch }))?;
    Ok(evaluate_predictions(&a.model, &predictions, embedder)?)
}

pub fn benchmark(a: &BenchmarkArgs, run: &RunConfig) -> Result<(), Failure> {
    if a.seeds.is_empty() {
        return Err(invalid("--seeds must list at least one seed"));
    }
    if a.seeds.iter().collect::<BTreeSet<_>>().len() != a.seeds.len() {
        return Err(invalid("--seeds contains duplicates"));
    }
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(invalid(format!("threshold {} outside [0, 1]", a.threshold)));
    }
    if a.max_new_tokens == 0 {
        return Err(invalid("--max-new-tokens must be positive"));
    }
    let config = train_config(&a.model, &a.overrides, a.seeds.clone())?;
    let embedder = resolve_embedder(&a.embedder)?;
    let corpora = match &a.dataset {
        Some(_) => None,
        None => Some((resolve_classifier(&a.nli_checkpoint)?, corpus_specs(&a.corpus)?)),
    };

    let dataset_path = a.out.join(DATASET_FILE);
    let dataset = match (&a.dataset, corpora) {
        (Some(path), _) => read_pgd(path)?,
        (None, Some((classifier, corpora))) => {
            let mut by_split = Vec::new();
            for (split, path) in corpora {
                let corpus = load_dialogue_corpus(&path, split)?;
                let pairs_path = a.out.join(format!("pairs-{split}.jsonl"));
                let pairs = align_to(&corpus, &classifier, &pairs_path, &histogram_path(&pairs_path), 1.0, run)?;
                by_split.push((split, pairs));
            }
            build_from_pairs(&by_split, classifier.backend_id(), a.threshold)?
        }
        (None, None) => unreachable!("corpora resolved above"),
    };
    let meta = write_pgd(&dataset, &dataset_path, Some(&run.hash))?;
    print!("{}", meta.statistics.to_table());

    let splits = [
        split_records(&dataset, Split::Train),
        split_records(&dataset, Split::Valid),
        split_records(&dataset, Split::Test),
    ];
    for (records, split) in splits.iter().zip(Split::ALL) {
        require(records, split)?;
    }

    let runs: Vec<MetricReport> = a
        .seeds
        .par_iter()
        .map(|seed| run_seed(a, &config, *seed, &splits, embedder.as_ref(), run))
        .collect::<Result<_, _>>()?;

    let agg = write_evaluation(&a.out.join("report.json"), runs, run)?;
    let table = render_table(&[agg]);
    let table_path = a.out.join("report.txt");
    std::fs::write(&table_path, &table).map_err(|e| Failure::Runtime(format!("{}: {e}", table_path.display())))?;
    run.write_sidecar(&table_path, json!({}))?;
    print!("{table}");
    Ok(())
}

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use pgtask_core::alignment::{align_corpus, confidence_summary, read_pairs, write_histogram_csv, write_pairs, AlignedPair};
use pgtask_core::artifact;
use pgtask_core::corpus::personachat::convert_personachat;
use pgtask_core::corpus::{load_dialogue_corpus, DialogueCorpus, Split};
use pgtask_core::nli::ClassifierHandle;
use pgtask_core::pgd::{build_from_pairs, compute_statistics, read_pgd, write_pgd};

use super::{parse_split, print_json, resolve_classifier, RunConfig};
use crate::args::{AlignArgs, BuildArgs, ConvertArgs, StatsArgs};
use crate::{invalid, Failure};

pub const DATASET_FILE: &str = "pgd.jsonl";

pub fn histogram_path(pairs: &Path) -> PathBuf {
    let stem = pairs.file_stem().unwrap_or_default().to_string_lossy();
    pairs.with_file_name(format!("{stem}.histogram.csv"))
}

/// Aligns one corpus and writes pairs, histogram and their metadata.
pub(crate) fn align_to(
    corpus: &DialogueCorpus,
    classifier: &ClassifierHandle,
    out: &Path,
    histogram: &Path,
    bin_width: f64,
    run: &RunConfig,
) -> Result<Vec<AlignedPair>, Failure> {
    let pairs = align_corpus(corpus, classifier)?;
    write_pairs(out, &pairs)?;
    let summary = confidence_summary(&pairs, bin_width)?;
    write_histogram_csv(histogram, &summary)?;
    let extra = json!({
        "classifier_id": classifier.backend_id(),
        "split": corpus.split,
        "dialogues": corpus.dialogues.len(),
        "rejected_dialogues": corpus.rejected.len(),
        "utterances": corpus.utterance_count(),
        "pairs": pairs.len(),
        "mean_confidence": summary.mean,
        "variance": summary.variance,
    });
    run.write_sidecar(out, extra.clone())?;
    run.write_sidecar(histogram, extra)?;
    log::info!(
        "{} entailed pairs from {} utterances, mean confidence {:.2}%",
        pairs.len(),
        corpus.utterance_count(),
        summary.mean
    );
    Ok(pairs)
}

pub fn align(a: &AlignArgs, run: &RunConfig) -> Result<(), Failure> {
    let split = parse_split(&a.split)?;
    if !(a.bin_width > 0.0 && a.bin_width <= 100.0) {
        return Err(invalid("bin width must be in (0, 100]"));
    }
    let corpus = load_dialogue_corpus(&a.corpus, split)?;
    let histogram = a.histogram.clone().unwrap_or_else(|| histogram_path(&a.out));
    let classifier = resolve_classifier(&a.nli_checkpoint)?;
    let pairs = align_to(&corpus, &classifier, &a.out, &histogram, a.bin_width, run)?;
    println!(
        "{} pairs -> {}, histogram -> {}",
        pairs.len(),
        a.out.display(),
        histogram.display()
    );
    Ok(())
}

fn pairs_meta(path: &Path) -> Option<Value> {
    artifact::read_json(&artifact::sidecar_path(path)).ok()
}

pub fn build(a: &BuildArgs, run: &RunConfig) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(invalid(format!("threshold {} outside [0, 1]", a.threshold)));
    }
    let mut inputs = Vec::new();
    for spec in &a.pairs {
        let (split, path) = match spec.split_once('=') {
            Some((s, p)) => (Some(parse_split(s)?), PathBuf::from(p)),
            None => (None, PathBuf::from(spec)),
        };
        inputs.push((split, path));
    }

    let mut by_split = Vec::new();
    let mut classifier_id = a.classifier_id.clone();
    for (split, path) in inputs {
        let meta = pairs_meta(&path);
        let split = match split {
            Some(s) => s,
            None => meta
                .as_ref()
                .and_then(|m| m.get("split")?.as_str()?.parse::<Split>().ok())
                .unwrap_or(Split::Train),
        };
        if classifier_id.is_none() {
            classifier_id = meta
                .as_ref()
                .and_then(|m| m.get("classifier_id")?.as_str().map(str::to_string));
        }
        by_split.push((split, read_pairs(&path)?));
    }
    let classifier_id = classifier_id.unwrap_or_else(|| "unknown".into());
    let dataset = build_from_pairs(&by_split, &classifier_id, a.threshold)?;
    let path = a.out.join(DATASET_FILE);
    let meta = write_pgd(&dataset, &path, Some(&run.hash))?;
    println!("{} records -> {}", meta.record_count, path.display());
    print!("{}", meta.statistics.to_table());
    Ok(())
}

pub fn stats(a: &StatsArgs) -> Result<(), Failure> {
    let dataset = read_pgd(&a.dataset)?;
    let stats = compute_statistics(&dataset.records);
    if a.json {
        print_json(&stats)
    } else {
        print!("{}", stats.to_table());
        Ok(())
    }
}

pub fn convert(a: &ConvertArgs, run: &RunConfig) -> Result<(), Failure> {
    let content = std::fs::read_to_string(&a.input).map_err(|e| Failure::Runtime(format!("{}: {e}", a.input.display())))?;
    let records = convert_personachat(&content, &a.prefix);
    artifact::write_jsonl(&a.out, &records)?;
    run.write_sidecar(&a.out, json!({ "dialogues": records.len() }))?;
    println!("{} dialogues -> {}", records.len(), a.out.display());
    Ok(())
}

use serde_json::json;

use pgtask_core::alignment::read_pairs;
use pgtask_core::annotation::{self, stratified_sample, AnnotationBatch, IntervalSpec, JudgmentStore, LogEntry};
use pgtask_core::artifact;

use super::RunConfig;
use crate::args::{ReportArgs, SampleArgs, ServeArgs};
use crate::{invalid, server, Failure};

pub fn sample(a: &SampleArgs, run: &RunConfig) -> Result<(), Failure> {
    if a.pairs.is_empty() {
        return Err(invalid("give at least one --pairs file"));
    }
    let intervals = match &a.intervals {
        Some(s) => IntervalSpec::parse_list(s).map_err(|e| invalid(e.to_string()))?,
        None => IntervalSpec::first_round(),
    };
    if intervals.is_empty() {
        return Err(invalid("no intervals given"));
    }
    let mut pairs = Vec::new();
    for p in &a.pairs {
        pairs.extend(read_pairs(p)?);
    }
    let batch = stratified_sample(&a.batch_id, &pairs, &intervals, a.per_interval, a.seed)?;
    batch.save(&a.out)?;
    run.write_sidecar(&a.out, json!({ "items": batch.items.len() }))?;
    println!("{} items in batch {} -> {}", batch.items.len(), batch.id, a.out.display());
    Ok(())
}

fn load_batches(paths: &[std::path::PathBuf]) -> Result<Vec<AnnotationBatch>, Failure> {
    paths.iter().map(|p| AnnotationBatch::load(p).map_err(Failure::from)).collect()
}

pub fn serve(a: &ServeArgs) -> Result<(), Failure> {
    let addr: std::net::SocketAddr = a
        .addr
        .parse()
        .map_err(|_| invalid(format!("bad listen address {:?}", a.addr)))?;
    let store = JudgmentStore::open(load_batches(&a.batches)?, &a.log)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime
        .block_on(server::serve(store, addr))
        .map_err(|e| Failure::Runtime(format!("server on {addr}: {e}")))
}

pub fn report(a: &ReportArgs, run: &RunConfig) -> Result<(), Failure> {
    let batches = load_batches(&a.batches)?;
    let ids: Vec<String> = match &a.batch_id {
        Some(id) => vec![id.clone()],
        None => batches.iter().map(|b| b.id.clone()).collect(),
    };
    let entries: Vec<LogEntry> = artifact::read_jsonl(&a.log)?;
    let store = JudgmentStore::replay(batches, entries)?;
    let mut reports = Vec::new();
    for id in &ids {
        let r = annotation::report(&store, id)?;
        print!("{}", r.to_text());
        reports.push(r);
    }
    if let Some(out) = &a.out {
        if a.batch_id.is_some() {
            artifact::write_json(out, &reports[0])?;
        } else {
            artifact::write_json(out, &reports)?;
        }
        run.write_sidecar(out, json!({ "log_entries": store.log().len() }))?;
    }
    Ok(())
}

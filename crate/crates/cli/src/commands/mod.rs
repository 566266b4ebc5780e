mod annotate;
mod data;
mod gen;
mod nli;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use pgtask_core::artifact::{self, config_hash};
use pgtask_core::corpus::Split;
use pgtask_core::metrics::{CharNgramEmbedder, TokenEmbedder};
use pgtask_core::nli::{ClassifierHandle, OVERLAP_STUB_ID};

use crate::args::{Command, CACHE_ENV};
use crate::{invalid, Failure};

pub fn execute(command: &Command) -> Result<(), Failure> {
    let run = RunConfig::new(command);
    match command {
        Command::NliTrain(a) => nli::train(a, &run),
        Command::NliEval(a) => nli::eval(a, &run),
        Command::Align(a) => data::align(a, &run),
        Command::Build(a) => data::build(a, &run),
        Command::Stats(a) => data::stats(a),
        Command::ConvertPersonachat(a) => data::convert(a, &run),
        Command::SampleAnnotation(a) => annotate::sample(a, &run),
        Command::ServeAnnotation(a) => annotate::serve(a),
        Command::AnnotationReport(a) => annotate::report(a, &run),
        Command::GenTrain(a) => gen::train(a, &run),
        Command::Generate(a) => gen::generate(a, &run),
        Command::Evaluate(a) => gen::evaluate(a, &run),
        Command::Benchmark(a) => gen::benchmark(a, &run),
    }
}

/// The validated invocation, serialized into artifact metadata. Output
/// locations are not part of it.
pub(crate) struct RunConfig {
    pub config: Value,
    pub hash: String,
}

impl RunConfig {
    fn new(command: &Command) -> Self {
        let config = serde_json::to_value(command).expect("arguments serialize");
        let hash = config_hash(&config);
        RunConfig { config, hash }
    }

    /// Writes `<path>.meta.json` with the config, its hash and `extra`.
    pub fn write_sidecar(&self, path: &Path, extra: Value) -> Result<(), Failure> {
        let mut meta = json!({ "config": self.config, "config_hash": self.hash });
        if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
            m.extend(e);
        }
        artifact::write_json(&artifact::sidecar_path(path), &meta)?;
        Ok(())
    }
}

pub(crate) fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".pgtask-cache"))
}

/// `stub:overlap`, a checkpoint directory, or a checkpoint name under
/// `<cache>/nli/`.
pub(crate) fn resolve_classifier(spec: &str) -> Result<ClassifierHandle, Failure> {
    if spec == OVERLAP_STUB_ID {
        return Ok(ClassifierHandle::overlap_stub());
    }
    if spec.starts_with("stub:") {
        return Err(invalid(format!("unknown classifier stub {spec:?}; available: {OVERLAP_STUB_ID}")));
    }
    let direct = PathBuf::from(spec);
    let dir = if direct.is_dir() {
        direct
    } else {
        let cached = cache_dir().join("nli").join(spec);
        if !cached.is_dir() {
            return Err(invalid(format!(
                "no NLI checkpoint at {spec:?} or {}",
                cached.display()
            )));
        }
        cached
    };
    Ok(ClassifierHandle::load_checkpoint(&dir)?)
}

pub(crate) fn resolve_embedder(spec: &str) -> Result<Box<dyn TokenEmbedder>, Failure> {
    let dim = spec
        .strip_prefix("stub:char-trigram-")
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|d| *d > 0)
        .ok_or_else(|| {
            invalid(format!(
                "embedding backend {spec:?} is not available; use stub:char-trigram-<dim>"
            ))
        })?;
    Ok(Box::new(CharNgramEmbedder::new(dim)))
}

pub(crate) fn parse_split(s: &str) -> Result<Split, Failure> {
    s.parse().map_err(|_| invalid(format!("unknown split {s:?}; expected train, valid or test")))
}

pub(crate) fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?);
    Ok(())
}

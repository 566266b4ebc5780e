use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pgtask_core::generator::{Reduction, TINY_BACKEND};
use pgtask_core::pgd::DEFAULT_THRESHOLD;

/// Environment variable naming the checkpoint cache directory.
pub const CACHE_ENV: &str = "PGTASK_CACHE_DIR";
pub const DEFAULT_EMBEDDER: &str = "stub:char-trigram-256";

#[derive(Debug, Parser)]
#[command(name = "pgtask", version, about = "Build profile-generation datasets and benchmark profile generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train the entailment classifier on MNLI and/or DNLI
    NliTrain(NliTrainArgs),
    /// Report classifier accuracy on a labelled NLI file
    NliEval(NliEvalArgs),
    /// Align utterances with entailed persona sentences
    Align(AlignArgs),
    /// Build the confidence-filtered dataset from aligned pairs
    Build(BuildArgs),
    /// Print dataset statistics
    Stats(StatsArgs),
    /// Draw an annotation batch stratified by confidence interval
    SampleAnnotation(SampleArgs),
    /// Serve annotation batches over HTTP
    ServeAnnotation(ServeArgs),
    /// Agreement and accuracy report from a judgment log
    AnnotationReport(ReportArgs),
    /// Train a profile generator
    GenTrain(GenTrainArgs),
    /// Generate profiles greedily from a trained generator
    Generate(GenerateArgs),
    /// Score prediction dumps
    Evaluate(EvaluateArgs),
    /// Dataset, multi-seed training, generation and evaluation in one run
    Benchmark(BenchmarkArgs),
    /// Convert PersonaChat text files into the dialogue JSON-lines format
    ConvertPersonachat(ConvertArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::NliTrain(_) => "nli-train",
            Command::NliEval(_) => "nli-eval",
            Command::Align(_) => "align",
            Command::Build(_) => "build",
            Command::Stats(_) => "stats",
            Command::SampleAnnotation(_) => "sample-annotation",
            Command::ServeAnnotation(_) => "serve-annotation",
            Command::AnnotationReport(_) => "annotation-report",
            Command::GenTrain(_) => "gen-train",
            Command::Generate(_) => "generate",
            Command::Evaluate(_) => "evaluate",
            Command::Benchmark(_) => "benchmark",
            Command::ConvertPersonachat(_) => "convert-personachat",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct NliTrainArgs {
    /// MultiGenre NLI training file
    #[arg(long)]
    pub mnli: Option<PathBuf>,
    /// Dialogue NLI training file
    #[arg(long)]
    pub dnli: Option<PathBuf>,
    /// Validation file
    #[arg(long)]
    pub valid: PathBuf,
    #[arg(long, default_value = "dnli")]
    pub valid_format: String,
    /// Checkpoints go to `<out-dir>/<backend-id>/`; defaults to the cache
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value = "linear-nli")]
    pub backend_id: String,
    #[arg(long, default_value_t = 5e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4096)]
    pub hash_buckets: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NliEvalArgs {
    /// Checkpoint directory, cached checkpoint name, or `stub:overlap`
    #[arg(long)]
    pub checkpoint: String,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value = "dnli")]
    pub format: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignArgs {
    /// Dialogue JSON-lines file
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Checkpoint directory, cached checkpoint name, or `stub:overlap`
    #[arg(long)]
    pub nli_checkpoint: String,
    /// Aligned pairs output; the histogram is written next to it
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub histogram: Option<PathBuf>,
    /// Histogram bin width in percent
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    /// Aligned pairs, optionally prefixed with the split: `valid=pairs.jsonl`
    #[arg(long, required = true)]
    pub pairs: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Output directory; the dataset is `<out>/pgd.jsonl`
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Classifier id recorded when the pairs carry no metadata
    #[arg(long)]
    pub classifier_id: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub pairs: Vec<PathBuf>,
    /// Interval list such as `[50,70],]70,90],]90,100]`
    #[arg(long)]
    pub intervals: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub per_interval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub batch_id: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long = "batch", required = true)]
    pub batches: Vec<PathBuf>,
    /// Append-only judgment log
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long = "batch", required = true)]
    pub batches: Vec<PathBuf>,
    #[arg(long)]
    pub log: PathBuf,
    /// Batch to report on; defaults to every batch
    #[arg(long)]
    pub batch_id: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct TrainOverrides {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub grad_accum: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long, value_parser = parse_reduction)]
    pub reduction: Option<Reduction>,
}

fn parse_reduction(s: &str) -> Result<Reduction, String> {
    match s {
        "mean" => Ok(Reduction::Mean),
        "sum" => Ok(Reduction::Sum),
        other => Err(format!("expected mean or sum, got {other:?}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenTrainArgs {
    /// Dataset file with train and valid records
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = TINY_BACKEND)]
    pub model: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint directory; defaults to `<cache>/gen/<model>/seed-<seed>`
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Generate for one utterance and print the result
    #[arg(long, conflicts_with = "dataset")]
    pub utterance: Option<String>,
    #[arg(long, required_unless_present = "utterance")]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, requires = "dataset")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub max_new_tokens: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Prediction dumps, one per seed
    #[arg(long, required = true)]
    pub predictions: Vec<PathBuf>,
    /// Row label in the table
    #[arg(long, default_value = "model")]
    pub model: String,
    #[arg(long, default_value = DEFAULT_EMBEDDER)]
    pub embedder: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Dialogue files as `split=path`; train, valid and test are required
    #[arg(long, conflicts_with = "dataset")]
    pub corpus: Vec<String>,
    /// Use an existing dataset instead of building one
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "stub:overlap")]
    pub nli_checkpoint: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = TINY_BACKEND)]
    pub model: String,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    pub max_new_tokens: usize,
    #[arg(long, default_value = DEFAULT_EMBEDDER)]
    pub embedder: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    /// PersonaChat text file (`your persona:` / tab-separated turns)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Dialogue id prefix
    #[arg(long, default_value = "pc")]
    pub prefix: String,
}

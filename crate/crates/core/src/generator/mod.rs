//! Decoder-side of the pipeline: template formatting, the masked loss,
//! trainable and stub decoders, greedy generation and prediction dumps.

mod bigram;
mod decode;
mod format;
mod loss;
mod model;
mod train;
mod vocab;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bigram::{ConditionalBigramLm, BIGRAM_KIND};
pub use decode::{argmax_lowest, generate, generate_batch};
pub use format::{detokenize_example, format_example, render_template, split_profiles, FormattedExample, TEMPLATE};
pub use loss::{clm_loss, pg_loss, pg_loss_grad, pg_loss_with, Reduction};
pub use model::{DecoderHandle, DecoderModel, EosStub, LookupStub};
pub use train::{
    build_vocab, model_spec, train_generator, GenCheckpointMeta, GenEpochRecord, GenTrainConfig, GenTrainOutcome,
    ModelSpec, MODEL_REGISTRY, TINY_BACKEND,
};
pub use vocab::{SpecialTokens, TokenizerKind, Vocab, EOS_TOKEN, GEN_TOKEN, SEP_TOKEN, UNK_TOKEN};

use crate::artifact;
use crate::Result;

/// One line of a prediction dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub utterance: String,
    pub golden: Vec<String>,
    pub generated: String,
    pub seed: u64,
}

pub fn write_predictions(path: &Path, predictions: &[PredictionRecord]) -> Result<()> {
    artifact::write_jsonl(path, predictions)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    artifact::read_jsonl(path)
}

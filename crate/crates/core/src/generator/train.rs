use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bigram::{ConditionalBigramLm, BIGRAM_KIND};
use super::format::{format_example, FormattedExample, TEMPLATE};
use super::loss::Reduction;
use super::model::DecoderHandle;
use super::vocab::Vocab;
use crate::artifact::{self, config_hash};
use crate::pgd::PgdRecord;
use crate::train::{Adam, Direction, EarlyStopping};
use crate::{Error, Result};

pub const TINY_BACKEND: &str = "tiny-bigram";
const METADATA_FILE: &str = "metadata.json";

/// Architecture and recommended optimisation settings for a decoder id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub id: &'static str,
    pub layers: u32,
    pub hidden: u32,
    pub heads: u32,
    pub params_millions: u32,
    pub batch_size: usize,
    pub grad_accum_steps: usize,
    pub learning_rate: f64,
    /// Whether this build can train the model.
    pub available: bool,
}

pub const MODEL_REGISTRY: &[ModelSpec] = &[
    ModelSpec {
        id: "distilgpt2",
        layers: 6,
        hidden: 768,
        heads: 12,
        params_millions: 82,
        batch_size: 16,
        grad_accum_steps: 1,
        learning_rate: 5e-5,
        available: false,
    },
    ModelSpec {
        id: "gpt2",
        layers: 12,
        hidden: 768,
        heads: 12,
        params_millions: 117,
        batch_size: 16,
        grad_accum_steps: 1,
        learning_rate: 5e-5,
        available: false,
    },
    ModelSpec {
        id: "gpt2-medium",
        layers: 24,
        hidden: 1024,
        heads: 16,
        params_millions: 345,
        batch_size: 4,
        grad_accum_steps: 4,
        learning_rate: 5e-5,
        available: false,
    },
    ModelSpec {
        id: TINY_BACKEND,
        layers: 0,
        hidden: 0,
        heads: 0,
        params_millions: 0,
        batch_size: 16,
        grad_accum_steps: 1,
        learning_rate: 0.05,
        available: true,
    },
];

pub fn model_spec(id: &str) -> Option<&'static ModelSpec> {
    MODEL_REGISTRY.iter().find(|m| m.id == id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenTrainConfig {
    pub backend_id: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub grad_accum_steps: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-loss improvement before stopping.
    pub early_stop_patience: usize,
    pub seeds: Vec<u64>,
    pub max_new_tokens: usize,
    pub reduction: Reduction,
    pub max_vocab: usize,
    pub min_count: usize,
}

impl Default for GenTrainConfig {
    fn default() -> Self {
        GenTrainConfig {
            backend_id: "gpt2".into(),
            learning_rate: 5e-5,
            batch_size: 16,
            grad_accum_steps: 1,
            max_epochs: 20,
            early_stop_patience: 5,
            seeds: vec![0, 1, 2, 3, 4],
            max_new_tokens: 50,
            reduction: Reduction::Mean,
            max_vocab: 1000,
            min_count: 1,
        }
    }
}

impl GenTrainConfig {
    /// Defaults with the registry's batch, accumulation and learning rate for
    /// `id`.
    pub fn for_model(id: &str) -> Result<Self> {
        let spec = model_spec(id).ok_or_else(|| Error::InvalidConfig(format!("unknown decoder {id:?}")))?;
        Ok(GenTrainConfig {
            backend_id: spec.id.into(),
            learning_rate: spec.learning_rate,
            batch_size: spec.batch_size,
            grad_accum_steps: spec.grad_accum_steps,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0
            || self.grad_accum_steps == 0
            || self.max_epochs == 0
            || self.early_stop_patience == 0
            || self.max_new_tokens == 0
            || self.min_count == 0
        {
            return Err(Error::InvalidConfig(
                "batch size, accumulation steps, epochs, patience, max new tokens and min count must be positive"
                    .into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.max_vocab < 5 {
            return Err(Error::InvalidConfig("max vocab must leave room for words besides the specials".into()));
        }
        if model_spec(&self.backend_id).is_none() {
            return Err(Error::InvalidConfig(format!("unknown decoder {:?}", self.backend_id)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenEpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub improved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenCheckpointMeta {
    pub backend_id: String,
    pub kind: String,
    pub config: GenTrainConfig,
    pub seed: u64,
    pub best_valid_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub template: String,
    pub config_hash: String,
}

#[derive(Clone, Debug)]
pub struct GenTrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: ConditionalBigramLm,
    pub history: Vec<GenEpochRecord>,
    pub meta: GenCheckpointMeta,
}

impl GenTrainOutcome {
    pub fn handle(&self) -> DecoderHandle {
        DecoderHandle::new(self.model.clone()).expect("vocabulary specials are distinct")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.model.save(dir)?;
        artifact::write_json(&dir.join(METADATA_FILE), &self.meta)
    }

    pub fn load(dir: &Path) -> Result<(DecoderHandle, GenCheckpointMeta)> {
        let meta: GenCheckpointMeta = artifact::read_json(&dir.join(METADATA_FILE))?;
        if meta.kind != BIGRAM_KIND {
            return Err(Error::backend(&meta.backend_id, format!("cannot load checkpoint kind {:?}", meta.kind)));
        }
        let model = ConditionalBigramLm::load(dir, meta.backend_id.clone())?;
        Ok((DecoderHandle::new(model)?, meta))
    }
}

/// Word vocabulary over utterances and profiles of `records`.
pub fn build_vocab(records: &[PgdRecord], config: &GenTrainConfig) -> Vocab {
    let texts = records
        .iter()
        .flat_map(|r| std::iter::once(r.utterance.as_str()).chain(r.profiles.iter().map(|p| p.text.as_str())));
    Vocab::build_word(texts, config.min_count, config.max_vocab)
}

fn format_records(records: &[PgdRecord], vocab: &Vocab) -> Result<Vec<FormattedExample>> {
    records
        .iter()
        .map(|r| format_example(&r.utterance, &r.profile_texts(), vocab))
        .collect()
}

fn mean_loss(model: &ConditionalBigramLm, examples: &[FormattedExample], reduction: Reduction) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += model.example_loss(ex, reduction)?;
    }
    Ok(total / examples.len() as f64)
}

/// Trains one decoder under the masked profile-generation loss with Adam and
/// early stopping on validation loss. The vocabulary is built from `train`.
pub fn train_generator(
    train: &[PgdRecord],
    valid: &[PgdRecord],
    config: &GenTrainConfig,
    seed: u64,
) -> Result<GenTrainOutcome> {
    config.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::InvalidInput("training and validation sets must be non-empty".into()));
    }
    let spec = model_spec(&config.backend_id).expect("validated");
    if !spec.available {
        return Err(Error::backend(
            spec.id,
            format!("no local weights for this {}M-parameter decoder; use {TINY_BACKEND}", spec.params_millions),
        ));
    }

    let vocab = build_vocab(train, config);
    let train_x = format_records(train, &vocab)?;
    let valid_x = format_records(valid, &vocab)?;
    let mut model = ConditionalBigramLm::new(config.backend_id.clone(), vocab);
    let row_len = model.row_len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut adam = Adam::new(model.params().len(), config.learning_rate);
    let mut grads = vec![0.0; model.params().len()];
    let mut touched = BTreeSet::new();
    let mut stopper = EarlyStopping::new(Direction::Minimize, config.early_stop_patience);
    let mut best = model.clone();
    let mut history = Vec::new();
    let mut step = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let batches: Vec<&[usize]> = order.chunks(config.batch_size).collect();
        let mut epoch_loss = 0.0;
        for (b, batch) in batches.iter().enumerate() {
            let scale = 1.0 / (batch.len() * config.grad_accum_steps) as f64;
            for &i in *batch {
                let loss = model.accumulate_grad(&train_x[i], config.reduction, scale, &mut grads, &mut touched)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, step, loss });
                }
                epoch_loss += loss;
            }
            let boundary = (b + 1) % config.grad_accum_steps == 0 || b + 1 == batches.len();
            if !boundary {
                continue;
            }
            step += 1;
            let indices: Vec<usize> = touched.iter().flat_map(|r| r * row_len..(r + 1) * row_len).collect();
            adam.step_sparse(model.params_mut(), &grads, &indices);
            for &i in &indices {
                grads[i] = 0.0;
            }
            touched.clear();
            if indices.iter().any(|&i| !model.params()[i].is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    loss: f64::NAN,
                });
            }
        }

        let train_loss = epoch_loss / train_x.len() as f64;
        let valid_loss = mean_loss(&model, &valid_x, config.reduction)?;
        if !valid_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                step,
                loss: valid_loss,
            });
        }
        let obs = stopper.observe(epoch, valid_loss);
        if obs.improved {
            best = model.clone();
        }
        log::info!("generator epoch {epoch} seed {seed}: train loss {train_loss:.4}, valid loss {valid_loss:.4}");
        history.push(GenEpochRecord {
            epoch,
            train_loss,
            valid_loss,
            improved: obs.improved,
        });
        if obs.stop {
            break;
        }
    }

    let meta = GenCheckpointMeta {
        backend_id: config.backend_id.clone(),
        kind: BIGRAM_KIND.into(),
        config: config.clone(),
        seed,
        best_valid_loss: stopper.best().unwrap_or(f64::INFINITY),
        best_epoch: stopper.best_epoch(),
        epochs_run: history.len(),
        template: TEMPLATE.into(),
        config_hash: config_hash(config),
    };
    Ok(GenTrainOutcome {
        model: best,
        history,
        meta,
    })
}

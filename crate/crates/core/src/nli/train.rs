use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{LinearNli, NliCheckpointMeta, DEFAULT_BUCKETS};
use super::{ClassifierHandle, ProbSimplex3};
use crate::artifact::config_hash;
use crate::corpus::NliExample;
use crate::train::{Adam, Direction, EarlyStopping};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NliTrainConfig {
    pub backend_id: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
    pub hash_buckets: usize,
}

impl Default for NliTrainConfig {
    fn default() -> Self {
        NliTrainConfig {
            backend_id: "linear-nli".into(),
            learning_rate: 5e-5,
            batch_size: 32,
            max_epochs: 20,
            early_stop_patience: 5,
            seed: 0,
            hash_buckets: DEFAULT_BUCKETS,
        }
    }
}

impl NliTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return Err(Error::InvalidConfig(
                "batch size, max epochs and patience must be positive".into(),
            ));
        }
        if self.early_stop_patience > self.max_epochs {
            return Err(Error::InvalidConfig("patience exceeds max epochs".into()));
        }
        if self.backend_id.is_empty() || self.backend_id.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!("bad backend id {:?}", self.backend_id)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
    pub improved: bool,
}

#[derive(Clone, Debug)]
pub struct NliTrainOutcome {
    /// Weights from the epoch with the best validation accuracy.
    pub model: LinearNli,
    pub history: Vec<EpochRecord>,
    pub meta: NliCheckpointMeta,
}

impl NliTrainOutcome {
    pub fn handle(&self) -> ClassifierHandle {
        ClassifierHandle::new(self.model.clone())
    }
}

/// Trains the linear head by minimizing cross-entropy with Adam.
pub fn train_nli(train: &[NliExample], valid: &[NliExample], config: &NliTrainConfig) -> Result<NliTrainOutcome> {
    config.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::InvalidInput("training and validation sets must be non-empty".into()));
    }

    let mut model = LinearNli::new(config.backend_id.clone(), config.hash_buckets);
    let dim = model.dim();
    let featurize = |set: &[NliExample], m: &LinearNli| -> Vec<Vec<(usize, f64)>> {
        set.iter().map(|e| m.features(&e.premise, &e.hypothesis)).collect()
    };
    let train_x = featurize(train, &model);
    let valid_x = featurize(valid, &model);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = Adam::new(model.weights.len(), config.learning_rate);
    let mut grads = vec![0.0; model.weights.len()];
    let mut stopper = EarlyStopping::new(Direction::Maximize, config.early_stop_patience);
    let mut best = model.clone();
    let mut history = Vec::new();
    let mut step = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            step += 1;
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                let probs = ProbSimplex3::from_logits(model.logits(&train_x[i])).as_array();
                let gold = train[i].label.index();
                batch_loss -= probs[gold].ln();
                for (k, pk) in probs.iter().enumerate() {
                    let delta = (pk - if k == gold { 1.0 } else { 0.0 }) / batch.len() as f64;
                    for (f, x) in &train_x[i] {
                        grads[k * dim + f] += delta * x;
                    }
                }
            }
            batch_loss /= batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss * batch.len() as f64;
            adam.step(&mut model.weights, &grads);
            if model.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    loss: f64::NAN,
                });
            }
        }

        let correct = valid_x
            .iter()
            .zip(valid)
            .filter(|(x, e)| ProbSimplex3::from_logits(model.logits(x)).argmax() == e.label)
            .count();
        let valid_accuracy = correct as f64 / valid.len() as f64;
        let obs = stopper.observe(epoch, valid_accuracy);
        if obs.improved {
            best = model.clone();
        }
        log::info!(
            "nli epoch {epoch}: train loss {:.4}, valid accuracy {valid_accuracy:.4}",
            epoch_loss / train.len() as f64
        );
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            valid_accuracy,
            improved: obs.improved,
        });
        if obs.stop {
            break;
        }
    }

    let meta = NliCheckpointMeta {
        backend_id: config.backend_id.clone(),
        kind: "linear-nli".into(),
        config: config.clone(),
        seed: config.seed,
        best_valid_accuracy: stopper.best().unwrap_or(0.0),
        best_epoch: stopper.best_epoch(),
        epochs_run: history.len(),
        config_hash: config_hash(config),
    };
    Ok(NliTrainOutcome {
        model: best,
        history,
        meta,
    })
}

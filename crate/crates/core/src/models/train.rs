//! Mini-batch Adam training for the CNN+LSTM.
//!
//! Each epoch builds a stream in which the oversampled types appear
//! `oversample_factor` times, shuffles it, and walks it in batches. A batch
//! gradient is the sum over fixed 8-example chunks, each summed in order,
//! and the chunk sums are added in chunk order. Dropout masks come from a
//! per-position ChaCha8 stream. Results are therefore bitwise identical
//! whatever the thread count.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cnnlstm::{CnnLstmModel, ExampleMasks};
use super::restricted_argmax;
use crate::corpus::{ConceptType, TypeSet};
use crate::error::{Error, Result};
use crate::eval::{confusion, micro_average};
use crate::features::EncodedExample;
use crate::nn::rng::substream;
use crate::nn::{adam_step, AdamConfig, AdamState, ParamStore};

const CHUNK: usize = 8;
const MASK_STREAM_SALT: u64 = 0x6d61_736b_7321;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of the training split held out for early stopping.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub oversample_factor: usize,
    pub oversample_types: Vec<ConceptType>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            seed: 42,
            validation_fraction: 0.1,
            patience: 3,
            oversample_factor: 10,
            oversample_types: vec![ConceptType::Mutation, ConceptType::CellLine],
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.oversample_factor == 0 {
            return Err(Error::Config("batch_size and oversample_factor must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!("validation_fraction {} outside [0, 1)", self.validation_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch stream (with dropout).
    pub train_loss: f64,
    pub val_micro_f1: Option<f64>,
    pub stream_len: usize,
    /// Stream occurrences per type, canonical order.
    pub stream_counts: [usize; ConceptType::COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_size: usize,
    pub validation_size: usize,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Training indices with every example of an oversampled type repeated
/// `factor` times in place, in input order.
pub fn oversampled_stream(indices: &[usize], labels: &[usize], factor: usize, types: TypeSet) -> Vec<usize> {
    let mut out = Vec::new();
    for &i in indices {
        let rare = ConceptType::from_index(labels[i]).is_some_and(|t| types.contains(t));
        let n = if rare { factor } else { 1 };
        out.extend(std::iter::repeat_n(i, n));
    }
    out
}

pub fn stream_counts(stream: &[usize], labels: &[usize]) -> [usize; ConceptType::COUNT] {
    let mut c = [0; ConceptType::COUNT];
    for &i in stream {
        c[labels[i]] += 1;
    }
    c
}

/// Seeded split of `0..n` into (train, validation) with
/// `ceil(fraction * n)` validation items, always leaving one for training.
pub fn validation_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    if fraction <= 0.0 || n < 2 {
        return (idx, Vec::new());
    }
    idx.shuffle(&mut substream(seed, u64::MAX));
    let k = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let mut val = idx.split_off(n - k);
    idx.sort_unstable();
    val.sort_unstable();
    (idx, val)
}

/// Micro-F1 (accuracy) of `model` on `examples`.
pub fn micro_f1(model: &CnnLstmModel, examples: &[&EncodedExample], restrict: bool) -> Result<f64> {
    let preds = examples
        .par_iter()
        .map(|ex| Ok(restricted_argmax(&model.probs(ex)?, ex.candidates, restrict)))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<ConceptType> =
        examples.iter().map(|ex| ConceptType::from_index(ex.label).expect("label checked")).collect();
    Ok(micro_average(&confusion(&gold, &preds)?).f1)
}

fn batch_gradient(
    model: &CnnLstmModel,
    examples: &[EncodedExample],
    batch: &[usize],
    first_position: u64,
    mask_seed: u64,
) -> Result<(ParamStore, f64)> {
    let parts = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut g = model.params.zeros_like();
            let mut loss = 0.0;
            for (k, &i) in chunk.iter().enumerate() {
                let position = first_position + (ci * CHUNK + k) as u64;
                let masks = ExampleMasks::sample(&model.config, &mut substream(mask_seed, position));
                loss += model.loss_and_grad(&examples[i], Some(&masks), &mut g)?;
            }
            Ok((g, loss))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iter = parts.into_iter();
    let (mut grad, mut loss) = iter.next().expect("non-empty batch");
    for (g, l) in iter {
        grad.add_assign(&g);
        loss += l;
    }
    Ok((grad, loss))
}

/// Trains `model` in place and returns the history. With a validation
/// slice, the parameters of the best validation epoch are restored at the
/// end and training stops after `patience` epochs without improvement.
pub fn train_cnnlstm(
    model: &mut CnnLstmModel,
    examples: &[EncodedExample],
    config: &TrainConfig,
    restrict: bool,
) -> Result<TrainHistory> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidInput("empty training split".into()));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    if let Some(l) = labels.iter().find(|l| **l >= ConceptType::COUNT) {
        return Err(Error::InvalidInput(format!("label {l} out of range")));
    }
    let (train_idx, val_idx) = validation_split(examples.len(), config.validation_fraction, config.seed);
    let val: Vec<&EncodedExample> = val_idx.iter().map(|&i| &examples[i]).collect();
    let types: TypeSet = config.oversample_types.iter().copied().collect();
    let base_stream = oversampled_stream(&train_idx, &labels, config.oversample_factor, types);
    let mask_seed = config.seed ^ MASK_STREAM_SALT;

    let mut adam = AdamState::new(model.params.tensors());
    let mut history = TrainHistory {
        train_size: train_idx.len(),
        validation_size: val_idx.len(),
        epochs: Vec::new(),
        best_epoch: None,
        stopped_early: false,
    };
    let mut best: Option<(f64, ParamStore)> = None;
    let mut since_best = 0;

    for epoch in 0..config.epochs {
        let mut stream = base_stream.clone();
        stream.shuffle(&mut substream(config.seed, epoch as u64));
        let mut total_loss = 0.0;
        for (b, batch) in stream.chunks(config.batch_size).enumerate() {
            let first = ((epoch as u64) << 32) + (b * config.batch_size) as u64;
            let (mut grad, loss) = batch_gradient(model, examples, batch, first, mask_seed)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss {loss} in epoch {}, batch {b}", epoch + 1)));
            }
            total_loss += loss;
            grad.scale(1.0 / batch.len() as f64);
            adam_step(model.params.tensors_mut(), grad.tensors(), &mut adam, &config.adam);
        }
        let val_f1 = if val.is_empty() { None } else { Some(micro_f1(model, &val, restrict)?) };
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: total_loss / stream.len() as f64,
            val_micro_f1: val_f1,
            stream_len: stream.len(),
            stream_counts: stream_counts(&stream, &labels),
        };
        log::info!(
            "epoch {}: loss {:.6}, validation micro-F1 {}",
            record.epoch,
            record.train_loss,
            val_f1.map_or("n/a".to_string(), |f| format!("{f:.4}"))
        );
        history.epochs.push(record);
        if let Some(f1) = val_f1 {
            if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                best = Some((f1, model.params.clone()));
                history.best_epoch = Some(epoch + 1);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    history.stopped_early = epoch + 1 < config.epochs;
                    break;
                }
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    } else {
        history.best_epoch = history.epochs.last().map(|e| e.epoch);
    }
    Ok(history)
}

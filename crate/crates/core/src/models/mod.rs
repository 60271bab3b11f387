//! The three classifiers (priority rule, maximum entropy, CNN+LSTM), their
//! training, prediction with optional candidate restriction, and
//! checkpoints.

pub mod cnnlstm;
pub mod gradsuite;
pub mod maxent;
pub mod reference;
pub mod rule;
pub mod train;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cnnlstm::{CnnLstmConfig, CnnLstmModel, ExampleMasks};
pub use maxent::{maxent_loss_and_grad, maxent_train, sparse_features, MaxEntConfig, MaxEntModel, SparseExample};
pub use rule::{rule_predict, PriorityOrder};
pub use train::{
    oversampled_stream, stream_counts, train_cnnlstm, validation_split, EpochRecord, TrainConfig, TrainHistory,
};

use crate::corpus::{ConceptType, TypeSet};
use crate::error::{Error, Result};
use crate::features::EncodedExample;
use crate::nn::{read_checkpoint, write_checkpoint, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rule,
    MaxEnt,
    CnnLstm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rule => "rule",
            ModelKind::MaxEnt => "maxent",
            ModelKind::CnnLstm => "cnnlstm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rule" => Ok(ModelKind::Rule),
            "maxent" => Ok(ModelKind::MaxEnt),
            "cnnlstm" | "cnn+lstm" => Ok(ModelKind::CnnLstm),
            _ => Err(Error::Config(format!("unknown model {s:?}"))),
        }
    }
}

/// Argmax of `probs`, over `candidates` only when `restrict` is set and the
/// set is non-empty. Ties go to the earliest canonical type.
pub fn restricted_argmax(probs: &[f64], candidates: TypeSet, restrict: bool) -> ConceptType {
    let allowed = if restrict && !candidates.is_empty() { candidates } else { TypeSet::FULL };
    let mut best: Option<(ConceptType, f64)> = None;
    for t in allowed.iter() {
        let p = probs[t.index()];
        if best.is_none_or(|(_, b)| p > b) {
            best = Some((t, p));
        }
    }
    best.expect("non-empty type set").0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: ConceptType,
    /// Canonical type order.
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Rule(PriorityOrder),
    MaxEnt(MaxEntModel),
    CnnLstm(CnnLstmModel),
}

#[derive(Serialize, Deserialize)]
struct MaxEntHeader {
    word_vocab_size: usize,
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Rule(_) => ModelKind::Rule,
            Classifier::MaxEnt(_) => ModelKind::MaxEnt,
            Classifier::CnnLstm(_) => ModelKind::CnnLstm,
        }
    }

    /// The rule baseline always restricts to the candidates and reports a
    /// one-hot distribution.
    pub fn predict(&self, ex: &EncodedExample, restrict: bool) -> Result<Prediction> {
        let probs = match self {
            Classifier::Rule(order) => {
                let t = rule_predict(ex.candidates, order)?;
                let mut p = vec![0.0; ConceptType::COUNT];
                p[t.index()] = 1.0;
                return Ok(Prediction { predicted: t, probs: p });
            }
            Classifier::MaxEnt(m) => m.probs(ex),
            Classifier::CnnLstm(m) => m.probs(ex)?,
        };
        if probs.len() != ConceptType::COUNT {
            return Err(Error::Shape(format!("model has {} classes, expected 6", probs.len())));
        }
        Ok(Prediction { predicted: restricted_argmax(&probs, ex.candidates, restrict), probs })
    }

    pub fn save<W: Write>(&self, writer: W, vocab_hash: &str) -> Result<()> {
        match self {
            Classifier::Rule(order) => write_checkpoint(writer, "rule", order, vocab_hash, &ParamStore::new()),
            Classifier::MaxEnt(m) => {
                let mut p = ParamStore::new();
                p.push("weights", m.weights.clone());
                p.push("bias", m.bias.clone());
                let header = MaxEntHeader { word_vocab_size: m.word_vocab_size };
                write_checkpoint(writer, "maxent", &header, vocab_hash, &p)
            }
            Classifier::CnnLstm(m) => write_checkpoint(writer, "cnnlstm", &m.config, vocab_hash, &m.params),
        }
    }

    /// Loads a checkpoint written by [`Classifier::save`]; the vocabulary
    /// hash must match `vocab_hash`.
    pub fn load<R: Read>(reader: R, vocab_hash: &str) -> Result<Self> {
        let (header, params) = read_checkpoint(reader)?;
        if header.vocab_hash != vocab_hash {
            return Err(Error::Checkpoint(format!(
                "checkpoint vocabulary {} does not match {}",
                header.vocab_hash, vocab_hash
            )));
        }
        let bad = |e: serde_json::Error| Error::Checkpoint(format!("bad config: {e}"));
        match header.kind.as_str() {
            "rule" => Ok(Classifier::Rule(serde_json::from_value(header.config).map_err(bad)?)),
            "maxent" => {
                let h: MaxEntHeader = serde_json::from_value(header.config).map_err(bad)?;
                let (w, b) = match (params.by_name("weights"), params.by_name("bias")) {
                    (Some(w), Some(b)) if w.shape().len() == 2 && b.shape() == [w.shape()[1]] => (w.clone(), b.clone()),
                    _ => return Err(Error::Checkpoint("maxent tensors missing or misshapen".into())),
                };
                Ok(Classifier::MaxEnt(MaxEntModel { weights: w, bias: b, word_vocab_size: h.word_vocab_size }))
            }
            "cnnlstm" => {
                let config: CnnLstmConfig = serde_json::from_value(header.config).map_err(bad)?;
                Ok(Classifier::CnnLstm(CnnLstmModel::from_params(config, params)?))
            }
            other => Err(Error::Checkpoint(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Zero-weight MaxEnt model, handy for tests.
pub fn empty_maxent(num_features: usize, word_vocab_size: usize) -> MaxEntModel {
    MaxEntModel {
        weights: Tensor::zeros(&[num_features.max(1), ConceptType::COUNT]),
        bias: Tensor::zeros(&[ConceptType::COUNT]),
        word_vocab_size,
    }
}

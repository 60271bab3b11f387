//! Multinomial logistic regression over binary indicators: every word id in
//! either context window and every feature-token id (offset past the word
//! vocabulary).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EncodedExample, PAD};
use crate::nn::dense::softmax;
use crate::nn::ops::axpy;
use crate::nn::rng::substream;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxEntConfig {
    /// L2 strength on the weights (not the bias).
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        MaxEntConfig { l2: 1e-4, lr: 0.5, epochs: 20, batch_size: 32 }
    }
}

/// Active indicator indices and class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseExample {
    pub features: Vec<u32>,
    pub label: usize,
}

/// Sorted, deduplicated indicator set of an encoded example.
pub fn sparse_features(example: &EncodedExample, word_vocab_size: usize) -> Vec<u32> {
    let mut f: Vec<u32> = example
        .before_ids
        .iter()
        .chain(&example.after_ids)
        .copied()
        .filter(|id| *id != PAD)
        .chain(example.feature_ids.iter().filter(|id| **id != PAD).map(|id| id + word_vocab_size as u32))
        .collect();
    f.sort_unstable();
    f.dedup();
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    /// `[F, C]`
    pub weights: Tensor,
    pub bias: Tensor,
    pub word_vocab_size: usize,
}

impl MaxEntModel {
    pub fn zeros(num_features: usize, num_classes: usize, word_vocab_size: usize) -> Self {
        MaxEntModel {
            weights: Tensor::zeros(&[num_features, num_classes]),
            bias: Tensor::zeros(&[num_classes]),
            word_vocab_size,
        }
    }

    pub fn num_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    /// Indicators beyond the weight matrix (unseen at training time) are
    /// ignored.
    pub fn probs_sparse(&self, features: &[u32]) -> Vec<f64> {
        let mut logits = self.bias.data().to_vec();
        for &f in features {
            if (f as usize) < self.num_features() {
                axpy(1.0, self.weights.row(f as usize), &mut logits);
            }
        }
        softmax(&logits)
    }

    pub fn probs(&self, example: &EncodedExample) -> Vec<f64> {
        self.probs_sparse(&sparse_features(example, self.word_vocab_size))
    }
}

/// Mean negative log-likelihood plus `l2/2 * |W|^2`, with its gradients.
pub fn maxent_loss_and_grad(model: &MaxEntModel, examples: &[SparseExample], l2: f64) -> (f64, Tensor, Tensor) {
    let mut dw = Tensor::zeros(model.weights.shape());
    let mut db = Tensor::zeros(model.bias.shape());
    let n = examples.len().max(1) as f64;
    let mut loss = 0.0;
    for ex in examples {
        let mut g = model.probs_sparse(&ex.features);
        loss -= g[ex.label].ln();
        g[ex.label] -= 1.0;
        for v in &mut g {
            *v /= n;
        }
        axpy(1.0, &g, db.data_mut());
        for &f in &ex.features {
            axpy(1.0, &g, dw.row_mut(f as usize));
        }
    }
    loss /= n;
    let w = model.weights.data();
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    axpy(l2, w, dw.data_mut());
    (loss, dw, db)
}

/// Mini-batch gradient descent. Returns the model and the full-batch loss
/// after each epoch.
pub fn maxent_train(
    examples: &[SparseExample],
    num_features: usize,
    num_classes: usize,
    word_vocab_size: usize,
    config: &MaxEntConfig,
    seed: u64,
) -> Result<(MaxEntModel, Vec<f64>)> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("no training examples".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    if let Some(ex) =
        examples.iter().find(|e| e.label >= num_classes || e.features.iter().any(|f| *f as usize >= num_features))
    {
        return Err(Error::InvalidInput(format!("example out of range: {ex:?}")));
    }
    let mut model = MaxEntModel::zeros(num_features, num_classes, word_vocab_size);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut substream(seed, epoch as u64));
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let (_, dw, db) = maxent_loss_and_grad(&model, &batch, config.l2);
            axpy(-config.lr, dw.data(), model.weights.data_mut());
            axpy(-config.lr, db.data(), model.bias.data_mut());
        }
        let (loss, _, _) = maxent_loss_and_grad(&model, examples, config.l2);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("maxent loss is {loss} after epoch {}", epoch + 1)));
        }
        log::info!("maxent epoch {}: loss {loss:.6}", epoch + 1);
        losses.push(loss);
    }
    Ok((model, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, DEFAULT_STEP};
    use crate::nn::rng::{seeded, uniform_fill};

    fn ex(features: &[u32], label: usize) -> SparseExample {
        SparseExample { features: features.to_vec(), label }
    }

    #[test]
    fn separable_two_class() {
        let data: Vec<_> = (0..20).map(|i| ex(&[i % 2, 2], (i % 2) as usize)).collect();
        let cfg = MaxEntConfig { epochs: 30, ..Default::default() };
        let (m, _) = maxent_train(&data, 3, 2, 0, &cfg, 1).unwrap();
        for e in &data {
            let p = m.probs_sparse(&e.features);
            assert!(p[e.label] > 0.5);
        }
    }

    #[test]
    fn strong_l2_gives_uniform() {
        let data: Vec<_> = (0..20).map(|i| ex(&[i % 3], (i % 3) as usize)).collect();
        let cfg = MaxEntConfig { l2: 1e4, lr: 1e-5, epochs: 50, batch_size: 4 };
        let (m, _) = maxent_train(&data, 3, 3, 0, &cfg, 1).unwrap();
        assert!(m.weights.data().iter().all(|w| w.abs() < 1e-3));
        // Balanced labels keep the bias near zero too.
        for p in m.probs_sparse(&[0]) {
            assert!((p - 1.0 / 3.0).abs() < 1e-2, "{p}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = MaxEntModel::zeros(5, 3, 0);
        let mut rng = seeded(4);
        uniform_fill(&mut rng, m.weights.data_mut(), 1.0);
        uniform_fill(&mut rng, m.bias.data_mut(), 1.0);
        let data = vec![ex(&[0, 2], 0), ex(&[1, 3, 4], 2), ex(&[2, 4], 1), ex(&[0, 1, 2, 3, 4], 1)];
        let (_, dw, db) = maxent_loss_and_grad(&m, &data, 0.1);
        let e = gradient_check(
            |v| {
                let mut mm = m.clone();
                mm.weights.data_mut().copy_from_slice(v);
                maxent_loss_and_grad(&mm, &data, 0.1).0
            },
            m.weights.data(),
            dw.data(),
            DEFAULT_STEP,
        );
        assert!(e < 1e-6, "{e}");
        let e = gradient_check(
            |v| {
                let mut mm = m.clone();
                mm.bias.data_mut().copy_from_slice(v);
                maxent_loss_and_grad(&mm, &data, 0.1).0
            },
            m.bias.data(),
            db.data(),
            DEFAULT_STEP,
        );
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn loss_is_non_increasing_at_small_lr() {
        let data: Vec<_> = (0..60u32).map(|i| ex(&[i % 7, 7 + i % 3], (i % 4) as usize)).collect();
        let cfg = MaxEntConfig { lr: 0.05, epochs: 15, ..Default::default() };
        let (_, losses) = maxent_train(&data, 10, 4, 0, &cfg, 3).unwrap();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{losses:?}");
        }
    }

    #[test]
    fn non_finite_loss_aborts() {
        // Unbalanced labels give a non-zero first step, which the huge rate blows up.
        let data = vec![ex(&[0], 0), ex(&[0], 0), ex(&[0], 1)];
        let cfg = MaxEntConfig { lr: 1e308, l2: 1e10, epochs: 3, batch_size: 2 };
        assert!(matches!(maxent_train(&data, 1, 2, 0, &cfg, 1), Err(Error::NonFinite(_))));
    }

    #[test]
    fn indicator_layout() {
        let e = EncodedExample {
            before_ids: vec![0, 0, 5, 3],
            after_ids: vec![3, 7, 0, 0],
            feature_ids: vec![2, 4, 0],
            label: 1,
            candidates: Default::default(),
        };
        assert_eq!(sparse_features(&e, 10), vec![3, 5, 7, 12, 14]);
    }
}

//! CNN+LSTM mention classifier.
//!
//! ```text
//! feature ids -> feature embedding -> conv1 -> maxpool -> dropout -> conv2 -> global max --+
//! before ids  -> word embedding -> forward LSTM (last state) ------------------------------+-> ReLU -> dense -> softmax
//! after ids   -> word embedding -> reversed -> LSTM (last state) --------------------------+
//! ```
//!
//! Both LSTMs end next to the mention. The convolutions have no activation
//! of their own; the only nonlinearity before the output is the ReLU on the
//! concatenation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, EncodedExample, PAD};
use crate::nn::dense::{dense_softmax_xent, dense_softmax_xent_backward, SoftmaxOutput};
use crate::nn::dropout::{check_rate, dropout_mask};
use crate::nn::lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmMasks, LstmWeights};
use crate::nn::pool::{global_maxpool_backward, global_maxpool_forward, maxpool1d_backward, maxpool1d_forward};
use crate::nn::rng::{seeded, uniform_fill, Rng};
use crate::nn::{conv1d_backward, conv1d_forward, embedding_backward, embedding_forward, ParamStore, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnnLstmConfig {
    pub word_dim: usize,
    pub feature_dim: usize,
    pub conv1_filters: usize,
    pub conv1_kernel: usize,
    pub pool_size: usize,
    pub conv_dropout: f64,
    pub conv2_filters: usize,
    pub conv2_kernel: usize,
    pub lstm_units: usize,
    pub lstm_dropout: f64,
    pub recurrent_dropout: f64,
    /// Must equal `conv2_filters + 2 * lstm_units`.
    pub concat_units: usize,
    pub num_classes: usize,
    pub context_len: usize,
    pub feature_len: usize,
    /// Feature embeddings start in U[-feature_init, feature_init].
    pub feature_init: f64,
}

impl Default for CnnLstmConfig {
    fn default() -> Self {
        CnnLstmConfig {
            word_dim: 200,
            feature_dim: 200,
            conv1_filters: 200,
            conv1_kernel: 5,
            pool_size: 5,
            conv_dropout: 0.2,
            conv2_filters: 1000,
            conv2_kernel: 5,
            lstm_units: 128,
            lstm_dropout: 0.2,
            recurrent_dropout: 0.2,
            concat_units: 1256,
            num_classes: 6,
            context_len: 21,
            feature_len: 30,
            feature_init: 0.05,
        }
    }
}

impl CnnLstmConfig {
    /// Small network for gradient checks.
    pub fn tiny() -> Self {
        CnnLstmConfig {
            word_dim: 4,
            feature_dim: 4,
            conv1_filters: 8,
            conv1_kernel: 2,
            pool_size: 2,
            conv2_filters: 8,
            conv2_kernel: 2,
            lstm_units: 3,
            concat_units: 14,
            context_len: 8,
            feature_len: 6,
            ..Default::default()
        }
    }

    /// Rows left after conv1 and pooling.
    pub fn pooled_len(&self) -> usize {
        (self.feature_len + 1).saturating_sub(self.conv1_kernel) / self.pool_size.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_dim", self.word_dim),
            ("feature_dim", self.feature_dim),
            ("conv1_filters", self.conv1_filters),
            ("conv1_kernel", self.conv1_kernel),
            ("pool_size", self.pool_size),
            ("conv2_filters", self.conv2_filters),
            ("conv2_kernel", self.conv2_kernel),
            ("lstm_units", self.lstm_units),
            ("num_classes", self.num_classes),
            ("context_len", self.context_len),
            ("feature_len", self.feature_len),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.concat_units != self.conv2_filters + 2 * self.lstm_units {
            return Err(Error::Config(format!(
                "concat_units {} != conv2_filters {} + 2 * lstm_units {}",
                self.concat_units, self.conv2_filters, self.lstm_units
            )));
        }
        if self.feature_len < self.conv1_kernel || self.pooled_len() < self.conv2_kernel {
            return Err(Error::Config(format!(
                "feature_len {} too short for conv1 kernel {}, pool {} and conv2 kernel {}",
                self.feature_len, self.conv1_kernel, self.pool_size, self.conv2_kernel
            )));
        }
        for r in [self.conv_dropout, self.lstm_dropout, self.recurrent_dropout] {
            check_rate(r)?;
        }
        if !(self.feature_init.is_finite() && self.feature_init >= 0.0) {
            return Err(Error::Config("feature_init must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Closed-form number of scalar parameters.
    pub fn param_count(&self, word_vocab: usize, feature_vocab: usize) -> usize {
        let lstm = self.word_dim * 4 * self.lstm_units + self.lstm_units * 4 * self.lstm_units + 4 * self.lstm_units;
        word_vocab * self.word_dim
            + feature_vocab * self.feature_dim
            + self.conv1_kernel * self.feature_dim * self.conv1_filters
            + self.conv1_filters
            + self.conv2_kernel * self.conv1_filters * self.conv2_filters
            + self.conv2_filters
            + 2 * lstm
            + self.concat_units * self.num_classes
            + self.num_classes
    }

    fn shapes(&self, word_vocab: usize, feature_vocab: usize) -> Vec<(&'static str, Vec<usize>)> {
        let u4 = 4 * self.lstm_units;
        vec![
            ("word_embedding", vec![word_vocab, self.word_dim]),
            ("feature_embedding", vec![feature_vocab, self.feature_dim]),
            ("conv1.kernels", vec![self.conv1_kernel, self.feature_dim, self.conv1_filters]),
            ("conv1.bias", vec![self.conv1_filters]),
            ("conv2.kernels", vec![self.conv2_kernel, self.conv1_filters, self.conv2_filters]),
            ("conv2.bias", vec![self.conv2_filters]),
            ("lstm_forward.w_x", vec![self.word_dim, u4]),
            ("lstm_forward.w_h", vec![self.lstm_units, u4]),
            ("lstm_forward.b", vec![u4]),
            ("lstm_backward.w_x", vec![self.word_dim, u4]),
            ("lstm_backward.w_h", vec![self.lstm_units, u4]),
            ("lstm_backward.b", vec![u4]),
            ("output.w", vec![self.concat_units, self.num_classes]),
            ("output.b", vec![self.num_classes]),
        ]
    }
}

const WORD_EMB: usize = 0;
const FEAT_EMB: usize = 1;
const CONV1_K: usize = 2;
const CONV1_B: usize = 3;
const CONV2_K: usize = 4;
const CONV2_B: usize = 5;
const FWD: usize = 6;
const BWD: usize = 9;
const OUT_W: usize = 12;
const OUT_B: usize = 13;

/// Dropout masks for one training example.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleMasks {
    /// Over the pooled conv1 output, `[pooled_len * conv1_filters]`.
    pub conv: Vec<f64>,
    pub forward: LstmMasks,
    pub backward: LstmMasks,
}

impl ExampleMasks {
    pub fn sample(config: &CnnLstmConfig, rng: &mut Rng) -> Self {
        let lstm = |rng: &mut Rng| LstmMasks {
            input: dropout_mask(config.word_dim, config.lstm_dropout, rng),
            recurrent: dropout_mask(config.lstm_units, config.recurrent_dropout, rng),
        };
        let conv = dropout_mask(config.pooled_len() * config.conv1_filters, config.conv_dropout, rng);
        let forward = lstm(rng);
        let backward = lstm(rng);
        ExampleMasks { conv, forward, backward }
    }
}

struct Forward {
    feat_x: Tensor,
    c1: Tensor,
    pool1_argmax: Vec<usize>,
    d1: Tensor,
    c2: Tensor,
    pool2_argmax: Vec<usize>,
    after_rev: Vec<u32>,
    fwd: LstmCache,
    bwd: LstmCache,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    out: SoftmaxOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnLstmModel {
    pub config: CnnLstmConfig,
    pub params: ParamStore,
}

fn lecun_bound(fan_in: usize) -> f64 {
    (3.0 / fan_in as f64).sqrt()
}

impl CnnLstmModel {
    /// Fresh model. Word vectors are copied from `words`; everything else is
    /// drawn from a ChaCha8 stream seeded with `seed`.
    pub fn build(config: CnnLstmConfig, words: &EmbeddingTable, feature_vocab: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if words.dim() != config.word_dim {
            return Err(Error::Config(format!(
                "word vectors have dimension {}, config expects {}",
                words.dim(),
                config.word_dim
            )));
        }
        if words.rows() < 2 || feature_vocab < 2 {
            return Err(Error::Config("vocabularies must contain at least PAD and UNK".into()));
        }
        let mut rng = seeded(seed);
        let mut params = ParamStore::new();
        for (name, shape) in config.shapes(words.rows(), feature_vocab) {
            let mut t = Tensor::zeros(&shape);
            match name {
                "word_embedding" => t.data_mut().copy_from_slice(words.data()),
                "feature_embedding" => uniform_fill(&mut rng, t.data_mut(), config.feature_init),
                "conv1.kernels" => uniform_fill(&mut rng, t.data_mut(), lecun_bound(shape[0] * shape[1])),
                "conv2.kernels" => uniform_fill(&mut rng, t.data_mut(), lecun_bound(shape[0] * shape[1])),
                "lstm_forward.w_x" | "lstm_backward.w_x" | "lstm_forward.w_h" | "lstm_backward.w_h" | "output.w" => {
                    uniform_fill(&mut rng, t.data_mut(), lecun_bound(shape[0]))
                }
                "lstm_forward.b" | "lstm_backward.b" => {
                    let u = config.lstm_units;
                    t.data_mut()[u..2 * u].fill(1.0);
                }
                _ => {}
            }
            params.push(name, t);
        }
        params.get_mut(WORD_EMB).row_mut(PAD as usize).fill(0.0);
        params.get_mut(FEAT_EMB).row_mut(PAD as usize).fill(0.0);
        Ok(CnnLstmModel { config, params })
    }

    /// Rebuilds a model from stored tensors, checking names and shapes.
    pub fn from_params(config: CnnLstmConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        if params.len() != 14 {
            return Err(Error::Checkpoint(format!("expected 14 tensors, found {}", params.len())));
        }
        let (wv, fv) = (params.get(WORD_EMB).rows(), params.get(FEAT_EMB).rows());
        for ((name, shape), (got_name, got)) in
            config.shapes(wv, fv).iter().zip(params.names().iter().zip(params.tensors()))
        {
            if name != got_name || shape.as_slice() != got.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {got_name} {:?} does not match expected {name} {shape:?}",
                    got.shape()
                )));
            }
        }
        Ok(CnnLstmModel { config, params })
    }

    pub fn word_vocab_size(&self) -> usize {
        self.params.get(WORD_EMB).rows()
    }

    pub fn feature_vocab_size(&self) -> usize {
        self.params.get(FEAT_EMB).rows()
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    fn lstm(&self, base: usize) -> LstmWeights<'_> {
        LstmWeights { w_x: self.params.get(base), w_h: self.params.get(base + 1), b: self.params.get(base + 2) }
    }

    fn check_example(&self, ex: &EncodedExample) -> Result<()> {
        let c = &self.config;
        if ex.before_ids.len() != c.context_len
            || ex.after_ids.len() != c.context_len
            || ex.feature_ids.len() != c.feature_len
        {
            return Err(Error::Shape(format!(
                "example lengths {}/{}/{} do not match context_len {} and feature_len {}",
                ex.before_ids.len(),
                ex.after_ids.len(),
                ex.feature_ids.len(),
                c.context_len,
                c.feature_len
            )));
        }
        if ex.label >= c.num_classes {
            return Err(Error::InvalidInput(format!("label {} out of range", ex.label)));
        }
        Ok(())
    }

    fn forward(&self, ex: &EncodedExample, masks: Option<&ExampleMasks>) -> Result<Forward> {
        self.check_example(ex)?;
        let p = &self.params;
        let feat_x = embedding_forward(p.get(FEAT_EMB), &ex.feature_ids)?;
        let c1 = conv1d_forward(&feat_x, p.get(CONV1_K), p.get(CONV1_B))?;
        let (mut d1, pool1_argmax) = maxpool1d_forward(&c1, self.config.pool_size)?;
        if let Some(m) = masks {
            for (v, s) in d1.data_mut().iter_mut().zip(&m.conv) {
                *v *= s;
            }
        }
        let c2 = conv1d_forward(&d1, p.get(CONV2_K), p.get(CONV2_B))?;
        let (g2, pool2_argmax) = global_maxpool_forward(&c2)?;

        let before_x = embedding_forward(p.get(WORD_EMB), &ex.before_ids)?;
        let after_rev: Vec<u32> = ex.after_ids.iter().rev().copied().collect();
        let after_x = embedding_forward(p.get(WORD_EMB), &after_rev)?;
        let fwd = lstm_forward(&before_x, self.lstm(FWD), masks.map(|m| &m.forward))?;
        let bwd = lstm_forward(&after_x, self.lstm(BWD), masks.map(|m| &m.backward))?;

        let mut pre = Vec::with_capacity(self.config.concat_units);
        pre.extend_from_slice(g2.data());
        pre.extend_from_slice(fwd.last_hidden());
        pre.extend_from_slice(bwd.last_hidden());
        let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let out = dense_softmax_xent(&hidden, p.get(OUT_W), p.get(OUT_B), ex.label)?;
        Ok(Forward { feat_x, c1, pool1_argmax, d1, c2, pool2_argmax, after_rev, fwd, bwd, pre, hidden, out })
    }

    /// Class probabilities at inference (no dropout).
    pub fn probs(&self, ex: &EncodedExample) -> Result<Vec<f64>> {
        Ok(self.forward(ex, None)?.out.probs)
    }

    /// Cross-entropy loss of one example; its gradient is added to `grads`.
    pub fn loss_and_grad(
        &self,
        ex: &EncodedExample,
        masks: Option<&ExampleMasks>,
        grads: &mut ParamStore,
    ) -> Result<f64> {
        let f = self.forward(ex, masks)?;
        let c = &self.config;
        let p = &self.params;
        let [g_we, g_fe, g_k1, g_b1, g_k2, g_b2, g_fwx, g_fwh, g_fb, g_bwx, g_bwh, g_bb, g_ow, g_ob] =
            grads.tensors_mut()
        else {
            return Err(Error::Shape("gradient store does not match the model".into()));
        };

        let mut dh = vec![0.0; c.concat_units];
        dense_softmax_xent_backward(&f.hidden, p.get(OUT_W), &f.out.probs, ex.label, g_ow, g_ob, Some(&mut dh));
        for (d, v) in dh.iter_mut().zip(&f.pre) {
            if *v <= 0.0 {
                *d = 0.0;
            }
        }
        let (dg2, rest) = dh.split_at(c.conv2_filters);
        let (dhf, dhb) = rest.split_at(c.lstm_units);

        // Feature branch.
        let mut dc2 = Tensor::zeros(f.c2.shape());
        global_maxpool_backward(&f.pool2_argmax, &Tensor::from_vec(&[c.conv2_filters], dg2.to_vec())?, &mut dc2);
        let mut dd1 = Tensor::zeros(f.d1.shape());
        conv1d_backward(&f.d1, p.get(CONV2_K), &dc2, g_k2, g_b2, Some(&mut dd1), None);
        if let Some(m) = masks {
            for (v, s) in dd1.data_mut().iter_mut().zip(&m.conv) {
                *v *= s;
            }
        }
        let mut dc1 = Tensor::zeros(f.c1.shape());
        maxpool1d_backward(&f.pool1_argmax, &dd1, &mut dc1);
        let feat_rows: Vec<bool> = ex.feature_ids.iter().map(|id| *id != PAD).collect();
        let mut dfeat = Tensor::zeros(f.feat_x.shape());
        conv1d_backward(&f.feat_x, p.get(CONV1_K), &dc1, g_k1, g_b1, Some(&mut dfeat), Some(&feat_rows));
        embedding_backward(&ex.feature_ids, &dfeat, g_fe);

        // Context branches.
        let mut dx = Tensor::zeros(&[c.context_len, c.word_dim]);
        let rows: Vec<bool> = ex.before_ids.iter().map(|id| *id != PAD).collect();
        lstm_backward(
            &f.fwd,
            self.lstm(FWD),
            masks.map(|m| &m.forward),
            dhf,
            LstmGrads { w_x: g_fwx, w_h: g_fwh, b: g_fb },
            Some(&mut dx),
            Some(&rows),
        );
        embedding_backward(&ex.before_ids, &dx, g_we);
        let rows: Vec<bool> = f.after_rev.iter().map(|id| *id != PAD).collect();
        lstm_backward(
            &f.bwd,
            self.lstm(BWD),
            masks.map(|m| &m.backward),
            dhb,
            LstmGrads { w_x: g_bwx, w_h: g_bwh, b: g_bb },
            Some(&mut dx),
            Some(&rows),
        );
        embedding_backward(&f.after_rev, &dx, g_we);
        Ok(f.out.loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{synthesize_embeddings, VocabBuilder};

    fn words(n: usize, dim: usize) -> EmbeddingTable {
        let mut b = VocabBuilder::new();
        for i in 0..n {
            b.add_word(&format!("w{i}"));
            b.add_feature(&format!("f{i}"));
        }
        synthesize_embeddings(&b.build(1).unwrap(), dim)
    }

    fn example(seed: u64, c: &CnnLstmConfig, vocab: u32) -> EncodedExample {
        use rand::Rng as _;
        let mut rng = seeded(seed);
        let mut ids = |n: usize, pad_from: usize| -> Vec<u32> {
            (0..n).map(|i| if i >= pad_from { PAD } else { rng.gen_range(1..vocab) }).collect()
        };
        let mut before = ids(c.context_len, c.context_len);
        before[..2].fill(PAD);
        EncodedExample {
            before_ids: before,
            after_ids: ids(c.context_len, c.context_len - 2),
            feature_ids: ids(c.feature_len, c.feature_len - 1),
            label: (seed % 6) as usize,
            candidates: Default::default(),
        }
    }

    #[test]
    fn default_widths() {
        let c = CnnLstmConfig::default();
        c.validate().unwrap();
        assert_eq!(c.conv2_filters + 2 * c.lstm_units, 1256);
        assert_eq!(c.concat_units, 1256);
        assert_eq!(c.num_classes, 6);
    }

    #[test]
    fn inconsistent_config_is_rejected() {
        let c = CnnLstmConfig { concat_units: 1000, ..Default::default() };
        assert!(c.validate().is_err());
        let c = CnnLstmConfig { feature_len: 8, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn param_count_formula() {
        let c = CnnLstmConfig::default();
        let (vw, vf) = (37usize, 23usize);
        // Independent tally of the default network.
        let expected = vw * 200
            + vf * 200
            + (5 * 200 * 200 + 200)
            + (5 * 200 * 1000 + 1000)
            + 2 * (200 * 512 + 128 * 512 + 512)
            + (1256 * 6 + 6);
        assert_eq!(c.param_count(vw, vf), expected);
        let m = CnnLstmModel::build(c.clone(), &words(vw - 2, 200), vf, 1).unwrap();
        assert_eq!(m.word_vocab_size(), vw);
        let m = CnnLstmModel::build(c.clone(), &words(vf - 2, 200), vf, 1).unwrap();
        assert_eq!(m.param_count(), c.param_count(m.word_vocab_size(), vf));
    }

    #[test]
    fn same_seed_same_bytes() {
        let w = words(5, 4);
        let a = CnnLstmModel::build(CnnLstmConfig::tiny(), &w, 9, 3).unwrap();
        let b = CnnLstmModel::build(CnnLstmConfig::tiny(), &w, 9, 3).unwrap();
        let bits = |m: &CnnLstmModel| m.params.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = CnnLstmModel::build(CnnLstmConfig::tiny(), &w, 9, 4).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn forget_bias_and_pad_rows() {
        let m = CnnLstmModel::build(CnnLstmConfig::tiny(), &words(5, 4), 9, 3).unwrap();
        let b = m.params.by_name("lstm_forward.b").unwrap().data();
        assert_eq!(&b[3..6], &[1.0; 3]);
        assert_eq!(&b[..3], &[0.0; 3]);
        assert!(m.params.get(FEAT_EMB).row(0).iter().all(|v| *v == 0.0));
        assert!(m.params.get(WORD_EMB).row(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut m = CnnLstmModel::build(CnnLstmConfig::tiny(), &words(5, 4), 9, 3).unwrap();
        m.params.get_mut(OUT_W).fill(0.0);
        let p = m.probs(&example(1, &m.config, 7)).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn wrong_lengths() {
        let m = CnnLstmModel::build(CnnLstmConfig::tiny(), &words(5, 4), 9, 3).unwrap();
        let mut ex = example(1, &m.config, 7);
        ex.feature_ids.pop();
        assert!(m.probs(&ex).is_err());
    }
}

//! The gradient suite: every production layer and the tiny CNN+LSTM checked
//! against double-double central differences of the reference code.

use rand::Rng as _;
use serde::Serialize;

use super::cnnlstm::{CnnLstmConfig, CnnLstmModel, ExampleMasks};
use super::reference;
use crate::error::Result;
use crate::features::{EmbeddingTable, EncodedExample, PAD};
use crate::nn::dd::Dd;
use crate::nn::gradcheck::{relative_error, DEFAULT_STEP};
use crate::nn::reference as rf;
use crate::nn::rng::{seeded, substream, Rng};
use crate::nn::{
    conv1d_backward, conv1d_forward, dense_softmax_xent, dense_softmax_xent_backward, dropout_mask, embedding_backward,
    embedding_forward, global_maxpool_backward, global_maxpool_forward, lstm_backward, lstm_forward,
    maxpool1d_backward, maxpool1d_forward, LstmGrads, LstmMasks, LstmWeights, Tensor,
};

/// Pass threshold on the maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheck {
    pub name: String,
    /// Number of scalar gradient entries compared.
    pub checked: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADCHECK_TOLERANCE
    }
}

/// Largest relative error between analytic and numeric gradients.
pub fn max_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic.iter().zip(numeric).map(|(a, n)| relative_error(*a, *n)).fold(0.0, f64::max)
}

fn uniform(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rows<T: Copy>(flat: &[T], width: usize) -> Vec<Vec<T>> {
    flat.chunks(width).map(<[T]>::to_vec).collect()
}

/// `sum(r * out)` for fixed weights `r`.
fn weighted(out: &[Vec<Dd>], r: &[f64]) -> Dd {
    out.iter().flatten().zip(r).fold(Dd::ZERO, |s, (v, w)| s + *v * Dd::new(*w))
}

fn tensor(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::from_vec(shape, data.to_vec()).expect("shape matches data")
}

fn check(name: &str, pairs: &[(&[f64], &[f64])]) -> GradCheck {
    GradCheck {
        name: name.to_string(),
        checked: pairs.iter().map(|(a, _)| a.len()).sum(),
        max_rel_error: pairs.iter().map(|(a, n)| max_error(a, n)).fold(0.0, f64::max),
    }
}

/// Embedding table `[vocab, dim]` under `sum(r * out)`; ids include PAD.
pub fn check_embedding(rng: &mut Rng, vocab: usize, dim: usize, n: usize) -> Result<GradCheck> {
    let table = uniform(rng, vocab * dim);
    let mut ids: Vec<u32> = (0..n).map(|_| rng.gen_range(0..vocab as u32)).collect();
    ids[0] = PAD;
    let r = uniform(rng, n * dim);
    let t = tensor(&[vocab, dim], &table);
    embedding_forward(&t, &ids)?;
    let mut dtable = Tensor::zeros(&[vocab, dim]);
    embedding_backward(&ids, &tensor(&[n, dim], &r), &mut dtable);
    let num = rf::numeric_gradients(&[table], DEFAULT_STEP, |p| weighted(&rf::embed(&p[0], dim, &ids), &r));
    Ok(check("embedding", &[(dtable.data(), &num[0])]))
}

/// Valid 1-d convolution of an `[len, din]` input with kernel width `k`.
pub fn check_conv1d(rng: &mut Rng, len: usize, k: usize, din: usize, f: usize) -> Result<GradCheck> {
    let x = uniform(rng, len * din);
    let kern = uniform(rng, k * din * f);
    let bias = uniform(rng, f);
    let lout = len + 1 - k;
    let r = uniform(rng, lout * f);
    let (xt, kt, bt) = (tensor(&[len, din], &x), tensor(&[k, din, f], &kern), tensor(&[f], &bias));
    conv1d_forward(&xt, &kt, &bt)?;
    let (mut dk, mut db, mut dx) = (Tensor::zeros(&[k, din, f]), Tensor::zeros(&[f]), Tensor::zeros(&[len, din]));
    conv1d_backward(&xt, &kt, &tensor(&[lout, f], &r), &mut dk, &mut db, Some(&mut dx), None);
    let num = rf::numeric_gradients(&[x, kern, bias], DEFAULT_STEP, |p| {
        weighted(&rf::conv(&rows(&p[0], din), &p[1], &p[2], k), &r)
    });
    Ok(check("conv1d", &[(dx.data(), &num[0]), (dk.data(), &num[1]), (db.data(), &num[2])]))
}

pub fn check_maxpool(rng: &mut Rng, len: usize, f: usize, pool: usize) -> Result<GradCheck> {
    let x = uniform(rng, len * f);
    let r = uniform(rng, (len / pool) * f);
    let (out, argmax) = maxpool1d_forward(&tensor(&[len, f], &x), pool)?;
    let mut dx = Tensor::zeros(&[len, f]);
    maxpool1d_backward(&argmax, &tensor(out.shape(), &r), &mut dx);
    let num = rf::numeric_gradients(&[x], DEFAULT_STEP, |p| weighted(&rf::maxpool(&rows(&p[0], f), pool), &r));
    Ok(check("maxpool", &[(dx.data(), &num[0])]))
}

pub fn check_global_maxpool(rng: &mut Rng, len: usize, f: usize) -> Result<GradCheck> {
    let x = uniform(rng, len * f);
    let r = uniform(rng, f);
    let (_, argmax) = global_maxpool_forward(&tensor(&[len, f], &x))?;
    let mut dx = Tensor::zeros(&[len, f]);
    global_maxpool_backward(&argmax, &tensor(&[f], &r), &mut dx);
    let num = rf::numeric_gradients(&[x], DEFAULT_STEP, |p| weighted(&[rf::global_max(&rows(&p[0], f))], &r));
    Ok(check("global maxpool", &[(dx.data(), &num[0])]))
}

/// LSTM over `[len, d]` with `u` units, optionally under variational
/// dropout masks at rate 0.2.
pub fn check_lstm(rng: &mut Rng, len: usize, d: usize, u: usize, masked: bool) -> Result<GradCheck> {
    let x = uniform(rng, len * d);
    let wx = uniform(rng, d * 4 * u);
    let wh = uniform(rng, u * 4 * u);
    let b = uniform(rng, 4 * u);
    let r = uniform(rng, u);
    let masks = masked.then(|| LstmMasks { input: dropout_mask(d, 0.2, rng), recurrent: dropout_mask(u, 0.2, rng) });
    let (xt, wxt, wht, bt) =
        (tensor(&[len, d], &x), tensor(&[d, 4 * u], &wx), tensor(&[u, 4 * u], &wh), tensor(&[4 * u], &b));
    let w = LstmWeights { w_x: &wxt, w_h: &wht, b: &bt };
    let cache = lstm_forward(&xt, w, masks.as_ref())?;
    let (mut gx, mut gh, mut gb, mut dx) =
        (Tensor::zeros(&[d, 4 * u]), Tensor::zeros(&[u, 4 * u]), Tensor::zeros(&[4 * u]), Tensor::zeros(&[len, d]));
    lstm_backward(
        &cache,
        w,
        masks.as_ref(),
        &r,
        LstmGrads { w_x: &mut gx, w_h: &mut gh, b: &mut gb },
        Some(&mut dx),
        None,
    );
    let m = masks.as_ref().map(|m| (m.input.as_slice(), m.recurrent.as_slice()));
    let num = rf::numeric_gradients(&[x, wx, wh, b], DEFAULT_STEP, |p| {
        weighted(&[rf::lstm(&rows(&p[0], d), &p[1], &p[2], &p[3], u, m)], &r)
    });
    let name = if masked { "lstm (dropout masks)" } else { "lstm" };
    Ok(check(name, &[(dx.data(), &num[0]), (gx.data(), &num[1]), (gh.data(), &num[2]), (gb.data(), &num[3])]))
}

/// Dense layer into softmax cross-entropy, `h [hdim]`, `w [hdim, classes]`.
pub fn check_dense_softmax(rng: &mut Rng, hdim: usize, classes: usize) -> Result<GradCheck> {
    let h = uniform(rng, hdim);
    let w = uniform(rng, hdim * classes);
    let b = uniform(rng, classes);
    let label = rng.gen_range(0..classes);
    let (wt, bt) = (tensor(&[hdim, classes], &w), tensor(&[classes], &b));
    let out = dense_softmax_xent(&h, &wt, &bt, label)?;
    let (mut dw, mut db, mut dh) = (Tensor::zeros(&[hdim, classes]), Tensor::zeros(&[classes]), vec![0.0; hdim]);
    dense_softmax_xent_backward(&h, &wt, &out.probs, label, &mut dw, &mut db, Some(&mut dh));
    let num = rf::numeric_gradients(&[h, w, b], DEFAULT_STEP, |p| rf::softmax_xent(&p[0], &p[1], &p[2], label).1);
    Ok(check("dense + softmax", &[(&dh, &num[0]), (dw.data(), &num[1]), (db.data(), &num[2])]))
}

/// Random ids shaped like an encoded mention: a few PADs at the far end of
/// each context window and at the tail of the feature sequence.
pub fn random_example(rng: &mut Rng, c: &CnnLstmConfig, word_vocab: u32, feature_vocab: u32) -> EncodedExample {
    let before_pad = rng.gen_range(0..3.min(c.context_len));
    let after_pad = rng.gen_range(0..3.min(c.context_len));
    let feat_pad = rng.gen_range(0..2.min(c.feature_len));
    let before = (0..c.context_len).map(|i| if i < before_pad { PAD } else { rng.gen_range(1..word_vocab) }).collect();
    let after = (0..c.context_len)
        .map(|i| if i >= c.context_len - after_pad { PAD } else { rng.gen_range(1..word_vocab) })
        .collect();
    let feats = (0..c.feature_len)
        .map(|i| if i >= c.feature_len - feat_pad { PAD } else { rng.gen_range(1..feature_vocab) })
        .collect();
    EncodedExample {
        before_ids: before,
        after_ids: after,
        feature_ids: feats,
        label: rng.gen_range(0..c.num_classes),
        candidates: Default::default(),
    }
}

/// Whole tiny network: analytic `loss_and_grad` against the reference
/// forward pass, every parameter tensor included.
pub fn check_network(model: &CnnLstmModel, ex: &EncodedExample, masks: Option<&ExampleMasks>) -> Result<GradCheck> {
    let mut grads = model.params.zeros_like();
    model.loss_and_grad(ex, masks, &mut grads)?;
    let numeric = reference::numeric_gradient(model, ex, masks, DEFAULT_STEP);
    let name = if masks.is_some() { "cnn+lstm tiny (dropout masks)" } else { "cnn+lstm tiny" };
    Ok(check(name, &[(&grads.flatten(), &numeric)]))
}

/// Word vectors for the tiny network: hashed-style values in [-0.25, 0.25)
/// with a zero PAD row.
fn tiny_words(rng: &mut Rng, rows: usize, dim: usize) -> EmbeddingTable {
    let mut data = vec![0.0; rows * dim];
    for v in &mut data[dim..] {
        *v = rng.gen_range(-0.25..0.25);
    }
    EmbeddingTable::from_parts(dim, data)
}

/// Every layer at fixed small shapes plus the tiny network with and
/// without dropout masks. Values are drawn from `seed`.
pub fn gradient_suite(seed: u64) -> Result<Vec<GradCheck>> {
    let mut rng = seeded(seed);
    let mut out = vec![
        check_embedding(&mut rng, 6, 4, 7)?,
        check_conv1d(&mut rng, 8, 3, 3, 4)?,
        check_maxpool(&mut rng, 7, 4, 2)?,
        check_global_maxpool(&mut rng, 6, 5)?,
        check_lstm(&mut rng, 6, 4, 3, false)?,
        check_lstm(&mut rng, 6, 4, 3, true)?,
        check_dense_softmax(&mut rng, 10, 6)?,
    ];
    let c = CnnLstmConfig::tiny();
    let model = CnnLstmModel::build(c.clone(), &tiny_words(&mut rng, 8, c.word_dim), 8, rng.gen())?;
    let ex = random_example(&mut rng, &c, 8, 8);
    out.push(check_network(&model, &ex, None)?);
    let masks = ExampleMasks::sample(&c, &mut substream(seed, 1));
    out.push(check_network(&model, &ex, Some(&masks))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for check in gradient_suite(1).unwrap() {
            assert!(check.passed(), "{check:?}");
            assert!(check.checked > 0);
        }
    }

    #[test]
    fn reference_forward_matches_model() {
        let mut rng = seeded(3);
        let c = CnnLstmConfig::tiny();
        let m = CnnLstmModel::build(c.clone(), &tiny_words(&mut rng, 8, 4), 8, 3).unwrap();
        for _ in 0..10 {
            let ex = random_example(&mut rng, &c, 8, 8);
            let ours = m.probs(&ex).unwrap();
            let theirs = reference::probs(&m, &ex);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-13, "{ours:?} vs {theirs:?}");
            }
        }
    }

    #[test]
    fn broken_gradient_is_reported() {
        let mut rng = seeded(4);
        let c = CnnLstmConfig::tiny();
        let model = CnnLstmModel::build(c.clone(), &tiny_words(&mut rng, 8, 4), 8, 5).unwrap();
        let ex = random_example(&mut rng, &c, 8, 8);
        let mut grads = model.params.zeros_like();
        model.loss_and_grad(&ex, None, &mut grads).unwrap();
        let mut analytic = grads.flatten();
        let numeric = reference::numeric_gradient(&model, &ex, None, DEFAULT_STEP);
        let i = analytic.iter().position(|g| g.abs() > 1e-3).unwrap();
        analytic[i] *= 1.001;
        assert!(max_error(&analytic, &numeric) > GRADCHECK_TOLERANCE);
    }
}

//! Reference CNN+LSTM forward pass assembled from [`crate::nn::reference`]
//! layers, and the double-double gradient oracle built on it.

use std::collections::HashMap;

use super::cnnlstm::{CnnLstmConfig, CnnLstmModel, ExampleMasks};
use crate::features::EncodedExample;
use crate::nn::reference::{conv, embed, global_max, lstm, max, maxpool, numeric_gradients, softmax_xent, Scalar};

/// Tensors by parameter name, flattened row-major.
pub type Params<T> = HashMap<String, Vec<T>>;

/// Output logits and cross-entropy loss of the full network.
pub fn forward<T: Scalar>(
    c: &CnnLstmConfig,
    p: &Params<T>,
    ex: &EncodedExample,
    masks: Option<&ExampleMasks>,
) -> (Vec<T>, T) {
    let feat = embed(&p["feature_embedding"], c.feature_dim, &ex.feature_ids);
    let c1 = conv(&feat, &p["conv1.kernels"], &p["conv1.bias"], c.conv1_kernel);
    let mut pooled = maxpool(&c1, c.pool_size);
    if let Some(ms) = masks {
        for (v, s) in pooled.iter_mut().flatten().zip(&ms.conv) {
            *v = *v * T::of(*s);
        }
    }
    let c2 = conv(&pooled, &p["conv2.kernels"], &p["conv2.bias"], c.conv2_kernel);
    let mut concat = global_max(&c2);

    let before = embed(&p["word_embedding"], c.word_dim, &ex.before_ids);
    let after_rev: Vec<u32> = ex.after_ids.iter().rev().copied().collect();
    let after = embed(&p["word_embedding"], c.word_dim, &after_rev);
    let fm = masks.map(|m| (m.forward.input.as_slice(), m.forward.recurrent.as_slice()));
    let bm = masks.map(|m| (m.backward.input.as_slice(), m.backward.recurrent.as_slice()));
    concat.extend(lstm(
        &before,
        &p["lstm_forward.w_x"],
        &p["lstm_forward.w_h"],
        &p["lstm_forward.b"],
        c.lstm_units,
        fm,
    ));
    concat.extend(lstm(
        &after,
        &p["lstm_backward.w_x"],
        &p["lstm_backward.w_h"],
        &p["lstm_backward.b"],
        c.lstm_units,
        bm,
    ));

    let hidden: Vec<T> = concat.into_iter().map(|v| max(v, T::of(0.0))).collect();
    softmax_xent(&hidden, &p["output.w"], &p["output.b"], ex.label)
}

fn params<T: Scalar>(model: &CnnLstmModel, lift: impl Fn(f64) -> T) -> Params<T> {
    model
        .params
        .names()
        .iter()
        .zip(model.params.tensors())
        .map(|(name, t)| (name.to_string(), t.data().iter().map(|x| lift(*x)).collect()))
        .collect()
}

/// Class probabilities computed in f64 by the reference pass.
pub fn probs(model: &CnnLstmModel, ex: &EncodedExample) -> Vec<f64> {
    let (logits, _) = forward(&model.config, &params(model, |x| x), ex, None);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Double-double central differences of the full network's loss, ordered
/// like `ParamStore::flatten`.
pub fn numeric_gradient(model: &CnnLstmModel, ex: &EncodedExample, masks: Option<&ExampleMasks>, h: f64) -> Vec<f64> {
    let names = model.params.names();
    let inputs: Vec<Vec<f64>> = model.params.tensors().iter().map(|t| t.data().to_vec()).collect();
    numeric_gradients(&inputs, h, |p| {
        let params = names.iter().cloned().zip(p.iter().cloned()).collect();
        forward(&model.config, &params, ex, masks).1
    })
    .concat()
}

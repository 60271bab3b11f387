use super::ops::{axpy, debug_check_finite, dot};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// `logits = h W + b` for `W [H, C]`.
pub fn dense_forward(h: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    if w.shape().len() != 2 || w.rows() != h.len() || b.shape() != [w.row_len()] {
        return Err(Error::Shape(format!("dense: input {}, W {:?}, b {:?}", h.len(), w.shape(), b.shape())));
    }
    let mut out = b.data().to_vec();
    for (j, &hv) in h.iter().enumerate() {
        if hv != 0.0 {
            axpy(hv, w.row(j), &mut out);
        }
    }
    Ok(out)
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxOutput {
    pub loss: f64,
    pub probs: Vec<f64>,
}

/// Dense layer, softmax and cross-entropy against `label`.
pub fn dense_softmax_xent(h: &[f64], w: &Tensor, b: &Tensor, label: usize) -> Result<SoftmaxOutput> {
    let logits = dense_forward(h, w, b)?;
    if label >= logits.len() {
        return Err(Error::InvalidInput(format!("label {label} out of range for {} classes", logits.len())));
    }
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    let probs = softmax(&logits);
    let loss = lse - logits[label];
    debug_check_finite("softmax output", &probs);
    Ok(SoftmaxOutput { loss, probs })
}

/// Gradient through softmax cross-entropy: `dlogits = probs - onehot`.
/// Accumulates into `dw`/`db`; overwrites `dh` if given.
pub fn dense_softmax_xent_backward(
    h: &[f64],
    w: &Tensor,
    probs: &[f64],
    label: usize,
    dw: &mut Tensor,
    db: &mut Tensor,
    dh: Option<&mut [f64]>,
) {
    let mut dlogits = probs.to_vec();
    dlogits[label] -= 1.0;
    axpy(1.0, &dlogits, db.data_mut());
    for (j, &hv) in h.iter().enumerate() {
        if hv != 0.0 {
            axpy(hv, &dlogits, dw.row_mut(j));
        }
    }
    if let Some(dh) = dh {
        for (j, v) in dh.iter_mut().enumerate() {
            *v = dot(w.row(j), &dlogits);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, DEFAULT_STEP};
    use crate::nn::rng::{seeded, uniform_fill};

    #[test]
    fn zero_weights_give_uniform() {
        let out = dense_softmax_xent(&[0.5; 4], &Tensor::zeros(&[4, 6]), &Tensor::zeros(&[6]), 2).unwrap();
        for p in &out.probs {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((out.loss - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let w = Tensor::from_vec(&[1, 2], vec![1000.0, 0.0]).unwrap();
        let out = dense_softmax_xent(&[1.0], &w, &Tensor::zeros(&[2]), 1).unwrap();
        assert!((out.loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn bad_label() {
        assert!(dense_softmax_xent(&[1.0], &Tensor::zeros(&[1, 3]), &Tensor::zeros(&[3]), 3).is_err());
    }

    #[test]
    fn sums_to_one() {
        let p = softmax(&[3.0, -1.0, 0.2, 7.5, -20.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn finite_differences() {
        let mut rng = seeded(3);
        let (mut h, mut w, mut b) = (vec![0.0; 10], Tensor::zeros(&[10, 6]), Tensor::zeros(&[6]));
        uniform_fill(&mut rng, &mut h, 1.0);
        uniform_fill(&mut rng, w.data_mut(), 1.0);
        uniform_fill(&mut rng, b.data_mut(), 1.0);
        let label = 4;
        let out = dense_softmax_xent(&h, &w, &b, label).unwrap();
        let (mut dw, mut db, mut dh) = (Tensor::zeros(w.shape()), Tensor::zeros(b.shape()), vec![0.0; 10]);
        dense_softmax_xent_backward(&h, &w, &out.probs, label, &mut dw, &mut db, Some(&mut dh));
        let t = |s: &[usize], v: &[f64]| Tensor::from_vec(s, v.to_vec()).unwrap();
        let e = [
            gradient_check(|v| dense_softmax_xent(v, &w, &b, label).unwrap().loss, &h, &dh, DEFAULT_STEP),
            gradient_check(
                |v| dense_softmax_xent(&h, &t(&[10, 6], v), &b, label).unwrap().loss,
                w.data(),
                dw.data(),
                DEFAULT_STEP,
            ),
            gradient_check(
                |v| dense_softmax_xent(&h, &w, &t(&[6], v), label).unwrap().loss,
                b.data(),
                db.data(),
                DEFAULT_STEP,
            ),
        ];
        assert!(e.iter().all(|v| *v < 1e-6), "{e:?}");
    }
}

use rand::Rng as _;

use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 - rate)`. Rate 0 draws nothing from `rng`.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut Rng) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Applies dropout when `training`; identity otherwise.
pub fn dropout(x: &Tensor, rate: f64, rng: &mut Rng, training: bool) -> Result<Tensor> {
    check_rate(rate)?;
    let mut out = x.clone();
    if training {
        let mask = dropout_mask(x.len(), rate, rng);
        for (v, m) in out.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
    }
    Ok(out)
}

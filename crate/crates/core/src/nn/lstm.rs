//! Single-direction LSTM returning the last hidden state.
//!
//! Gate blocks are laid out `[i, f, g, o]` along the `4U` axis of
//! `w_x [D, 4U]`, `w_h [U, 4U]` and `b [4U]`. Optional dropout masks are
//! variational: one input mask and one recurrent mask reused at every step.

use super::ops::{axpy, debug_check_finite, dot, sigmoid};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub w_x: &'a Tensor,
    pub w_h: &'a Tensor,
    pub b: &'a Tensor,
}

impl LstmWeights<'_> {
    pub fn units(&self) -> usize {
        self.w_h.shape()[0]
    }

    fn check(&self, input_dim: usize) -> Result<usize> {
        let u = self.units();
        if self.w_x.shape() != [input_dim, 4 * u] || self.w_h.shape() != [u, 4 * u] || self.b.shape() != [4 * u] {
            return Err(Error::Shape(format!(
                "lstm: input dim {input_dim}, w_x {:?}, w_h {:?}, b {:?}",
                self.w_x.shape(),
                self.w_h.shape(),
                self.b.shape()
            )));
        }
        Ok(u)
    }
}

pub struct LstmGrads<'a> {
    pub w_x: &'a mut Tensor,
    pub w_h: &'a mut Tensor,
    pub b: &'a mut Tensor,
}

/// Dropout masks: `input` has one entry per input feature, `recurrent` one
/// per unit. Entries are 0 or the inverted-dropout scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmMasks {
    pub input: Vec<f64>,
    pub recurrent: Vec<f64>,
}

/// Everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: usize,
    units: usize,
    /// Masked inputs `[L, D]`.
    x: Tensor,
    /// Activated gates per step, `[L, 4U]`.
    gates: Vec<f64>,
    /// Cell states `c_0..c_L`, `[L + 1, U]`.
    c: Vec<f64>,
    /// Hidden states `h_0..h_L`, `[L + 1, U]`.
    h: Vec<f64>,
    recurrent_mask: Option<Vec<f64>>,
}

impl LstmCache {
    pub fn last_hidden(&self) -> &[f64] {
        &self.h[self.steps * self.units..]
    }
}

pub fn lstm_forward(x: &Tensor, w: LstmWeights<'_>, masks: Option<&LstmMasks>) -> Result<LstmCache> {
    if x.shape().len() != 2 {
        return Err(Error::Shape(format!("lstm: input {:?}", x.shape())));
    }
    let (l, d) = (x.rows(), x.row_len());
    let u = w.check(d)?;
    let mut xm = x.clone();
    if let Some(m) = masks {
        if m.input.len() != d || m.recurrent.len() != u {
            return Err(Error::Shape("lstm: dropout mask sizes".into()));
        }
        for t in 0..l {
            for (v, s) in xm.row_mut(t).iter_mut().zip(&m.input) {
                *v *= s;
            }
        }
    }
    let mut gates = vec![0.0; l * 4 * u];
    let mut c = vec![0.0; (l + 1) * u];
    let mut h = vec![0.0; (l + 1) * u];
    let mut hm = vec![0.0; u];
    let mut z = vec![0.0; 4 * u];
    for t in 0..l {
        z.copy_from_slice(w.b.data());
        for (dd, &xv) in xm.row(t).iter().enumerate() {
            if xv != 0.0 {
                axpy(xv, w.w_x.row(dd), &mut z);
            }
        }
        hm.copy_from_slice(&h[t * u..(t + 1) * u]);
        if let Some(m) = masks {
            for (v, s) in hm.iter_mut().zip(&m.recurrent) {
                *v *= s;
            }
        }
        for (j, &hv) in hm.iter().enumerate() {
            if hv != 0.0 {
                axpy(hv, w.w_h.row(j), &mut z);
            }
        }
        let g = &mut gates[t * 4 * u..(t + 1) * 4 * u];
        for j in 0..u {
            let (ig, fg, gg, og) = (sigmoid(z[j]), sigmoid(z[u + j]), z[2 * u + j].tanh(), sigmoid(z[3 * u + j]));
            g[j] = ig;
            g[u + j] = fg;
            g[2 * u + j] = gg;
            g[3 * u + j] = og;
            let cn = fg * c[t * u + j] + ig * gg;
            c[(t + 1) * u + j] = cn;
            h[(t + 1) * u + j] = og * cn.tanh();
        }
    }
    debug_check_finite("lstm hidden state", &h);
    Ok(LstmCache { steps: l, units: u, x: xm, gates, c, h, recurrent_mask: masks.map(|m| m.recurrent.clone()) })
}

/// Backpropagation through time from `dh_last`. Weight gradients are
/// accumulated; `dx`, if given, is overwritten with the input gradient,
/// restricted to `dx_rows` when that is given.
#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    cache: &LstmCache,
    w: LstmWeights<'_>,
    masks: Option<&LstmMasks>,
    dh_last: &[f64],
    grads: LstmGrads<'_>,
    mut dx: Option<&mut Tensor>,
    dx_rows: Option<&[bool]>,
) {
    let (l, u) = (cache.steps, cache.units);
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; u];
    let mut dz = vec![0.0; 4 * u];
    let mut hm = vec![0.0; u];
    if let Some(dx) = dx.as_deref_mut() {
        dx.fill(0.0);
    }
    for t in (0..l).rev() {
        let g = &cache.gates[t * 4 * u..(t + 1) * 4 * u];
        let c_prev = &cache.c[t * u..(t + 1) * u];
        let c_t = &cache.c[(t + 1) * u..(t + 2) * u];
        for j in 0..u {
            let (ig, fg, gg, og) = (g[j], g[u + j], g[2 * u + j], g[3 * u + j]);
            let tc = c_t[j].tanh();
            let dct = dc[j] + dh[j] * og * (1.0 - tc * tc);
            dz[j] = dct * gg * ig * (1.0 - ig);
            dz[u + j] = dct * c_prev[j] * fg * (1.0 - fg);
            dz[2 * u + j] = dct * ig * (1.0 - gg * gg);
            dz[3 * u + j] = dh[j] * tc * og * (1.0 - og);
            dc[j] = dct * fg;
        }
        axpy(1.0, &dz, grads.b.data_mut());
        for (dd, &xv) in cache.x.row(t).iter().enumerate() {
            if xv != 0.0 {
                axpy(xv, &dz, grads.w_x.row_mut(dd));
            }
        }
        hm.copy_from_slice(&cache.h[t * u..(t + 1) * u]);
        if let Some(m) = &cache.recurrent_mask {
            for (v, s) in hm.iter_mut().zip(m) {
                *v *= s;
            }
        }
        for (j, &hv) in hm.iter().enumerate() {
            if hv != 0.0 {
                axpy(hv, &dz, grads.w_h.row_mut(j));
            }
        }
        if let Some(dx) = dx.as_deref_mut().filter(|_| dx_rows.is_none_or(|r| r[t])) {
            let row = dx.row_mut(t);
            for (dd, v) in row.iter_mut().enumerate() {
                let scale = masks.map_or(1.0, |m| m.input[dd]);
                if scale != 0.0 {
                    *v = scale * dot(w.w_x.row(dd), &dz);
                }
            }
        }
        if t > 0 {
            for (j, v) in dh.iter_mut().enumerate() {
                let scale = masks.map_or(1.0, |m| m.recurrent[j]);
                *v = if scale != 0.0 { scale * dot(w.w_h.row(j), &dz) } else { 0.0 };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, DEFAULT_STEP};
    use crate::nn::rng::{seeded, uniform_fill};

    struct Fixture {
        x: Tensor,
        w_x: Tensor,
        w_h: Tensor,
        b: Tensor,
        r: Vec<f64>,
    }

    fn fixture(l: usize, d: usize, u: usize, seed: u64) -> Fixture {
        let mut rng = seeded(seed);
        let mut f = Fixture {
            x: Tensor::zeros(&[l, d]),
            w_x: Tensor::zeros(&[d, 4 * u]),
            w_h: Tensor::zeros(&[u, 4 * u]),
            b: Tensor::zeros(&[4 * u]),
            r: vec![0.0; u],
        };
        uniform_fill(&mut rng, f.x.data_mut(), 1.0);
        uniform_fill(&mut rng, f.w_x.data_mut(), 0.8);
        uniform_fill(&mut rng, f.w_h.data_mut(), 0.8);
        uniform_fill(&mut rng, f.b.data_mut(), 0.5);
        uniform_fill(&mut rng, &mut f.r, 1.0);
        f
    }

    fn loss(x: &Tensor, w_x: &Tensor, w_h: &Tensor, b: &Tensor, r: &[f64], masks: Option<&LstmMasks>) -> f64 {
        let cache = lstm_forward(x, LstmWeights { w_x, w_h, b }, masks).unwrap();
        dot(cache.last_hidden(), r)
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let f = fixture(4, 3, 2, 1);
        let z = (Tensor::zeros(&[3, 8]), Tensor::zeros(&[2, 8]), Tensor::zeros(&[8]));
        let cache = lstm_forward(&f.x, LstmWeights { w_x: &z.0, w_h: &z.1, b: &z.2 }, None).unwrap();
        assert!(cache.last_hidden().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_closed_form() {
        let one = |s: &[usize]| Tensor::from_vec(s, vec![1.0; s.iter().product()]).unwrap();
        let (w_x, w_h, b) = (one(&[1, 4]), one(&[1, 4]), Tensor::zeros(&[4]));
        let x = one(&[1, 1]);
        let cache = lstm_forward(&x, LstmWeights { w_x: &w_x, w_h: &w_h, b: &b }, None).unwrap();
        let s = 1.0 / (1.0 + (-1.0f64).exp());
        let expected = s * (s * 1.0f64.tanh()).tanh();
        assert!((cache.last_hidden()[0] - expected).abs() < 1e-15);
    }

    fn check_grads(f: &Fixture, masks: Option<&LstmMasks>) {
        let w = LstmWeights { w_x: &f.w_x, w_h: &f.w_h, b: &f.b };
        let cache = lstm_forward(&f.x, w, masks).unwrap();
        let (mut gx, mut gh, mut gb) =
            (Tensor::zeros(f.w_x.shape()), Tensor::zeros(f.w_h.shape()), Tensor::zeros(f.b.shape()));
        let mut dx = Tensor::zeros(f.x.shape());
        lstm_backward(
            &cache,
            w,
            masks,
            &f.r,
            LstmGrads { w_x: &mut gx, w_h: &mut gh, b: &mut gb },
            Some(&mut dx),
            None,
        );
        let t = |s: &[usize], v: &[f64]| Tensor::from_vec(s, v.to_vec()).unwrap();
        let errs = [
            gradient_check(
                |v| loss(&t(f.x.shape(), v), &f.w_x, &f.w_h, &f.b, &f.r, masks),
                f.x.data(),
                dx.data(),
                DEFAULT_STEP,
            ),
            gradient_check(
                |v| loss(&f.x, &t(f.w_x.shape(), v), &f.w_h, &f.b, &f.r, masks),
                f.w_x.data(),
                gx.data(),
                DEFAULT_STEP,
            ),
            gradient_check(
                |v| loss(&f.x, &f.w_x, &t(f.w_h.shape(), v), &f.b, &f.r, masks),
                f.w_h.data(),
                gh.data(),
                DEFAULT_STEP,
            ),
            gradient_check(
                |v| loss(&f.x, &f.w_x, &f.w_h, &t(f.b.shape(), v), &f.r, masks),
                f.b.data(),
                gb.data(),
                DEFAULT_STEP,
            ),
        ];
        for e in errs {
            assert!(e < 1e-5, "{errs:?}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_grads(&fixture(6, 4, 3, 7), None);
    }

    #[test]
    fn gradients_with_dropout_masks() {
        let masks = LstmMasks { input: vec![1.25, 0.0, 1.25, 1.25], recurrent: vec![0.0, 1.25, 1.25] };
        check_grads(&fixture(5, 4, 3, 8), Some(&masks));
    }
}

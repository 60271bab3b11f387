//! Straight-line reference versions of the layers, generic over the scalar
//! so they can run in double-double precision. They share no code with the
//! production layers and serve as finite-difference oracles: evaluating
//! central differences in double-double removes the roundoff floor that
//! limits an f64 oracle at small steps.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::dd::Dd;
use crate::features::PAD;

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn of(x: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn less(self, other: Self) -> bool;
}

impl Scalar for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn less(self, other: Self) -> bool {
        self < other
    }
}

impl Scalar for Dd {
    fn of(x: f64) -> Self {
        Dd::new(x)
    }
    fn exp(self) -> Self {
        Dd::exp(self)
    }
    fn ln(self) -> Self {
        Dd::ln(self)
    }
    fn tanh(self) -> Self {
        Dd::tanh(self)
    }
    fn less(self, other: Self) -> bool {
        self.lt(other)
    }
}

pub fn max<T: Scalar>(a: T, b: T) -> T {
    if a.less(b) {
        b
    } else {
        a
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::of(1.0) / (T::of(1.0) + (-x).exp())
}

pub fn embed<T: Scalar>(table: &[T], dim: usize, ids: &[u32]) -> Vec<Vec<T>> {
    ids.iter()
        .map(
            |&id| {
                if id == PAD {
                    vec![T::of(0.0); dim]
                } else {
                    table[id as usize * dim..(id as usize + 1) * dim].to_vec()
                }
            },
        )
        .collect()
}

/// Valid convolution, kernels laid out `[k][in][out]`.
pub fn conv<T: Scalar>(x: &[Vec<T>], kernels: &[T], bias: &[T], k: usize) -> Vec<Vec<T>> {
    let din = x[0].len();
    let f = bias.len();
    (0..x.len() + 1 - k)
        .map(|t| {
            (0..f)
                .map(|o| {
                    let mut s = bias[o];
                    for j in 0..k {
                        for d in 0..din {
                            s = s + x[t + j][d] * kernels[(j * din + d) * f + o];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn lstm<T: Scalar>(
    xs: &[Vec<T>],
    wx: &[T],
    wh: &[T],
    b: &[T],
    units: usize,
    masks: Option<(&[f64], &[f64])>,
) -> Vec<T> {
    let u = units;
    let mut h = vec![T::of(0.0); u];
    let mut c = vec![T::of(0.0); u];
    for x in xs {
        let x: Vec<T> = match masks {
            Some((m, _)) => x.iter().zip(m).map(|(v, s)| *v * T::of(*s)).collect(),
            None => x.clone(),
        };
        let hm: Vec<T> = match masks {
            Some((_, m)) => h.iter().zip(m).map(|(v, s)| *v * T::of(*s)).collect(),
            None => h.clone(),
        };
        let z: Vec<T> = (0..4 * u)
            .map(|g| {
                let mut s = b[g];
                for (d, v) in x.iter().enumerate() {
                    s = s + *v * wx[d * 4 * u + g];
                }
                for (j, v) in hm.iter().enumerate() {
                    s = s + *v * wh[j * 4 * u + g];
                }
                s
            })
            .collect();
        for j in 0..u {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[u + j]);
            let g = z[2 * u + j].tanh();
            let o = sigmoid(z[3 * u + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }
    h
}

/// Non-overlapping max pooling; a trailing partial window is dropped.
pub fn maxpool<T: Scalar>(x: &[Vec<T>], pool: usize) -> Vec<Vec<T>> {
    (0..x.len() / pool)
        .map(|q| (0..x[0].len()).map(|o| (1..pool).fold(x[q * pool][o], |m, t| max(m, x[q * pool + t][o]))).collect())
        .collect()
}

pub fn global_max<T: Scalar>(x: &[Vec<T>]) -> Vec<T> {
    (0..x[0].len()).map(|o| x.iter().skip(1).fold(x[0][o], |m, row| max(m, row[o]))).collect()
}

/// Logits of `w [H, C]` and `b [C]`, and `-log softmax(logits)[label]`.
pub fn softmax_xent<T: Scalar>(hidden: &[T], w: &[T], b: &[T], label: usize) -> (Vec<T>, T) {
    let k = b.len();
    let logits: Vec<T> =
        (0..k).map(|o| hidden.iter().enumerate().fold(b[o], |s, (j, h)| s + *h * w[j * k + o])).collect();
    let m = logits.iter().skip(1).fold(logits[0], |m, z| max(m, *z));
    let sum = logits.iter().fold(T::of(0.0), |s, z| s + (*z - m).exp());
    let loss = m + sum.ln() - logits[label];
    (logits, loss)
}

/// Central differences of `f` with respect to every entry of `inputs`,
/// evaluated in double-double with `x + h` formed exactly.
pub fn numeric_gradients(inputs: &[Vec<f64>], h: f64, f: impl Fn(&[Vec<Dd>]) -> Dd) -> Vec<Vec<f64>> {
    let base: Vec<Vec<Dd>> = inputs.iter().map(|v| v.iter().map(|x| Dd::new(*x)).collect()).collect();
    inputs
        .iter()
        .enumerate()
        .map(|(a, v)| {
            (0..v.len())
                .map(|i| {
                    let mut p = base.clone();
                    p[a][i] = Dd::sum(v[i], h);
                    let up = f(&p);
                    p[a][i] = Dd::sum(v[i], -h);
                    let down = f(&p);
                    ((up - down) / Dd::new(2.0 * h)).to_f64()
                })
                .collect()
        })
        .collect()
}

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Non-overlapping max pooling over rows of `[L, F]`; trailing rows that do
/// not fill a window are dropped. Returns the output `[L / pool, F]` and, per
/// output element, the flat index of the winning input (earliest on ties).
pub fn maxpool1d_forward(x: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>)> {
    if pool == 0 {
        return Err(Error::Shape("pool size must be at least 1".into()));
    }
    if x.shape().len() != 2 || x.rows() < pool {
        return Err(Error::Shape(format!("maxpool: input {:?} too short for pool {pool}", x.shape())));
    }
    let f = x.row_len();
    let lout = x.rows() / pool;
    let mut out = Tensor::zeros(&[lout, f]);
    let mut argmax = vec![0usize; lout * f];
    for t in 0..lout {
        for j in 0..f {
            let mut best = t * pool * f + j;
            for s in t * pool + 1..(t + 1) * pool {
                let idx = s * f + j;
                if x.data()[idx] > x.data()[best] {
                    best = idx;
                }
            }
            out.data_mut()[t * f + j] = x.data()[best];
            argmax[t * f + j] = best;
        }
    }
    Ok((out, argmax))
}

/// Routes each output gradient to its argmax; `dx` is overwritten.
pub fn maxpool1d_backward(argmax: &[usize], dout: &Tensor, dx: &mut Tensor) {
    dx.fill(0.0);
    for (g, &idx) in dout.data().iter().zip(argmax) {
        dx.data_mut()[idx] += *g;
    }
}

/// Column-wise max over all rows of `[L, F]`, giving `[F]`.
pub fn global_maxpool_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    if x.shape().len() != 2 {
        return Err(Error::Shape(format!("global maxpool: input {:?}", x.shape())));
    }
    let (out, argmax) = maxpool1d_forward(x, x.rows())?;
    Ok((Tensor::from_vec(&[x.row_len()], out.into_data())?, argmax))
}

pub fn global_maxpool_backward(argmax: &[usize], dout: &Tensor, dx: &mut Tensor) {
    maxpool1d_backward(argmax, dout, dx);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, DEFAULT_STEP};
    use crate::nn::rng::{seeded, uniform_fill};

    fn col(v: &[f64]) -> Tensor {
        Tensor::from_vec(&[v.len(), 1], v.to_vec()).unwrap()
    }

    #[test]
    fn pool_one_is_identity() {
        let x = Tensor::from_vec(&[3, 2], vec![1., -2., 3., 0.5, 7., 8.]).unwrap();
        assert_eq!(maxpool1d_forward(&x, 1).unwrap().0, x);
    }

    #[test]
    fn hand_example() {
        let (out, argmax) = maxpool1d_forward(&col(&[1., 3., 2., 2., 5., 4.]), 2).unwrap();
        assert_eq!(out.data(), &[3., 2., 5.]);
        // The tie in the middle window goes to the earlier index.
        assert_eq!(argmax, vec![1, 2, 4]);
    }

    #[test]
    fn remainder_dropped() {
        let (out, _) = maxpool1d_forward(&col(&[1., 2., 3., 4., 5., 9.]), 5).unwrap();
        assert_eq!(out.data(), &[5.]);
    }

    #[test]
    fn backward_of_sum_marks_argmax() {
        let x = col(&[1., 3., 2., 2., 5., 4.]);
        let (out, argmax) = maxpool1d_forward(&x, 2).unwrap();
        let mut dx = Tensor::zeros(x.shape());
        maxpool1d_backward(&argmax, &Tensor::from_vec(out.shape(), vec![1.0; 3]).unwrap(), &mut dx);
        assert_eq!(dx.data(), &[0., 1., 1., 0., 1., 0.]);
    }

    #[test]
    fn global_max() {
        let (out, _) = global_maxpool_forward(&col(&[-1., -5., -2.])).unwrap();
        assert_eq!(out.data(), &[-1.]);
        let row = Tensor::from_vec(&[1, 3], vec![4., 5., 6.]).unwrap();
        assert_eq!(global_maxpool_forward(&row).unwrap().0.data(), row.data());
    }

    #[test]
    fn finite_differences() {
        let mut x = Tensor::zeros(&[7, 4]);
        uniform_fill(&mut seeded(11), x.data_mut(), 1.0);
        let r = [0.3, -0.7, 1.1, 0.4];
        let loss = |v: &[f64]| {
            let t = Tensor::from_vec(&[7, 4], v.to_vec()).unwrap();
            global_maxpool_forward(&t).unwrap().0.data().iter().zip(&r).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, argmax) = global_maxpool_forward(&x).unwrap();
        let mut dx = Tensor::zeros(x.shape());
        global_maxpool_backward(&argmax, &Tensor::from_vec(&[4], r.to_vec()).unwrap(), &mut dx);
        assert!(gradient_check(loss, x.data(), dx.data(), DEFAULT_STEP) < 1e-6);

        let loss = |v: &[f64]| {
            let t = Tensor::from_vec(&[7, 4], v.to_vec()).unwrap();
            maxpool1d_forward(&t, 3).unwrap().0.data().iter().sum::<f64>()
        };
        let (out, argmax) = maxpool1d_forward(&x, 3).unwrap();
        maxpool1d_backward(&argmax, &Tensor::from_vec(out.shape(), vec![1.0; out.len()]).unwrap(), &mut dx);
        assert!(gradient_check(loss, x.data(), dx.data(), DEFAULT_STEP) < 1e-6);
    }
}

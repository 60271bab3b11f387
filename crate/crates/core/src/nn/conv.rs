use super::ops::{axpy, debug_check_finite, dot};
use super::tensor::Tensor;
use crate::error::{Error, Result};

fn check(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (ks, xs) = (kernels.shape(), x.shape());
    if xs.len() != 2 || ks.len() != 3 || ks[1] != xs[1] || bias.shape() != [ks[2]] {
        return Err(Error::Shape(format!("conv1d: x {xs:?}, kernels {ks:?}, bias {:?}", bias.shape())));
    }
    if xs[0] < ks[0] {
        return Err(Error::Shape(format!("conv1d: sequence length {} shorter than kernel {}", xs[0], ks[0])));
    }
    Ok((xs[0], ks[0], ks[1], ks[2]))
}

/// Valid cross-correlation: `out[t,f] = sum_{k,d} x[t+k,d] * kernels[k,d,f] + bias[f]`.
///
/// Zero input elements are skipped, which leaves the result unchanged and
/// makes padded sequences cheap.
pub fn conv1d_forward(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (l, k, din, f) = check(x, kernels, bias)?;
    let lout = l - k + 1;
    let mut out = Tensor::zeros(&[lout, f]);
    for t in 0..lout {
        out.row_mut(t).copy_from_slice(bias.data());
    }
    let w = kernels.data();
    let out_data = out.data_mut();
    for s in 0..l {
        let xr = x.row(s);
        // Output positions t = s - kk for kk in 0..k.
        for kk in 0..k.min(s + 1) {
            let t = s - kk;
            if t >= lout {
                continue;
            }
            let orow = &mut out_data[t * f..(t + 1) * f];
            for (d, &xv) in xr.iter().enumerate() {
                if xv != 0.0 {
                    axpy(xv, &w[(kk * din + d) * f..(kk * din + d + 1) * f], orow);
                }
            }
        }
    }
    debug_check_finite("conv1d output", out.data());
    Ok(out)
}

/// Accumulates kernel and bias gradients. If `dx` is given, the input
/// gradient is written into it (overwriting); with `dx_rows`, only the
/// selected rows are computed and the rest stay zero.
pub fn conv1d_backward(
    x: &Tensor,
    kernels: &Tensor,
    dout: &Tensor,
    dkernels: &mut Tensor,
    dbias: &mut Tensor,
    dx: Option<&mut Tensor>,
    dx_rows: Option<&[bool]>,
) {
    let (l, k, din) = (x.rows(), kernels.shape()[0], kernels.shape()[1]);
    let f = kernels.shape()[2];
    let lout = l - k + 1;
    for t in 0..lout {
        axpy(1.0, dout.row(t), dbias.data_mut());
    }
    let dw = dkernels.data_mut();
    for t in 0..lout {
        let g = dout.row(t);
        for kk in 0..k {
            for (d, &xv) in x.row(t + kk).iter().enumerate() {
                if xv != 0.0 {
                    axpy(xv, g, &mut dw[(kk * din + d) * f..(kk * din + d + 1) * f]);
                }
            }
        }
    }
    if let Some(dx) = dx {
        dx.fill(0.0);
        let w = kernels.data();
        for t in 0..lout {
            let g = dout.row(t);
            for kk in 0..k {
                if dx_rows.is_some_and(|r| !r[t + kk]) {
                    continue;
                }
                let row = dx.row_mut(t + kk);
                for (d, v) in row.iter_mut().enumerate() {
                    *v += dot(&w[(kk * din + d) * f..(kk * din + d + 1) * f], g);
                }
            }
        }
    }
}

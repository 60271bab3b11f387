use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::features::PAD;

/// Looks up `ids` in a `[V, D]` table. PAD always yields a zero row.
pub fn embedding_forward(table: &Tensor, ids: &[u32]) -> Result<Tensor> {
    if table.shape().len() != 2 {
        return Err(Error::Shape(format!("embedding table must be 2-d, got {:?}", table.shape())));
    }
    if ids.is_empty() {
        return Err(Error::Shape("empty id sequence".into()));
    }
    let dim = table.shape()[1];
    let mut out = Tensor::zeros(&[ids.len(), dim]);
    for (i, &id) in ids.iter().enumerate() {
        if id as usize >= table.rows() {
            return Err(Error::InvalidInput(format!("id {id} out of range for table with {} rows", table.rows())));
        }
        if id != PAD {
            out.row_mut(i).copy_from_slice(table.row(id as usize));
        }
    }
    Ok(out)
}

/// Adds `dout` rows into the rows of `dtable` they were read from; PAD
/// positions get nothing.
pub fn embedding_backward(ids: &[u32], dout: &Tensor, dtable: &mut Tensor) {
    for (i, &id) in ids.iter().enumerate() {
        if id != PAD {
            for (g, d) in dtable.row_mut(id as usize).iter_mut().zip(dout.row(i)) {
                *g += *d;
            }
        }
    }
}

//! Minimal fp64 layer library: exactly the layers the CNN+LSTM needs, each
//! with a hand-written backward pass checked against finite differences.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod dd;
pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod params;
pub mod pool;
pub mod reference;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{config_hash, read_checkpoint, write_checkpoint, CheckpointHeader, TensorInfo};
pub use conv::{conv1d_backward, conv1d_forward};
pub use dense::{dense_forward, dense_softmax_xent, dense_softmax_xent_backward, softmax, SoftmaxOutput};
pub use dropout::{dropout, dropout_mask};
pub use embedding::{embedding_backward, embedding_forward};
pub use gradcheck::{gradient_check, numeric_gradient, relative_error, DEFAULT_STEP};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmMasks, LstmWeights};
pub use params::ParamStore;
pub use pool::{global_maxpool_backward, global_maxpool_forward, maxpool1d_backward, maxpool1d_forward};
pub use rng::Rng;
pub use tensor::Tensor;

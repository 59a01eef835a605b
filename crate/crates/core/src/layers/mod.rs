//! Differentiable building blocks: 1-D convolution, pooling, dense layers,
//! and element-wise activations. Each layer caches what its backward pass
//! needs during forward; calling backward without a forward is a state error.

mod activation;
mod conv;
mod dense;
mod pool;

pub use activation::{sigmoid, ActKind, Activation};
pub use conv::{Conv1d, ConvSpec};
pub use dense::Dense;
pub use pool::{Pool1d, PoolKind, PoolSpec};

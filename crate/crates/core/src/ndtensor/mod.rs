//! Dense tensors with reverse-mode automatic differentiation.

mod optim;
mod tape;
mod tensor;

pub use optim::{Optimizer, OptimizerKind};
pub use tape::{softmax, Gradients, Tape, Var};
pub(crate) use tape::sigmoid_scalar;
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

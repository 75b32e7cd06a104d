//! Small reverse-mode automatic differentiation engine over dense `f64` tensors.

mod adam;
mod tape;
mod tensor;

pub use adam::{clip_grad_norm, AdamState};
pub use tape::{softmax_into, Gradients, Tape, Var};
pub use tensor::Tensor;

pub(crate) use tensor::dot;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("loss must be a scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
}

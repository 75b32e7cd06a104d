//! Semi-symbolic layers, the neural DNF-MT actor, MLP baselines, the Door
//! Corridor encoder and δ scheduling.

mod actor;
mod checkpoint;
mod encoder;
mod layer;
mod mlp;
mod model;
mod schedule;

pub use actor::{Actor, NdnfMtActor};
pub use checkpoint::{Checkpoint, LayerRecord, FORMAT_VERSION, RNG_ALGORITHM};
pub use encoder::{scale_cell, DcEncoder, CONV_CHANNELS, RAW_WIDTH, VIEW_CELLS};
pub use layer::{ss_bias, BiasMode, NodeKind, SemiSymbolicLayer};
pub use mlp::{orthogonal, Linear, Mlp, MlpActor, MlpCritic};
pub use model::{
    argmax, bivalent, check_logical_mutual_exclusivity, check_probabilistic_me, step, Activation, ForwardOutputs,
    NeuralDnfMt, TapeOutputs,
};
pub use schedule::DeltaScheduler;

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("input {0} outside [-1, 1]")]
    InputOutOfRange(f64),
    #[error("model uses step activations and cannot be differentiated")]
    NotDifferentiable,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

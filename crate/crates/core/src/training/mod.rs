//! PPO with the auxiliary losses of the neural DNF-MT actor, tabular
//! Q-learning, and distillation from an oracle policy.

mod config;
mod distil;
mod gae;
mod losses;
mod ppo;
mod qlearning;

pub use config::{ActorKind, AuxWeights, DeltaConfig, DistillationConfig, ModelConfig, PpoConfig, QLearningConfig};
pub use distil::{distil, kl_divergence, DistilOutcome};
pub use gae::gae;
pub use losses::{mt_loss, polar_loss, weight_snap_loss};
pub use ppo::{
    metrics_csv, ppo_loss, sample_categorical, train_ppo, train_ppo_from, IterationMetrics, LossBatch, PpoAgent,
    PpoOutcome, PpoTerms, METRICS_HEADER,
};
pub use qlearning::{q_learning, QTable};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::env::EnvError;
use crate::neural::NeuralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainingError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("non-finite value at iteration {iteration}: {detail}")]
    NonFinite { iteration: u64, detail: String },
    #[error("no improvement since epoch {epoch} (best loss {best}, current {current})")]
    Diverged { epoch: u64, best: f64, current: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

impl TrainingError {
    pub(crate) fn from_autodiff(e: AutodiffError, iteration: u64) -> Self {
        match e {
            AutodiffError::NonFinite { op } => {
                TrainingError::NonFinite { iteration, detail: format!("gradient of {op} is not finite") }
            }
            other => other.into(),
        }
    }
}

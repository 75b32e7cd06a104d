//! Rollout evaluation under different action-selection modes, policy
//! divergence, and the Blackjack reference policy and policy grids.

mod blackjack;
mod policy;
mod rollout;

pub use blackjack::{
    blackjack_grid_observations, blackjack_policy_grid, grid_csv, reference_blackjack_policy, BlackjackReference,
    GridCell,
};
pub use policy::{vocabulary, AspPolicy, Policy, ProblogPolicy, QTablePolicy, ScriptedPolicy, UniformPolicy};
pub use rollout::{
    evaluate, oracle_targets, policy_divergence, run_episode, ActionSelection, Episode, EvalReport, REPORT_CSV_HEADER,
};

use thiserror::Error;

use crate::env::EnvError;
use crate::logic::LogicError;
use crate::neural::NeuralError;
use crate::training::TrainingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("empty state set")]
    EmptyStateSet,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Training(#[from] TrainingError),
}

//! Turning a trained neural DNF-MT actor into a logic program: predicate
//! discretisation, pruning, thresholding, re-pruning, rule extraction and
//! definitions for invented predicates.

mod context;
mod extract;
mod pipeline;
mod predicates;
mod prune;
mod threshold;

pub use context::{context_observations, definition_observations, greedy_trajectory};
pub use extract::{extract_asp, extract_problog};
pub use pipeline::{run_pipeline, ExtractedProgram, PipelineOutput, PipelineReport, StageReport, STAGES_CSV_HEADER};
pub use predicates::{define_invented_predicates, Definition, PredicateDefinition, DEFAULT_MAX_LITERALS};
pub use prune::{prune, PruneReference};
pub use threshold::{threshold, threshold_candidates, FailureExample, ThresholdFailure, ThresholdOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::logic::LogicError;
use crate::neural::{DcEncoder, NeuralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostTrainError {
    #[error("the observation set is empty")]
    EmptyContext,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Which behaviour the processed model has to preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Greedy action on every observation; the result is an ASP program.
    Deterministic,
    /// Action distribution within `tau_prune`; the result is a ProbLog program.
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTrainConfig {
    pub tau_prune: f64,
    pub policy_kind: PolicyKind,
    /// Threshold candidates beyond this many are subsampled at evenly spaced
    /// quantiles (0 is always kept).
    pub max_threshold_candidates: usize,
    /// Largest body tried when defining an invented predicate.
    pub max_definition_literals: usize,
}

impl PostTrainConfig {
    pub fn new(policy_kind: PolicyKind) -> Self {
        Self { tau_prune: 1e-3, policy_kind, max_threshold_candidates: 512, max_definition_literals: DEFAULT_MAX_LITERALS }
    }

    pub fn validate(&self) -> Result<(), PostTrainError> {
        if !(self.tau_prune > 0.0 && self.tau_prune.is_finite()) {
            return Err(PostTrainError::Config(format!("tau_prune must be positive, got {}", self.tau_prune)));
        }
        if self.max_threshold_candidates < 2 {
            return Err(PostTrainError::Config("max_threshold_candidates must be at least 2".into()));
        }
        Ok(())
    }
}

/// Step 0: a copy of `encoder` whose predicates are read through sign.
pub fn discretise_predicates(encoder: &DcEncoder) -> DcEncoder {
    let mut e = encoder.clone();
    e.discretise();
    e
}

use std::sync::Mutex;

use super::EvalError;
use crate::env::{EnvSpec, Environment};
use crate::logic::{
    asp_evaluate, asp_select_action, obs_to_facts, problog_infer, AspProgram, ProblogProgram, Vocabulary,
};
use crate::neural::{Actor, DcEncoder};
use crate::training::QTable;

/// Anything that maps an observation to an action distribution.
pub trait Policy {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError>;

    /// Called before the first step of every episode.
    fn begin_episode(&self) {}
}

impl Policy for Actor {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        if obs.len() != self.obs_width() {
            return Err(EvalError::Mismatch(format!("actor expects {} values, got {}", self.obs_width(), obs.len())));
        }
        Ok(self.probs(obs)?)
    }
}

/// Q-table read through its environment's observation index.
pub struct QTablePolicy {
    table: QTable,
    env: Mutex<Box<dyn Environment>>,
    /// Mass spread uniformly over all actions; 0 is the greedy policy.
    pub epsilon: f64,
}

impl QTablePolicy {
    pub fn new(table: QTable, epsilon: f64) -> Self {
        let env = Mutex::new(table.env.build());
        Self { table, env, epsilon }
    }
}

impl Policy for QTablePolicy {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        let env = self.env.lock().expect("environment lock poisoned");
        let s = self.table.state_of(env.as_ref(), obs)?;
        Ok(self.table.distribution(s, self.epsilon))
    }
}

/// Turns a raw observation into the ±1 inputs of a logic program.
fn program_inputs(encoder: Option<&DcEncoder>, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
    match encoder {
        Some(e) => {
            let mut e = e.clone();
            e.discretise();
            Ok(e.forward_one(obs)?)
        }
        None => Ok(obs.to_vec()),
    }
}

/// Deterministic ASP policy: the unique true action of the stable model.
pub struct AspPolicy {
    pub program: AspProgram,
    pub vocab: Vocabulary,
    /// Predicate encoder (discretised on use) for environments with raw
    /// observations.
    pub encoder: Option<DcEncoder>,
}

impl AspPolicy {
    pub fn action(&self, obs: &[f64]) -> Result<usize, EvalError> {
        let x = program_inputs(self.encoder.as_ref(), obs)?;
        let facts = obs_to_facts(&x, &self.vocab.inputs)?;
        let v = asp_evaluate(&self.program, &facts)?;
        Ok(asp_select_action(&v, &self.vocab.actions)?)
    }
}

impl Policy for AspPolicy {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        let a = self.action(obs)?;
        let mut p = vec![0.0; self.vocab.actions.len()];
        p[a] = 1.0;
        Ok(p)
    }
}

/// ProbLog policy: the distribution of the single matching annotated
/// disjunction.
pub struct ProblogPolicy {
    pub program: ProblogProgram,
    pub vocab: Vocabulary,
    pub encoder: Option<DcEncoder>,
}

impl Policy for ProblogPolicy {
    fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        let x = program_inputs(self.encoder.as_ref(), obs)?;
        let facts = obs_to_facts(&x, &self.vocab.inputs)?;
        Ok(problog_infer(&self.program, &facts, &self.vocab.actions)?)
    }
}

/// A fixed action sequence, then the last action forever.
pub struct ScriptedPolicy {
    pub actions: Vec<usize>,
    pub num_actions: usize,
    step: Mutex<usize>,
}

impl ScriptedPolicy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Self {
        Self { actions, num_actions, step: Mutex::new(0) }
    }
}

impl Policy for ScriptedPolicy {
    fn distribution(&self, _obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut i = self.step.lock().expect("step lock poisoned");
        let a = self.actions[(*i).min(self.actions.len() - 1)];
        *i += 1;
        let mut p = vec![0.0; self.num_actions];
        p[a] = 1.0;
        Ok(p)
    }

    fn begin_episode(&self) {
        *self.step.lock().expect("step lock poisoned") = 0;
    }
}

/// Uniform random policy over `n` actions.
pub struct UniformPolicy(pub usize);

impl Policy for UniformPolicy {
    fn distribution(&self, _obs: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(vec![1.0 / self.0 as f64; self.0])
    }
}

/// Vocabulary of a model trained on `spec`.
pub fn vocabulary(spec: EnvSpec) -> Vocabulary {
    let env = spec.build();
    Vocabulary::with_action_names(
        spec.input_atoms().into_iter().map(Into::into).collect(),
        &env.action_names(),
    )
}

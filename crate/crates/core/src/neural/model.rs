use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{NodeKind, SemiSymbolicLayer};
use super::NeuralError;
use crate::autodiff::{softmax_into, Tape, Tensor, Var};

/// Node activation. `Step` is `h(x) = 1` if `x > 0`, else `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    Tanh,
    Step,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Step => step(x),
        }
    }
}

pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-sample outputs of a forward pass. Every tensor is `batch × width`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutputs {
    pub conj: Tensor,
    pub disj_raw: Tensor,
    pub disj_tanh: Tensor,
    pub mutex_tanh: Tensor,
    pub probs: Tensor,
}

/// Outputs of [`NeuralDnfMt::forward_tape`].
#[derive(Debug, Clone, Copy)]
pub struct TapeOutputs {
    pub conj: Var,
    pub disj_raw: Var,
    pub disj_tanh: Var,
    pub probs: Var,
    pub log_probs: Var,
}

/// Conjunctive semi-symbolic layer followed by a disjunctive layer whose
/// outputs are read through the mutex-tanh head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralDnfMt {
    pub conj: SemiSymbolicLayer,
    pub disj: SemiSymbolicLayer,
    pub conj_activation: Activation,
    pub disj_activation: Activation,
}

impl NeuralDnfMt {
    pub fn new(inputs: usize, conjunctions: usize, actions: usize, delta: f64, rng: &mut impl Rng) -> Self {
        Self {
            conj: SemiSymbolicLayer::new(NodeKind::Conjunction, inputs, conjunctions, delta, rng),
            disj: SemiSymbolicLayer::new(NodeKind::Disjunction, conjunctions, actions, delta, rng),
            conj_activation: Activation::Tanh,
            disj_activation: Activation::Tanh,
        }
    }

    pub fn from_layers(conj: SemiSymbolicLayer, disj: SemiSymbolicLayer) -> Result<Self, NeuralError> {
        if conj.kind != NodeKind::Conjunction || disj.kind != NodeKind::Disjunction {
            return Err(NeuralError::Shape("expected a conjunctive then a disjunctive layer".into()));
        }
        if conj.out_features() != disj.in_features() {
            return Err(NeuralError::Shape(format!(
                "conjunctive width {} does not match disjunctive input {}",
                conj.out_features(),
                disj.in_features()
            )));
        }
        Ok(Self { conj, disj, conj_activation: Activation::Tanh, disj_activation: Activation::Tanh })
    }

    pub fn inputs(&self) -> usize {
        self.conj.in_features()
    }

    pub fn conjunctions(&self) -> usize {
        self.conj.out_features()
    }

    pub fn actions(&self) -> usize {
        self.disj.out_features()
    }

    pub fn set_delta(&mut self, delta: f64) {
        self.conj.delta_magnitude = delta;
        self.disj.delta_magnitude = delta;
    }

    pub fn delta(&self) -> f64 {
        self.conj.delta_magnitude
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.conj.weights, &self.disj.weights]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.conj.weights, &mut self.disj.weights]
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NeuralError> {
        if x.cols() != self.inputs() {
            return Err(NeuralError::Shape(format!("expected {} inputs, got {:?}", self.inputs(), x.shape())));
        }
        if let Some(v) = x.data().iter().find(|v| !(v.abs() <= 1.0 + 1e-12)) {
            return Err(NeuralError::InputOutOfRange(*v));
        }
        Ok(())
    }

    /// Batched forward pass over `x` of shape `batch × inputs`.
    pub fn forward(&self, x: &Tensor) -> Result<ForwardOutputs, NeuralError> {
        self.check_input(x)?;
        let conj = self.conj.raw(x)?.map(|v| self.conj_activation.apply(v));
        let disj_raw = self.disj.raw(&conj)?;
        let disj_tanh = disj_raw.map(|v| self.disj_activation.apply(v));
        let (b, n) = (disj_raw.rows(), disj_raw.cols());
        let mut probs = Tensor::zeros(&[b, n]);
        for i in 0..b {
            softmax_into(disj_raw.row(i), probs.row_mut(i));
        }
        let mutex_tanh = probs.map(|p| 2.0 * p - 1.0);
        Ok(ForwardOutputs { conj, disj_raw, disj_tanh, mutex_tanh, probs })
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<ForwardOutputs, NeuralError> {
        self.forward(&Tensor::matrix(1, x.len(), x.to_vec()))
    }

    /// Action probabilities for a single input.
    pub fn probs(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        Ok(self.forward_one(x)?.probs.into_data())
    }

    /// Differentiable forward pass. `vars` are the tape handles of
    /// [`Self::params`], in order.
    pub fn forward_tape(&self, tape: &mut Tape, vars: &[Var], x: Var) -> Result<TapeOutputs, NeuralError> {
        let [wc, wd] = vars else {
            return Err(NeuralError::Shape(format!("expected 2 parameter handles, got {}", vars.len())));
        };
        if self.conj_activation != Activation::Tanh || self.disj_activation != Activation::Tanh {
            return Err(NeuralError::NotDifferentiable);
        }
        let zc = self.conj.raw_tape(tape, *wc, x)?;
        let conj = tape.tanh(zc)?;
        let disj_raw = self.disj.raw_tape(tape, *wd, conj)?;
        let disj_tanh = tape.tanh(disj_raw)?;
        let probs = tape.row_softmax(disj_raw)?;
        let log_probs = tape.row_log_softmax(disj_raw)?;
        Ok(TapeOutputs { conj, disj_raw, disj_tanh, probs, log_probs })
    }
}

/// Bivalent reading of activations: true iff the value is strictly positive.
pub fn bivalent(values: &[f64]) -> Vec<bool> {
    values.iter().map(|&v| v > 0.0).collect()
}

/// Exactly one action is true.
pub fn check_logical_mutual_exclusivity(b: &[bool]) -> bool {
    b.iter().filter(|&&v| v).count() == 1
}

/// Probabilities sum to one within 1e-9.
pub fn check_probabilistic_me(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::autodiff::{Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Conjunction,
    Disjunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BiasMode {
    #[default]
    MaxBias,
    MinBias,
}

/// Bias of a semi-symbolic node: `δ·(max|w| − Σ|w|)`, or with the smallest
/// nonzero magnitude in place of the max for [`BiasMode::MinBias`].
/// `delta` is the signed δ.
pub fn ss_bias(row: &[f64], delta: f64, mode: BiasMode) -> f64 {
    let sum: f64 = row.iter().map(|w| w.abs()).sum();
    let pick = match mode {
        BiasMode::MaxBias => row.iter().fold(0.0f64, |m, w| m.max(w.abs())),
        BiasMode::MinBias => {
            match row.iter().map(|w| w.abs()).filter(|&a| a > 0.0).min_by(f64::total_cmp) {
                Some(m) => m,
                None => return 0.0,
            }
        }
    };
    delta * (pick - sum)
}

/// Dense layer whose bias is derived from its weights so that each node acts
/// as a soft conjunction or disjunction of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiSymbolicLayer {
    pub kind: NodeKind,
    /// `out × in`
    pub weights: Tensor,
    pub delta_magnitude: f64,
    pub bias_mode: BiasMode,
}

impl SemiSymbolicLayer {
    /// Weights drawn uniformly from [−0.1, 0.1].
    pub fn new(kind: NodeKind, in_features: usize, out_features: usize, delta: f64, rng: &mut impl Rng) -> Self {
        let data = (0..in_features * out_features).map(|_| rng.gen_range(-0.1..=0.1)).collect();
        Self {
            kind,
            weights: Tensor::matrix(out_features, in_features, data),
            delta_magnitude: delta,
            bias_mode: BiasMode::MaxBias,
        }
    }

    pub fn from_weights(kind: NodeKind, weights: Tensor, delta: f64, bias_mode: BiasMode) -> Result<Self, NeuralError> {
        if weights.shape().len() != 2 {
            return Err(NeuralError::Shape(format!("layer weights must be 2-D, got {:?}", weights.shape())));
        }
        Ok(Self { kind, weights, delta_magnitude: delta, bias_mode })
    }

    pub fn in_features(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn signed_delta(&self) -> f64 {
        match self.kind {
            NodeKind::Conjunction => self.delta_magnitude,
            NodeKind::Disjunction => -self.delta_magnitude,
        }
    }

    pub fn biases(&self) -> Vec<f64> {
        let d = self.signed_delta();
        (0..self.out_features()).map(|j| ss_bias(self.weights.row(j), d, self.bias_mode)).collect()
    }

    /// Raw (pre-activation) outputs for a batch `x` of shape `batch × in`.
    pub fn raw(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        let mut z = x.matmul_t(&self.weights)?;
        let b = self.biases();
        let n = b.len();
        for (i, v) in z.data_mut().iter_mut().enumerate() {
            *v += b[i % n];
        }
        Ok(z)
    }

    /// Raw outputs for a single input vector, using precomputed biases.
    pub fn raw_one(&self, biases: &[f64], x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = crate::autodiff::dot(self.weights.row(j), x) + biases[j];
        }
    }

    /// Raw outputs on the tape, with the bias differentiated through the weights.
    pub fn raw_tape(&self, tape: &mut Tape, w: Var, x: Var) -> Result<Var, NeuralError> {
        let absw = tape.abs(w)?;
        let pick = match self.bias_mode {
            BiasMode::MaxBias => tape.row_max(absw)?,
            BiasMode::MinBias => tape.row_min_positive(absw)?,
        };
        let total = tape.row_sum(absw)?;
        let diff = tape.sub(pick, total)?;
        let beta = tape.scale(diff, self.signed_delta())?;
        let z = tape.matmul_t(x, w)?;
        Ok(tape.add_row(z, beta)?)
    }
}

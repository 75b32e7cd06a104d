use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{orthogonal, Linear};
use super::model::step;
use super::NeuralError;
use crate::autodiff::{Tape, Tensor, Var};

pub const VIEW_CELLS: usize = 9;
pub const CONV_CHANNELS: usize = 4;
pub const RAW_WIDTH: usize = 2 * VIEW_CELLS;

/// Maps a raw (object id, state id) cell into [−1, 1]².
pub fn scale_cell(object: f64, state: f64) -> [f64; 2] {
    [object / 2.5 - 1.0, 2.0 * state - 1.0]
}

/// Door Corridor predicate encoder: a 1×1 convolution (2 → 4 channels) with
/// tanh, then a dense layer over the 36 flattened features with tanh.
///
/// Raw observations are 18 values laid out channel-major: nine object ids,
/// then nine state ids, cells in row-major view order. The flattened conv
/// features are cell-major (`cell·4 + channel`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcEncoder {
    /// `4 × 2`
    pub conv_weight: Tensor,
    pub conv_bias: Tensor,
    pub dense: Linear,
    /// Final activation is `sign` (0 ↦ −1) instead of tanh.
    pub discretised: bool,
}

impl DcEncoder {
    pub fn new(predicates: usize, rng: &mut impl Rng) -> Self {
        Self {
            conv_weight: orthogonal(CONV_CHANNELS, 2, 2f64.sqrt(), rng),
            conv_bias: Tensor::zeros(&[CONV_CHANNELS]),
            dense: Linear::orthogonal(VIEW_CELLS * CONV_CHANNELS, predicates, 2f64.sqrt(), rng),
            discretised: false,
        }
    }

    pub fn zeros(predicates: usize) -> Self {
        Self {
            conv_weight: Tensor::zeros(&[CONV_CHANNELS, 2]),
            conv_bias: Tensor::zeros(&[CONV_CHANNELS]),
            dense: Linear::zeros(VIEW_CELLS * CONV_CHANNELS, predicates),
            discretised: false,
        }
    }

    pub fn predicates(&self) -> usize {
        self.dense.out_features()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        vec![&self.conv_weight, &self.conv_bias, &self.dense.weight, &self.dense.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.conv_weight, &mut self.conv_bias, &mut self.dense.weight, &mut self.dense.bias]
    }

    /// Turns a batch of raw observations (`batch × 18`) into scaled per-cell
    /// rows (`batch·9 × 2`).
    fn cells(obs: &Tensor) -> Result<Tensor, NeuralError> {
        if obs.cols() != RAW_WIDTH {
            return Err(NeuralError::Shape(format!("encoder expects {RAW_WIDTH} raw values, got {:?}", obs.shape())));
        }
        let b = obs.rows();
        let mut data = Vec::with_capacity(b * RAW_WIDTH);
        for i in 0..b {
            let row = obs.row(i);
            for c in 0..VIEW_CELLS {
                data.extend(scale_cell(row[c], row[VIEW_CELLS + c]));
            }
        }
        Ok(Tensor::matrix(b * VIEW_CELLS, 2, data))
    }

    /// Predicate activations for a batch of raw observations.
    pub fn forward(&self, obs: &Tensor) -> Result<Tensor, NeuralError> {
        let cells = Self::cells(obs)?;
        let mut conv = cells.matmul_t(&self.conv_weight)?;
        for row in conv.data_mut().chunks_mut(CONV_CHANNELS) {
            for (v, b) in row.iter_mut().zip(self.conv_bias.data()) {
                *v = (*v + b).tanh();
            }
        }
        let flat = conv.reshape(vec![obs.rows(), VIEW_CELLS * CONV_CHANNELS])?;
        let z = self.dense.forward(&flat)?;
        Ok(if self.discretised { z.map(step) } else { z.map(f64::tanh) })
    }

    pub fn forward_one(&self, obs: &[f64]) -> Result<Vec<f64>, NeuralError> {
        Ok(self.forward(&Tensor::matrix(1, obs.len(), obs.to_vec()))?.into_data())
    }

    pub fn forward_tape(&self, tape: &mut Tape, vars: &[Var], obs: &Tensor) -> Result<Var, NeuralError> {
        if self.discretised {
            return Err(NeuralError::NotDifferentiable);
        }
        let [cw, cb, dw, db] = vars else {
            return Err(NeuralError::Shape(format!("expected 4 parameter handles, got {}", vars.len())));
        };
        let cells = tape.constant(Self::cells(obs)?);
        let z = tape.matmul_t(cells, *cw)?;
        let z = tape.add_row(z, *cb)?;
        let h = tape.tanh(z)?;
        let flat = tape.reshape(h, vec![obs.rows(), VIEW_CELLS * CONV_CHANNELS])?;
        let z = self.dense.forward_tape(tape, *dw, *db, flat)?;
        Ok(tape.tanh(z)?)
    }

    /// Replaces the final tanh by sign.
    pub fn discretise(&mut self) {
        self.discretised = true;
    }
}

use serde::{Deserialize, Serialize};

use super::encoder::DcEncoder;
use super::mlp::MlpActor;
use super::model::NeuralDnfMt;
use super::NeuralError;
use crate::autodiff::{softmax_into, Tensor};

/// Neural DNF-MT actor, optionally preceded by a predicate encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdnfMtActor {
    pub encoder: Option<DcEncoder>,
    pub model: NeuralDnfMt,
}

impl NdnfMtActor {
    /// Inputs to the logical model for a raw observation.
    pub fn predicates(&self, obs: &[f64]) -> Result<Vec<f64>, NeuralError> {
        match &self.encoder {
            Some(enc) => enc.forward_one(obs),
            None => Ok(obs.to_vec()),
        }
    }

    pub fn predicates_batch(&self, obs: &Tensor) -> Result<Tensor, NeuralError> {
        match &self.encoder {
            Some(enc) => enc.forward(obs),
            None => Ok(obs.clone()),
        }
    }

    pub fn probs(&self, obs: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.model.probs(&self.predicates(obs)?)
    }
}

/// Any trainable policy network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Actor {
    NdnfMt(NdnfMtActor),
    Mlp(MlpActor),
}

impl Actor {
    pub fn probs(&self, obs: &[f64]) -> Result<Vec<f64>, NeuralError> {
        match self {
            Actor::NdnfMt(a) => a.probs(obs),
            Actor::Mlp(a) => a.probs(obs),
        }
    }

    /// Action probabilities for a batch of observations (`batch × width`).
    pub fn probs_batch(&self, obs: &Tensor) -> Result<Tensor, NeuralError> {
        match self {
            Actor::NdnfMt(a) => Ok(a.model.forward(&a.predicates_batch(obs)?)?.probs),
            Actor::Mlp(a) => {
                let logits = a.net.forward(obs)?;
                let mut p = Tensor::zeros(logits.shape());
                for i in 0..logits.rows() {
                    softmax_into(logits.row(i), p.row_mut(i));
                }
                Ok(p)
            }
        }
    }

    /// What a critic sharing this actor's front end sees: encoder predicates
    /// when there is an encoder, the observation otherwise.
    pub fn features(&self, obs: &Tensor) -> Result<Tensor, NeuralError> {
        match self {
            Actor::NdnfMt(a) => a.predicates_batch(obs),
            Actor::Mlp(_) => Ok(obs.clone()),
        }
    }

    pub fn feature_width(&self) -> usize {
        match self {
            Actor::NdnfMt(a) => a.model.inputs(),
            Actor::Mlp(a) => a.net.inputs(),
        }
    }

    pub fn actions(&self) -> usize {
        match self {
            Actor::NdnfMt(a) => a.model.actions(),
            Actor::Mlp(a) => a.net.outputs(),
        }
    }

    pub fn obs_width(&self) -> usize {
        match self {
            Actor::NdnfMt(NdnfMtActor { encoder: Some(_), .. }) => super::encoder::RAW_WIDTH,
            Actor::NdnfMt(a) => a.model.inputs(),
            Actor::Mlp(a) => a.net.inputs(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Actor::NdnfMt(a) => {
                let mut p = a.encoder.as_ref().map(|e| e.params()).unwrap_or_default();
                p.extend(a.model.params());
                p
            }
            Actor::Mlp(a) => a.net.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Actor::NdnfMt(a) => {
                let mut p = a.encoder.as_mut().map(|e| e.params_mut()).unwrap_or_default();
                p.extend(a.model.params_mut());
                p
            }
            Actor::Mlp(a) => a.net.params_mut(),
        }
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::actor::{Actor, NdnfMtActor};
use super::encoder::DcEncoder;
use super::layer::{BiasMode, NodeKind, SemiSymbolicLayer};
use super::mlp::{Linear, Mlp, MlpActor, MlpCritic};
use super::model::{Activation, NeuralDnfMt};
use super::NeuralError;
use crate::autodiff::Tensor;

pub const FORMAT_VERSION: u32 = 1;
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub kind: String,
    pub shape: Vec<usize>,
    pub weights: Vec<f64>,
}

impl LayerRecord {
    fn new(kind: &str, t: &Tensor) -> Self {
        Self { kind: kind.to_string(), shape: t.shape().to_vec(), weights: t.data().to_vec() }
    }

    fn tensor(&self) -> Result<Tensor, NeuralError> {
        Ok(Tensor::new(self.shape.clone(), self.weights.clone())?)
    }
}

/// Serialised network. JSON floats are written in shortest round-trip form,
/// so loading reproduces every weight bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: String,
    pub layers: Vec<LayerRecord>,
    pub delta_magnitude: f64,
    pub bias_mode: BiasMode,
    pub rng_algorithm: String,
    pub seed: u64,
    #[serde(default)]
    pub conj_activation: Activation,
    #[serde(default)]
    pub disj_activation: Activation,
    #[serde(default)]
    pub encoder_discretised: bool,
}

impl Checkpoint {
    fn blank(kind: &str, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model_kind: kind.to_string(),
            layers: Vec::new(),
            delta_magnitude: 1.0,
            bias_mode: BiasMode::MaxBias,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            seed,
            conj_activation: Activation::Tanh,
            disj_activation: Activation::Tanh,
            encoder_discretised: false,
        }
    }

    pub fn from_actor(actor: &Actor, seed: u64) -> Self {
        match actor {
            Actor::NdnfMt(a) => {
                let mut c = Self::blank("ndnf_mt", seed);
                if let Some(e) = &a.encoder {
                    c.layers.push(LayerRecord::new("conv1x1", &e.conv_weight));
                    c.layers.push(LayerRecord::new("conv1x1_bias", &e.conv_bias));
                    c.layers.push(LayerRecord::new("dense", &e.dense.weight));
                    c.layers.push(LayerRecord::new("dense_bias", &e.dense.bias));
                    c.encoder_discretised = e.discretised;
                }
                c.layers.push(LayerRecord::new("conjunction", &a.model.conj.weights));
                c.layers.push(LayerRecord::new("disjunction", &a.model.disj.weights));
                c.delta_magnitude = a.model.delta();
                c.bias_mode = a.model.conj.bias_mode;
                c.conj_activation = a.model.conj_activation;
                c.disj_activation = a.model.disj_activation;
                c
            }
            Actor::Mlp(a) => {
                let mut c = Self::blank("mlp_actor", seed);
                push_mlp(&mut c, &a.net);
                c
            }
        }
    }

    pub fn from_critic(critic: &MlpCritic, seed: u64) -> Self {
        let mut c = Self::blank("mlp_critic", seed);
        push_mlp(&mut c, &critic.net);
        c
    }

    fn check_version(&self) -> Result<(), NeuralError> {
        if self.format_version != FORMAT_VERSION {
            return Err(NeuralError::Checkpoint(format!("unsupported format_version {}", self.format_version)));
        }
        Ok(())
    }

    fn layer(&self, kind: &str) -> Result<Tensor, NeuralError> {
        self.layers
            .iter()
            .find(|l| l.kind == kind)
            .ok_or_else(|| NeuralError::Checkpoint(format!("missing layer {kind}")))?
            .tensor()
    }

    pub fn to_actor(&self) -> Result<Actor, NeuralError> {
        self.check_version()?;
        match self.model_kind.as_str() {
            "ndnf_mt" => {
                let encoder = if self.layers.iter().any(|l| l.kind == "conv1x1") {
                    Some(DcEncoder {
                        conv_weight: self.layer("conv1x1")?,
                        conv_bias: self.layer("conv1x1_bias")?,
                        dense: Linear { weight: self.layer("dense")?, bias: self.layer("dense_bias")? },
                        discretised: self.encoder_discretised,
                    })
                } else {
                    None
                };
                let d = self.delta_magnitude;
                let conj = SemiSymbolicLayer::from_weights(NodeKind::Conjunction, self.layer("conjunction")?, d, self.bias_mode)?;
                let disj = SemiSymbolicLayer::from_weights(NodeKind::Disjunction, self.layer("disjunction")?, d, self.bias_mode)?;
                let mut model = NeuralDnfMt::from_layers(conj, disj)?;
                model.conj_activation = self.conj_activation;
                model.disj_activation = self.disj_activation;
                Ok(Actor::NdnfMt(NdnfMtActor { encoder, model }))
            }
            "mlp_actor" => Ok(Actor::Mlp(MlpActor { net: self.mlp()? })),
            other => Err(NeuralError::Checkpoint(format!("not an actor checkpoint: {other}"))),
        }
    }

    pub fn to_critic(&self) -> Result<MlpCritic, NeuralError> {
        self.check_version()?;
        if self.model_kind != "mlp_critic" {
            return Err(NeuralError::Checkpoint(format!("not a critic checkpoint: {}", self.model_kind)));
        }
        Ok(MlpCritic { net: self.mlp()? })
    }

    fn mlp(&self) -> Result<Mlp, NeuralError> {
        let weights: Vec<_> = self.layers.iter().filter(|l| l.kind == "linear").collect();
        let biases: Vec<_> = self.layers.iter().filter(|l| l.kind == "linear_bias").collect();
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(NeuralError::Checkpoint("malformed linear layer list".into()));
        }
        let layers = weights
            .iter()
            .zip(&biases)
            .map(|(w, b)| Ok(Linear { weight: w.tensor()?, bias: b.tensor()? }))
            .collect::<Result<Vec<_>, NeuralError>>()?;
        Ok(Mlp { layers })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NeuralError> {
        serde_json::from_str(text).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        std::fs::write(path, self.to_json()).map_err(|e| NeuralError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        let text = std::fs::read_to_string(path).map_err(|e| NeuralError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn push_mlp(c: &mut Checkpoint, net: &Mlp) {
    for l in &net.layers {
        c.layers.push(LayerRecord::new("linear", &l.weight));
        c.layers.push(LayerRecord::new("linear_bias", &l.bias));
    }
}

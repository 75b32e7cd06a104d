use serde::{Deserialize, Serialize};

use super::TrainingError;
use crate::env::EnvSpec;
use crate::neural::DeltaScheduler;

/// Weights of the auxiliary losses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AuxWeights {
    /// Pushes encoder outputs towards ±1.
    pub embedding_reg_lambda: f64,
    /// Pushes disjunctive weights towards {−6, 0, 6}.
    pub dis_weight_reg_lambda: f64,
    /// Pushes conjunctive tanh outputs towards ±1.
    pub conj_tanh_out_reg_lambda: f64,
    /// Aligns tanh(d) with the mutex-tanh distribution.
    pub mt_lambda: f64,
}

/// δ schedule parameters under their config-file names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaConfig {
    pub initial_delta: f64,
    pub delta_decay_delay: u64,
    pub delta_decay_steps: u64,
    pub delta_decay_rate: f64,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self { initial_delta: 0.1, delta_decay_delay: 30, delta_decay_steps: 5, delta_decay_rate: 1.1 }
    }
}

impl DeltaConfig {
    pub fn scheduler(&self) -> DeltaScheduler {
        DeltaScheduler {
            initial: self.initial_delta,
            delay: self.delta_decay_delay,
            step: self.delta_decay_steps,
            rate: self.delta_decay_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub total_timesteps: u64,
    pub learning_rate: f64,
    pub learning_rate_actor: Option<f64>,
    pub learning_rate_critic: Option<f64>,
    pub num_envs: usize,
    pub num_steps: usize,
    pub anneal_lr: bool,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub num_minibatches: usize,
    pub update_epochs: usize,
    pub norm_adv: bool,
    pub clip_coef: f64,
    pub clip_vloss: bool,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    #[serde(flatten)]
    pub aux: AuxWeights,
    #[serde(flatten)]
    pub delta: DeltaConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            total_timesteps: 100_000,
            learning_rate: 1e-2,
            learning_rate_actor: None,
            learning_rate_critic: None,
            num_envs: 8,
            num_steps: 64,
            anneal_lr: true,
            gamma: 0.99,
            gae_lambda: 0.95,
            num_minibatches: 8,
            update_epochs: 4,
            norm_adv: true,
            clip_coef: 0.3,
            clip_vloss: true,
            ent_coef: 0.1,
            vf_coef: 1.0,
            max_grad_norm: 0.5,
            aux: AuxWeights { mt_lambda: 1e-3, ..AuxWeights::default() },
            delta: DeltaConfig::default(),
        }
    }
}

impl PpoConfig {
    /// Tuned settings for each environment family.
    pub fn preset(spec: EnvSpec) -> Self {
        let base = Self::default();
        match spec {
            EnvSpec::Switcheroo { .. } => base,
            EnvSpec::Blackjack => Self {
                total_timesteps: 300_000,
                learning_rate: 1e-3,
                num_envs: 32,
                num_steps: 16,
                num_minibatches: 16,
                aux: AuxWeights { dis_weight_reg_lambda: 1e-6, mt_lambda: 1e-3, ..AuxWeights::default() },
                delta: DeltaConfig { delta_decay_delay: 100, delta_decay_steps: 10, ..DeltaConfig::default() },
                ..base
            },
            EnvSpec::Taxi => Self {
                total_timesteps: 3_000_000,
                learning_rate: 2e-4,
                learning_rate_actor: Some(2e-4),
                learning_rate_critic: Some(2e-3),
                num_envs: 64,
                num_steps: 2048,
                gamma: 0.999,
                gae_lambda: 0.946,
                num_minibatches: 128,
                update_epochs: 8,
                clip_coef: 0.2,
                ent_coef: 0.003,
                vf_coef: 0.5,
                max_grad_norm: 0.5,
                aux: AuxWeights::default(),
                ..base
            },
            EnvSpec::DoorCorridor(_) => Self {
                total_timesteps: 300_000,
                aux: AuxWeights { embedding_reg_lambda: 3e-15, mt_lambda: 1e-3, ..AuxWeights::default() },
                delta: DeltaConfig { delta_decay_delay: 50, delta_decay_steps: 10, ..DeltaConfig::default() },
                ..base
            },
        }
    }

    pub fn batch_size(&self) -> usize {
        self.num_envs * self.num_steps
    }

    pub fn minibatch_size(&self) -> usize {
        self.batch_size() / self.num_minibatches
    }

    pub fn iterations(&self) -> u64 {
        self.total_timesteps / self.batch_size() as u64
    }

    pub fn actor_lr(&self) -> f64 {
        self.learning_rate_actor.unwrap_or(self.learning_rate)
    }

    pub fn critic_lr(&self) -> f64 {
        self.learning_rate_critic.unwrap_or(self.learning_rate)
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: String| Err(TrainingError::Config(m));
        if self.num_envs == 0 || self.num_steps == 0 || self.num_minibatches == 0 {
            return bad("num_envs, num_steps and num_minibatches must be positive".into());
        }
        if self.batch_size() % self.num_minibatches != 0 {
            return bad(format!(
                "batch size {} (num_envs × num_steps) is not divisible by num_minibatches {}",
                self.batch_size(),
                self.num_minibatches
            ));
        }
        if self.iterations() == 0 {
            return bad(format!("total_timesteps {} is smaller than one batch", self.total_timesteps));
        }
        for (name, v) in [
            ("learning_rate", self.actor_lr()),
            ("learning_rate_critic", self.critic_lr()),
            ("clip_coef", self.clip_coef),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]".into());
        }
        validate_delta(&self.delta)
    }
}

pub(crate) fn validate_delta(d: &DeltaConfig) -> Result<(), TrainingError> {
    if !(d.initial_delta > 0.0 && d.delta_decay_rate > 0.0 && d.delta_decay_steps > 0) {
        return Err(TrainingError::Config("delta schedule parameters must be positive".into()));
    }
    Ok(())
}

/// Which policy network to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    NdnfMt,
    Mlp,
}

/// Network sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub actor: ActorKind,
    pub num_conjunctions: usize,
    /// Hidden width of an MLP actor.
    pub actor_hidden: usize,
    pub critic_hidden: usize,
    /// Number of invented predicates when the environment needs an encoder.
    pub num_predicates: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { actor: ActorKind::NdnfMt, num_conjunctions: 4, actor_hidden: 4, critic_hidden: 64, num_predicates: 16 }
    }
}

impl ModelConfig {
    pub fn preset(spec: EnvSpec) -> Self {
        let base = Self::default();
        match spec {
            EnvSpec::Switcheroo { .. } => base,
            EnvSpec::Blackjack => Self { num_conjunctions: 64, ..base },
            EnvSpec::Taxi => Self { num_conjunctions: 64, actor_hidden: 64, ..base },
            EnvSpec::DoorCorridor(_) => Self { num_conjunctions: 12, ..base },
        }
    }
}

/// Settings for distilling a neural DNF-MT actor from an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillationConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epochs without improvement of the best loss before giving up; 0 disables.
    pub patience: usize,
    #[serde(flatten)]
    pub aux: AuxWeights,
    #[serde(flatten)]
    pub delta: DeltaConfig,
}

impl Default for DistillationConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 5000,
            learning_rate: 1e-4,
            patience: 0,
            aux: AuxWeights {
                dis_weight_reg_lambda: 1e-4,
                conj_tanh_out_reg_lambda: 1e-5,
                mt_lambda: 1e-4,
                ..AuxWeights::default()
            },
            delta: DeltaConfig { delta_decay_delay: 1000, delta_decay_steps: 100, ..DeltaConfig::default() },
        }
    }
}

impl DistillationConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(TrainingError::Config("batch_size and learning_rate must be positive".into()));
        }
        validate_delta(&self.delta)
    }
}

/// Tabular Q-learning settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QLearningConfig {
    pub episodes: u64,
    pub step_size: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which ε decays linearly.
    pub epsilon_decay_fraction: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self { episodes: 5_000, step_size: 0.1, gamma: 0.99, epsilon_start: 1.0, epsilon_end: 0.05, epsilon_decay_fraction: 0.8 }
    }
}

impl QLearningConfig {
    pub fn preset(spec: EnvSpec) -> Self {
        match spec {
            EnvSpec::Taxi => Self { episodes: 50_000, gamma: 0.999, ..Self::default() },
            EnvSpec::Blackjack => Self { episodes: 500_000, step_size: 0.01, gamma: 1.0, ..Self::default() },
            _ => Self::default(),
        }
    }

    pub fn epsilon(&self, episode: u64) -> f64 {
        let horizon = (self.episodes as f64 * self.epsilon_decay_fraction).max(1.0);
        let frac = (episode as f64 / horizon).min(1.0);
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(TrainingError::Config("step_size must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(TrainingError::Config("epsilon values must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

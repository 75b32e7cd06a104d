use std::collections::BTreeSet;

use ndnf_core::env::EnvSpec;
use ndnf_core::post_training::{PolicyKind, PostTrainConfig};
use ndnf_core::training::{DistillationConfig, ModelConfig, PpoConfig, QLearningConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Keys that belong to the run itself rather than to a component config.
const RUN_KEYS: [&str; 5] = ["env", "seed", "eval_episodes", "eval_seed", "oracle_epsilon"];

/// Fully resolved run configuration: the environment preset overlaid with
/// the keys of a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(with = "env_name")]
    pub env: EnvSpec,
    pub seed: u64,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    /// ε of the ε-greedy distribution a Q-table oracle teaches.
    pub oracle_epsilon: f64,
    pub model: ModelConfig,
    pub ppo: PpoConfig,
    pub qlearning: QLearningConfig,
    pub distillation: DistillationConfig,
    pub post_training: PostTrainConfig,
}

impl RunConfig {
    pub fn preset(env: EnvSpec) -> Self {
        let kind = match env {
            EnvSpec::Switcheroo { obs: ndnf_core::env::ObsMode::WallStatus, .. } | EnvSpec::Blackjack => {
                PolicyKind::Stochastic
            }
            _ => PolicyKind::Deterministic,
        };
        Self {
            env,
            seed: 0,
            eval_episodes: 10_000,
            eval_seed: 0,
            oracle_epsilon: 0.01,
            model: ModelConfig::preset(env),
            ppo: PpoConfig::preset(env),
            qlearning: QLearningConfig::preset(env),
            distillation: DistillationConfig::default(),
            post_training: PostTrainConfig::new(kind),
        }
    }

    /// Parses a flat TOML document. `env` is required; every other key must
    /// name a field of some component config and is applied to each one
    /// that has it.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table()) {
            return Err(CliError::Config(format!("sections are not supported, found [{k}]")));
        }
        let env: EnvSpec = table
            .get("env")
            .and_then(|v| v.as_str())
            .ok_or_else(|| CliError::Config("missing string key `env`".into()))?
            .parse()
            .map_err(|e| CliError::Config(format!("{e}")))?;
        let user: serde_json::Map<String, Value> = table
            .into_iter()
            .filter(|(k, _)| k != "env")
            .map(|(k, v)| Ok((k, serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))?)))
            .collect::<Result<_, CliError>>()?;

        let base = Self::preset(env);
        let mut used = BTreeSet::new();
        let model = overlay(&base.model, &user, &mut used)?;
        let ppo = overlay(&base.ppo, &user, &mut used)?;
        let qlearning = overlay(&base.qlearning, &user, &mut used)?;
        let distillation = overlay(&base.distillation, &user, &mut used)?;
        let post_training: PostTrainConfig = overlay(&base.post_training, &user, &mut used)?;
        let mut cfg = Self { model, ppo, qlearning, distillation, post_training, ..base };
        for key in RUN_KEYS.iter().skip(1) {
            if let Some(v) = user.get(*key) {
                used.insert(key.to_string());
                let bad = || CliError::Config(format!("`{key}` has the wrong type"));
                match *key {
                    "seed" => cfg.seed = v.as_u64().ok_or_else(bad)?,
                    "eval_episodes" => cfg.eval_episodes = v.as_u64().ok_or_else(bad)? as usize,
                    "eval_seed" => cfg.eval_seed = v.as_u64().ok_or_else(bad)?,
                    _ => cfg.oracle_epsilon = v.as_f64().ok_or_else(bad)?,
                }
            }
        }
        if let Some(k) = user.keys().find(|k| !used.contains(*k)) {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
        self.ppo.validate().map_err(|e| cfg(&e))?;
        self.qlearning.validate().map_err(|e| cfg(&e))?;
        self.distillation.validate().map_err(|e| cfg(&e))?;
        self.post_training.validate().map_err(|e| cfg(&e))?;
        if self.eval_episodes == 0 {
            return Err(CliError::Config("eval_episodes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.oracle_epsilon) {
            return Err(CliError::Config("oracle_epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

mod env_name {
    use ndnf_core::env::EnvSpec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(env: &EnvSpec, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(env)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EnvSpec, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Replaces the fields of `base` named in `user` and records which keys
/// were consumed.
fn overlay<T: Serialize + DeserializeOwned>(
    base: &T,
    user: &serde_json::Map<String, Value>,
    used: &mut BTreeSet<String>,
) -> Result<T, CliError> {
    let mut v = serde_json::to_value(base).expect("configs serialise");
    let obj = v.as_object_mut().expect("configs are structs");
    for (k, val) in user {
        if let Some(slot) = obj.get_mut(k) {
            *slot = val.clone();
            used.insert(k.clone());
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_sets_every_matching_section() {
        let c = RunConfig::from_toml("env = \"sc-mdp\"\ngamma = 0.9\ntotal_timesteps = 2048\nmt_lambda = 0.5\n").unwrap();
        assert_eq!(c.ppo.gamma, 0.9);
        assert_eq!(c.qlearning.gamma, 0.9);
        assert_eq!(c.ppo.total_timesteps, 2048);
        assert_eq!(c.ppo.aux.mt_lambda, 0.5);
        assert_eq!(c.distillation.aux.mt_lambda, 0.5);
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("env = \"sc-mdp\"\nclip_coeff = 0.2\n"), Err(CliError::Config(m)) if m.contains("clip_coeff")));
        assert!(matches!(RunConfig::from_toml("seed = 1\n"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("env = \"chess\"\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn minibatch_divisibility_is_validated() {
        let r = RunConfig::from_toml("env = \"sc-mdp\"\nnum_envs = 3\nnum_steps = 5\nnum_minibatches = 4\n");
        assert!(matches!(r, Err(CliError::Config(m)) if m.contains("divisible")));
    }

    #[test]
    fn optional_rates_and_policy_kind() {
        let c = RunConfig::from_toml("env = \"blackjack\"\nlearning_rate_actor = 0.01\npolicy_kind = \"deterministic\"\n").unwrap();
        assert_eq!(c.ppo.learning_rate_actor, Some(0.01));
        assert_eq!(c.post_training.policy_kind, PolicyKind::Deterministic);
        assert_eq!(RunConfig::preset(EnvSpec::Blackjack).post_training.policy_kind, PolicyKind::Stochastic);
    }
}

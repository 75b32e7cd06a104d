use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::Policy;
use super::EvalError;
use crate::env::{derive_seed, EnvSpec};
use crate::neural::argmax;

/// How an action is drawn from a policy's distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSelection {
    Argmax,
    Sample,
    EpsGreedy(f64),
}

impl ActionSelection {
    pub fn choose(&self, probs: &[f64], rng: &mut impl Rng) -> usize {
        match *self {
            ActionSelection::Argmax => argmax(probs),
            ActionSelection::Sample => crate::training::sample_categorical(probs, rng),
            ActionSelection::EpsGreedy(eps) => {
                if rng.gen::<f64>() < eps {
                    rng.gen_range(0..probs.len())
                } else {
                    argmax(probs)
                }
            }
        }
    }
}

impl std::fmt::Display for ActionSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionSelection::Argmax => f.write_str("argmax"),
            ActionSelection::Sample => f.write_str("sample"),
            ActionSelection::EpsGreedy(e) => write!(f, "eps-greedy({e})"),
        }
    }
}

impl std::str::FromStr for ActionSelection {
    type Err = EvalError;

    /// `argmax`, `sample`, or `eps-greedy` / `eps-greedy:0.2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EvalError::Mismatch(format!("unknown action selection {s:?}"));
        match s {
            "argmax" => Ok(Self::Argmax),
            "sample" => Ok(Self::Sample),
            "eps-greedy" => Ok(Self::EpsGreedy(0.1)),
            _ => {
                let eps: f64 = s.strip_prefix("eps-greedy:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(bad());
                }
                Ok(Self::EpsGreedy(eps))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub env: String,
    pub selection: String,
    pub seed: u64,
    pub episodes: usize,
    pub mean_return: f64,
    /// Sample standard deviation over √episodes.
    pub std_error: f64,
    /// Fraction of episodes with positive return.
    pub win_rate: f64,
    pub mean_length: f64,
    pub truncations: usize,
    /// Distinct initial observations among truncated episodes.
    pub unfinished_start_states: usize,
    pub policy_divergence: Option<f64>,
}

pub const REPORT_CSV_HEADER: &str =
    "env,selection,seed,episodes,mean_return,std_error,win_rate,mean_length,truncations,unfinished_start_states,policy_divergence";

impl EvalReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:?},{:?},{:?},{:?},{},{},{}",
            self.env,
            self.selection,
            self.seed,
            self.episodes,
            self.mean_return,
            self.std_error,
            self.win_rate,
            self.mean_length,
            self.truncations,
            self.unfinished_start_states,
            self.policy_divergence.map(|d| format!("{d:?}")).unwrap_or_default()
        )
    }
}

/// Per-episode outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub ret: f64,
    pub length: usize,
    pub truncated: bool,
    pub actions: Vec<usize>,
}

/// Runs one episode with the environment and selection streams of episode
/// `index` under `seed`.
pub fn run_episode(
    policy: &dyn Policy,
    spec: EnvSpec,
    selection: ActionSelection,
    seed: u64,
    index: u64,
) -> Result<(Vec<f64>, Episode), EvalError> {
    let mut env = spec.build();
    env.seed(derive_seed(seed, index));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, u64::MAX), index));
    policy.begin_episode();
    let start = env.reset();
    let mut obs = start.clone();
    let mut ep = Episode { ret: 0.0, length: 0, truncated: false, actions: Vec::new() };
    loop {
        let p = policy.distribution(&obs)?;
        if p.len() != env.num_actions() {
            return Err(EvalError::Mismatch(format!("policy gives {} actions, {spec} has {}", p.len(), env.num_actions())));
        }
        let a = selection.choose(&p, &mut rng);
        let s = env.step(a)?;
        ep.actions.push(a);
        ep.ret += s.reward;
        ep.length += 1;
        obs = s.obs;
        if s.terminated || s.truncated {
            ep.truncated = s.truncated && !s.terminated;
            return Ok((start, ep));
        }
    }
}

/// Mean return ± standard error over `episodes` episodes. Episode `i` uses
/// environment and selection streams derived from `(seed, i)`.
pub fn evaluate(
    policy: &dyn Policy,
    spec: EnvSpec,
    episodes: usize,
    selection: ActionSelection,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if episodes == 0 {
        return Err(EvalError::Mismatch("at least one episode is required".into()));
    }
    let mut returns = Vec::with_capacity(episodes);
    let mut lengths = 0usize;
    let mut truncations = 0;
    let mut unfinished = BTreeSet::new();
    for i in 0..episodes {
        let (start, ep) = run_episode(policy, spec, selection, seed, i as u64)?;
        returns.push(ep.ret);
        lengths += ep.length;
        if ep.truncated {
            truncations += 1;
            unfinished.insert(start.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        }
    }
    let n = episodes as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = if episodes > 1 { returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(EvalReport {
        env: spec.to_string(),
        selection: selection.to_string(),
        seed,
        episodes,
        mean_return: mean,
        std_error: var.sqrt() / n.sqrt(),
        win_rate: returns.iter().filter(|&&r| r > 0.0).count() as f64 / n,
        mean_length: lengths as f64 / n,
        truncations,
        unfinished_start_states: unfinished.len(),
        policy_divergence: None,
    })
}

/// The policy's action distribution on every observation, as distillation
/// targets.
pub fn oracle_targets(policy: &dyn Policy, observations: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EvalError> {
    observations.iter().map(|o| policy.distribution(o)).collect()
}

/// Fraction of `states` on which the two policies' argmax actions differ.
pub fn policy_divergence(a: &dyn Policy, b: &dyn Policy, states: &[Vec<f64>]) -> Result<f64, EvalError> {
    if states.is_empty() {
        return Err(EvalError::EmptyStateSet);
    }
    let mut differ = 0;
    for s in states {
        if argmax(&a.distribution(s)?) != argmax(&b.distribution(s)?) {
            differ += 1;
        }
    }
    Ok(differ as f64 / states.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::super::policy::{ScriptedPolicy, UniformPolicy};
    use super::*;
    use crate::env::{DcVariant, ObsMode, SwitcherooLayout};

    const SC: EnvSpec = EnvSpec::Switcheroo { layout: SwitcherooLayout::Sc, obs: ObsMode::StateOneHot };

    #[test]
    fn scripted_dc_is_minus_eight() {
        let p = ScriptedPolicy::new(vec![1, 3, 2, 3, 2, 3, 2, 2], 4);
        let r = evaluate(&p, EnvSpec::DoorCorridor(DcVariant::Dc), 5, ActionSelection::Argmax, 0).unwrap();
        assert_eq!(r.mean_return, -8.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn random_sc_policy_is_bounded_and_reproducible() {
        let r = evaluate(&UniformPolicy(2), SC, 200, ActionSelection::Sample, 4).unwrap();
        assert!(r.mean_return >= -50.0 && r.mean_return <= -3.0);
        assert_eq!(r, evaluate(&UniformPolicy(2), SC, 200, ActionSelection::Sample, 4).unwrap());
        let optimal = ScriptedPolicy::new(vec![1, 0, 1], 2);
        let best = evaluate(&optimal, SC, 10, ActionSelection::Argmax, 0).unwrap();
        assert!(best.mean_return > r.mean_return);
    }

    #[test]
    fn divergence_bounds() {
        let states = vec![vec![1.0, -1.0, -1.0, -1.0]];
        let left = ScriptedPolicy::new(vec![0], 2);
        let right = ScriptedPolicy::new(vec![1], 2);
        assert_eq!(policy_divergence(&left, &left, &states).unwrap(), 0.0);
        assert_eq!(policy_divergence(&left, &right, &states).unwrap(), 1.0);
        assert!(matches!(policy_divergence(&left, &right, &[]), Err(EvalError::EmptyStateSet)));
    }

    #[test]
    fn selection_parsing() {
        assert_eq!("argmax".parse::<ActionSelection>().unwrap(), ActionSelection::Argmax);
        assert_eq!("eps-greedy".parse::<ActionSelection>().unwrap(), ActionSelection::EpsGreedy(0.1));
        assert_eq!("eps-greedy:0.3".parse::<ActionSelection>().unwrap(), ActionSelection::EpsGreedy(0.3));
        assert!("eps-greedy:2".parse::<ActionSelection>().is_err());
    }
}

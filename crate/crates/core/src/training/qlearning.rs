use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::QLearningConfig;
use super::TrainingError;
use crate::env::{derive_seed, EnvSpec, Environment};
use crate::neural::argmax;

/// State-action values over an environment's discrete observation index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub env: EnvSpec,
    pub values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn new(env: EnvSpec, states: usize, actions: usize) -> Self {
        Self { env, values: vec![vec![0.0; actions]; states] }
    }

    pub fn states(&self) -> usize {
        self.values.len()
    }

    pub fn actions(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn greedy(&self, state: usize) -> usize {
        argmax(&self.values[state])
    }

    /// ε-greedy action distribution: `1 − ε + ε/|A|` on the greedy action.
    pub fn distribution(&self, state: usize, epsilon: f64) -> Vec<f64> {
        let n = self.actions();
        let mut p = vec![epsilon / n as f64; n];
        p[self.greedy(state)] += 1.0 - epsilon;
        p
    }

    /// Discrete index of `obs` in this table's environment.
    pub fn state_of(&self, env: &dyn Environment, obs: &[f64]) -> Result<usize, TrainingError> {
        env.discrete_obs(obs)
            .filter(|&s| s < self.states())
            .ok_or_else(|| TrainingError::Mismatch(format!("observation not indexable by the {} Q-table", self.env)))
    }
}

/// One-step Q-learning with a linearly decaying ε-greedy behaviour policy.
/// Truncated episodes bootstrap from the last state.
pub fn q_learning(spec: EnvSpec, cfg: &QLearningConfig, seed: u64) -> Result<QTable, TrainingError> {
    cfg.validate()?;
    let mut env = spec.build();
    let Some(states) = env.num_discrete_obs() else {
        return Err(TrainingError::Mismatch(format!("{spec} has no discrete observation index")));
    };
    env.seed(derive_seed(seed, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let actions = env.num_actions();
    let mut q = QTable::new(spec, states, actions);
    for ep in 0..cfg.episodes {
        let eps = cfg.epsilon(ep);
        let mut obs = env.reset();
        let mut s = q.state_of(env.as_ref(), &obs)?;
        loop {
            let a = if rng.gen::<f64>() < eps { rng.gen_range(0..actions) } else { q.greedy(s) };
            let step = env.step(a)?;
            obs = step.obs;
            let s2 = q.state_of(env.as_ref(), &obs)?;
            let target = if step.terminated {
                step.reward
            } else {
                step.reward + cfg.gamma * q.values[s2].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let v = &mut q.values[s][a];
            *v += cfg.step_size * (target - *v);
            if step.terminated || step.truncated {
                break;
            }
            s = s2;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ObsMode, SwitcherooLayout};

    #[test]
    fn sc_mdp_greedy_is_optimal() {
        let spec = EnvSpec::Switcheroo { layout: SwitcherooLayout::Sc, obs: ObsMode::StateOneHot };
        let q = q_learning(spec, &QLearningConfig::default(), 0).unwrap();
        let mut env = spec.build();
        let mut obs = env.reset();
        let mut ret = 0.0;
        loop {
            let s = q.state_of(env.as_ref(), &obs).unwrap();
            let st = env.step(q.greedy(s)).unwrap();
            ret += st.reward;
            obs = st.obs;
            if st.terminated || st.truncated {
                break;
            }
        }
        assert_eq!(ret, -3.0);
    }

    #[test]
    fn non_discrete_env_rejected() {
        let spec = EnvSpec::Switcheroo { layout: SwitcherooLayout::Sc, obs: ObsMode::WallStatus };
        let r = q_learning(spec, &QLearningConfig::default(), 0);
        assert!(matches!(r, Err(TrainingError::Mismatch(_))) || r.is_ok());
    }

    #[test]
    fn distribution_sums_to_one() {
        let mut q = QTable::new(EnvSpec::Taxi, 1, 6);
        q.values[0][3] = 1.0;
        let p = q.distribution(0, 0.1);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[3] - (0.9 + 0.1 / 6.0)).abs() < 1e-12);
    }
}

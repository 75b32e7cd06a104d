use super::{derive_seed, EnvError, EnvSpec, Environment};

/// Outcome of stepping every member once.
#[derive(Debug, Clone)]
pub struct VecStep {
    /// Next observations; a fresh reset observation where an episode ended.
    pub obs: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    /// Last observation of an episode that ended on this step.
    pub final_obs: Vec<Option<Vec<f64>>>,
    /// `(env index, episode return, episode length)` of finished episodes.
    pub completed: Vec<(usize, f64, usize)>,
}

/// Lock-step batch of environments of one family with automatic reset.
pub struct VecEnv {
    envs: Vec<Box<dyn Environment>>,
    obs: Vec<Vec<f64>>,
    returns: Vec<f64>,
    lengths: Vec<usize>,
}

impl VecEnv {
    /// `n` copies of `spec`, member `i` seeded from stream `i` of `seed`.
    pub fn new(spec: EnvSpec, n: usize, seed: u64) -> Result<Self, EnvError> {
        let envs = (0..n)
            .map(|i| {
                let mut e = spec.build();
                e.seed(derive_seed(seed, i as u64));
                e
            })
            .collect();
        Self::from_envs(envs)
    }

    pub fn from_envs(mut envs: Vec<Box<dyn Environment>>) -> Result<Self, EnvError> {
        let Some(first) = envs.first() else { return Err(EnvError::Heterogeneous) };
        let spec = first.spec();
        if envs.iter().any(|e| e.spec() != spec) {
            return Err(EnvError::Heterogeneous);
        }
        let obs = envs.iter_mut().map(|e| e.reset()).collect();
        let n = envs.len();
        Ok(Self { envs, obs, returns: vec![0.0; n], lengths: vec![0; n] })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn spec(&self) -> EnvSpec {
        self.envs[0].spec()
    }

    pub fn num_actions(&self) -> usize {
        self.envs[0].num_actions()
    }

    pub fn obs_width(&self) -> usize {
        self.envs[0].obs_width()
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.obs
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<VecStep, EnvError> {
        if actions.len() != self.envs.len() {
            return Err(EnvError::Config(format!("{} actions for {} environments", actions.len(), self.envs.len())));
        }
        let n = self.envs.len();
        let mut out = VecStep {
            obs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            terminated: Vec::with_capacity(n),
            truncated: Vec::with_capacity(n),
            final_obs: Vec::with_capacity(n),
            completed: Vec::new(),
        };
        for (i, (env, &a)) in self.envs.iter_mut().zip(actions).enumerate() {
            let s = env.step(a)?;
            self.returns[i] += s.reward;
            self.lengths[i] += 1;
            out.rewards.push(s.reward);
            out.terminated.push(s.terminated);
            out.truncated.push(s.truncated);
            if s.terminated || s.truncated {
                out.completed.push((i, self.returns[i], self.lengths[i]));
                self.returns[i] = 0.0;
                self.lengths[i] = 0;
                out.final_obs.push(Some(s.obs));
                self.obs[i] = env.reset();
            } else {
                out.final_obs.push(None);
                self.obs[i] = s.obs;
            }
            out.obs.push(self.obs[i].clone());
        }
        Ok(out)
    }
}

use serde::{Deserialize, Serialize};

use super::{signed_one_hot, EnvError, EnvSpec, EnvStep, Environment, SwitcherooLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObsMode {
    /// ±1 one-hot over corridor positions (fully observable).
    StateOneHot,
    /// Two ±1 values: wall to the left, wall to the right.
    WallStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitcherooConfig {
    pub layout: SwitcherooLayout,
    pub length: usize,
    pub start: usize,
    pub goal: usize,
    pub special_states: Vec<usize>,
    pub obs_mode: ObsMode,
    pub step_limit: usize,
}

impl SwitcherooConfig {
    pub fn preset(layout: SwitcherooLayout, obs_mode: ObsMode) -> Self {
        let (length, start, goal, special_states) = match layout {
            SwitcherooLayout::Sc => (4, 0, 3, vec![1]),
            SwitcherooLayout::Lc5 => (5, 0, 4, vec![1]),
            SwitcherooLayout::Lc11 => (11, 7, 3, vec![5, 6, 7, 8]),
        };
        Self { layout, length, start, goal, special_states, obs_mode, step_limit: 50 }
    }
}

/// One-dimensional corridor where some cells swap the effect of left and right.
/// Actions: 0 = left, 1 = right. Moving past either end leaves the agent in
/// place.
#[derive(Debug, Clone)]
pub struct Switcheroo {
    cfg: SwitcherooConfig,
    pos: usize,
    steps: usize,
    done: bool,
}

impl Switcheroo {
    pub fn new(cfg: SwitcherooConfig) -> Self {
        let pos = cfg.start;
        Self { cfg, pos, steps: 0, done: false }
    }

    pub fn config(&self) -> &SwitcherooConfig {
        &self.cfg
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn obs_at(&self, pos: usize) -> Vec<f64> {
        match self.cfg.obs_mode {
            ObsMode::StateOneHot => signed_one_hot(self.cfg.length, pos),
            ObsMode::WallStatus => {
                let b = |v: bool| if v { 1.0 } else { -1.0 };
                vec![b(pos == 0), b(pos + 1 == self.cfg.length)]
            }
        }
    }

    /// Non-goal positions reachable from the start without passing the goal.
    pub fn reachable_positions(&self) -> Vec<usize> {
        let mut seen = vec![false; self.cfg.length];
        let mut stack = vec![self.cfg.start];
        seen[self.cfg.start] = true;
        while let Some(p) = stack.pop() {
            if p == self.cfg.goal {
                continue;
            }
            for q in [p.saturating_sub(1), (p + 1).min(self.cfg.length - 1)] {
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        (0..self.cfg.length).filter(|&p| seen[p] && p != self.cfg.goal).collect()
    }

    /// Deduplicated observations over [`Self::reachable_positions`].
    pub fn all_observations(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for p in self.reachable_positions() {
            let o = self.obs_at(p);
            if !out.contains(&o) {
                out.push(o);
            }
        }
        out
    }
}

impl Environment for Switcheroo {
    fn spec(&self) -> EnvSpec {
        EnvSpec::Switcheroo { layout: self.cfg.layout, obs: self.cfg.obs_mode }
    }

    fn obs_width(&self) -> usize {
        match self.cfg.obs_mode {
            ObsMode::StateOneHot => self.cfg.length,
            ObsMode::WallStatus => 2,
        }
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn action_names(&self) -> Vec<String> {
        vec!["left".into(), "right".into()]
    }

    fn seed(&mut self, _seed: u64) {}

    fn reset(&mut self) -> Vec<f64> {
        self.pos = self.cfg.start;
        self.steps = 0;
        self.done = false;
        self.obs_at(self.pos)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep, EnvError> {
        if action > 1 {
            return Err(EnvError::InvalidAction { action, actions: 2 });
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let mut right = action == 1;
        if self.cfg.special_states.contains(&self.pos) {
            right = !right;
        }
        self.pos = if right { (self.pos + 1).min(self.cfg.length - 1) } else { self.pos.saturating_sub(1) };
        self.steps += 1;
        let terminated = self.pos == self.cfg.goal;
        let truncated = !terminated && self.steps >= self.cfg.step_limit;
        self.done = terminated || truncated;
        Ok(EnvStep { obs: self.obs_at(self.pos), reward: -1.0, terminated, truncated })
    }

    fn discrete_obs(&self, obs: &[f64]) -> Option<usize> {
        match self.cfg.obs_mode {
            ObsMode::StateOneHot => obs.iter().position(|&v| v > 0.0),
            ObsMode::WallStatus => Some(2 * usize::from(obs[0] > 0.0) + usize::from(obs[1] > 0.0)),
        }
    }

    fn num_discrete_obs(&self) -> Option<usize> {
        Some(match self.cfg.obs_mode {
            ObsMode::StateOneHot => self.cfg.length,
            ObsMode::WallStatus => 4,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(layout: SwitcherooLayout, actions: &[usize]) -> (f64, bool) {
        let mut env = Switcheroo::new(SwitcherooConfig::preset(layout, ObsMode::StateOneHot));
        env.reset();
        let mut ret = 0.0;
        for &a in actions {
            let s = env.step(a).unwrap();
            ret += s.reward;
            if s.terminated {
                return (ret, true);
            }
        }
        (ret, false)
    }

    #[test]
    fn optimal_paths() {
        assert_eq!(run(SwitcherooLayout::Sc, &[1, 0, 1]), (-3.0, true));
        assert_eq!(run(SwitcherooLayout::Lc5, &[1, 0, 1, 1]), (-4.0, true));
        assert_eq!(run(SwitcherooLayout::Lc11, &[1, 1, 1, 0]), (-4.0, true));
    }

    #[test]
    fn left_end_clamps() {
        let mut env = Switcheroo::new(SwitcherooConfig::preset(SwitcherooLayout::Sc, ObsMode::StateOneHot));
        env.reset();
        let s = env.step(0).unwrap();
        assert_eq!(env.position(), 0);
        assert_eq!(s.reward, -1.0);
        assert!(!s.terminated);
    }

    #[test]
    fn truncates_at_fifty() {
        let mut env = Switcheroo::new(SwitcherooConfig::preset(SwitcherooLayout::Sc, ObsMode::WallStatus));
        env.reset();
        for i in 1..=50 {
            let s = env.step(0).unwrap();
            assert_eq!(s.truncated, i == 50);
        }
        assert_eq!(env.step(0), Err(EnvError::EpisodeOver));
    }

    #[test]
    fn wall_status_encoding() {
        let env = Switcheroo::new(SwitcherooConfig::preset(SwitcherooLayout::Sc, ObsMode::WallStatus));
        assert_eq!(env.obs_at(0), vec![1.0, -1.0]);
        assert_eq!(env.obs_at(1), vec![-1.0, -1.0]);
        assert_eq!(env.obs_at(3), vec![-1.0, 1.0]);
        assert_eq!(env.all_observations().len(), 2);
    }

    #[test]
    fn lc11_never_sees_left_wall() {
        let env = Switcheroo::new(SwitcherooConfig::preset(SwitcherooLayout::Lc11, ObsMode::WallStatus));
        assert_eq!(env.reachable_positions(), vec![4, 5, 6, 7, 8, 9, 10]);
        assert!(env.all_observations().iter().all(|o| o[0] < 0.0));
    }
}

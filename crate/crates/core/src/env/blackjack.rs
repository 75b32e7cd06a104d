use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, EnvSpec, EnvStep, Environment};

pub const BLACKJACK_OBS_WIDTH: usize = 44;
const SUM_BINS: usize = 32;
const DEALER_BINS: usize = 10;

/// Observable part of a Blackjack state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlackjackState {
    pub player_sum: usize,
    pub dealer_card: usize,
    pub usable_ace: bool,
}

impl BlackjackState {
    /// ±1 encoding: 32 bits of player sum (0–31), 10 of dealer card (1–10),
    /// 2 of usable ace (no, yes).
    pub fn encode(&self) -> Vec<f64> {
        let mut v = vec![-1.0; BLACKJACK_OBS_WIDTH];
        v[self.player_sum.min(SUM_BINS - 1)] = 1.0;
        v[SUM_BINS + self.dealer_card - 1] = 1.0;
        v[SUM_BINS + DEALER_BINS + usize::from(self.usable_ace)] = 1.0;
        v
    }

    pub fn decode(obs: &[f64]) -> Option<Self> {
        let hot = |r: std::ops::Range<usize>| {
            let start = r.start;
            let mut it = obs[r].iter().enumerate().filter(|(_, &v)| v > 0.0);
            let first = it.next()?.0;
            it.next().is_none().then_some(start + first)
        };
        if obs.len() != BLACKJACK_OBS_WIDTH {
            return None;
        }
        Some(Self {
            player_sum: hot(0..SUM_BINS)?,
            dealer_card: hot(SUM_BINS..SUM_BINS + DEALER_BINS)? - SUM_BINS + 1,
            usable_ace: hot(SUM_BINS + DEALER_BINS..BLACKJACK_OBS_WIDTH)? == SUM_BINS + DEALER_BINS + 1,
        })
    }

    /// The decision states of the policy grid: sums 4–21, dealer 1–10, with a
    /// usable ace only for sums of at least 12.
    pub fn grid_states() -> Vec<Self> {
        let mut out = Vec::new();
        for usable_ace in [false, true] {
            for player_sum in 4..=21 {
                if usable_ace && player_sum < 12 {
                    continue;
                }
                for dealer_card in 1..=10 {
                    out.push(Self { player_sum, dealer_card, usable_ace });
                }
            }
        }
        out
    }
}

pub(crate) fn hand_value(cards: &[usize]) -> (usize, bool) {
    let sum: usize = cards.iter().sum();
    if cards.contains(&1) && sum + 10 <= 21 {
        (sum + 10, true)
    } else {
        (sum, false)
    }
}

/// Infinite-deck Blackjack with gymnasium's rules: the dealer draws to 17, an
/// ace counts 11 whenever that does not bust, and naturals pay the same as
/// any other win. Actions: 0 = stick, 1 = hit.
#[derive(Debug, Clone)]
pub struct Blackjack {
    rng: ChaCha8Rng,
    player: Vec<usize>,
    dealer: Vec<usize>,
    done: bool,
}

impl Default for Blackjack {
    fn default() -> Self {
        Self::new()
    }
}

impl Blackjack {
    pub fn new() -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(0), player: Vec::new(), dealer: Vec::new(), done: true }
    }

    fn draw(&mut self) -> usize {
        self.rng.gen_range(1..=13usize).min(10)
    }

    pub fn state(&self) -> BlackjackState {
        let (player_sum, usable_ace) = hand_value(&self.player);
        BlackjackState { player_sum, dealer_card: self.dealer[0], usable_ace }
    }

    /// Starts an episode from given hands; used by tests and scripted checks.
    pub fn reset_to(&mut self, player: Vec<usize>, dealer: Vec<usize>) -> Vec<f64> {
        self.player = player;
        self.dealer = dealer;
        self.done = false;
        self.state().encode()
    }

    pub fn atom_names() -> Vec<String> {
        let mut v: Vec<String> = (0..SUM_BINS).map(|i| format!("hand({i})")).collect();
        v.extend((1..=DEALER_BINS).map(|i| format!("dealer({i})")));
        v.push("no_usable_ace".into());
        v.push("usable_ace".into());
        v
    }
}

impl Environment for Blackjack {
    fn spec(&self) -> EnvSpec {
        EnvSpec::Blackjack
    }

    fn obs_width(&self) -> usize {
        BLACKJACK_OBS_WIDTH
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn action_names(&self) -> Vec<String> {
        vec!["stick".into(), "hit".into()]
    }

    fn seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn reset(&mut self) -> Vec<f64> {
        let d = vec![self.draw(), self.draw()];
        let p = vec![self.draw(), self.draw()];
        self.reset_to(p, d)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep, EnvError> {
        if action > 1 {
            return Err(EnvError::InvalidAction { action, actions: 2 });
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let reward;
        if action == 1 {
            let c = self.draw();
            self.player.push(c);
            if hand_value(&self.player).0 > 21 {
                self.done = true;
                reward = -1.0;
            } else {
                reward = 0.0;
            }
        } else {
            self.done = true;
            while hand_value(&self.dealer).0 < 17 {
                let c = self.draw();
                self.dealer.push(c);
            }
            let p = hand_value(&self.player).0;
            let d = hand_value(&self.dealer).0;
            let d = if d > 21 { 0 } else { d };
            reward = match p.cmp(&d) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => -1.0,
                std::cmp::Ordering::Equal => 0.0,
            };
        }
        Ok(EnvStep { obs: self.state().encode(), reward, terminated: self.done, truncated: false })
    }

    fn discrete_obs(&self, obs: &[f64]) -> Option<usize> {
        let s = BlackjackState::decode(obs)?;
        Some((s.player_sum * DEALER_BINS + s.dealer_card - 1) * 2 + usize::from(s.usable_ace))
    }

    fn num_discrete_obs(&self) -> Option<usize> {
        Some(SUM_BINS * DEALER_BINS * 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bust_after_hit() {
        let mut env = Blackjack::new();
        env.reset_to(vec![10, 10], vec![5, 5]);
        // Force a card: reseed until the next draw busts is awkward, so hit
        // repeatedly; a hard 20 busts on anything but an ace.
        env.seed(1);
        let mut s = env.step(1).unwrap();
        while !s.terminated {
            s = env.step(1).unwrap();
        }
        assert_eq!(s.reward, -1.0);
        assert!(env.state().player_sum > 21);
    }

    #[test]
    fn stick_twenty_against_nineteen() {
        let mut env = Blackjack::new();
        env.reset_to(vec![10, 10], vec![10, 9]);
        let s = env.step(0).unwrap();
        assert!(s.terminated);
        assert_eq!(s.reward, 1.0);
    }

    #[test]
    fn usable_ace_counts_high() {
        assert_eq!(hand_value(&[1, 6]), (17, true));
        assert_eq!(hand_value(&[1, 6, 10]), (17, false));
        assert_eq!(hand_value(&[1, 1]), (12, true));
    }

    #[test]
    fn encoding_has_three_hot_bits() {
        let mut env = Blackjack::new();
        env.seed(4);
        for _ in 0..200 {
            let obs = env.reset();
            assert_eq!(obs.iter().filter(|&&v| v > 0.0).count(), 3);
            let s = BlackjackState::decode(&obs).unwrap();
            assert_eq!(s, env.state());
        }
        assert_eq!(BlackjackState::grid_states().len(), 280);
        assert_eq!(Blackjack::atom_names().len(), 44);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{signed_one_hot, EnvError, EnvSpec, EnvStep, Environment};

pub const TAXI_STATES: usize = 500;
pub const TAXI_DEPOTS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
const IN_TAXI: usize = 4;
const STEP_LIMIT: usize = 200;

const MAP: [&str; 5] = ["|R: | : :G|", "| : | : : |", "| : : : : |", "| | : | : |", "|Y| : |B: |"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaxiState {
    pub row: usize,
    pub col: usize,
    /// Depot index 0–3, or 4 when the passenger is in the taxi.
    pub passenger: usize,
    pub destination: usize,
}

pub fn taxi_encode(row: usize, col: usize, passenger: usize, destination: usize) -> usize {
    ((row * 5 + col) * 5 + passenger) * 4 + destination
}

pub fn taxi_decode(index: usize) -> TaxiState {
    let destination = index % 4;
    let rest = index / 4;
    let passenger = rest % 5;
    let rest = rest / 5;
    TaxiState { row: rest / 5, col: rest % 5, passenger, destination }
}

fn open_east(row: usize, col: usize) -> bool {
    MAP[row].as_bytes()[2 * col + 2] == b':'
}

fn open_west(row: usize, col: usize) -> bool {
    MAP[row].as_bytes()[2 * col] == b':'
}

/// The 5×5 taxi domain. Actions: 0 down, 1 up, 2 right, 3 left, 4 pickup,
/// 5 dropoff.
#[derive(Debug, Clone)]
pub struct Taxi {
    rng: ChaCha8Rng,
    state: TaxiState,
    steps: usize,
    done: bool,
}

impl Default for Taxi {
    fn default() -> Self {
        Self::new()
    }
}

impl Taxi {
    pub fn new() -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(0),
            state: TaxiState { row: 0, col: 0, passenger: 0, destination: 1 },
            steps: 0,
            done: true,
        }
    }

    pub fn state(&self) -> TaxiState {
        self.state
    }

    pub fn obs_of(index: usize) -> Vec<f64> {
        signed_one_hot(TAXI_STATES, index)
    }

    /// The 300 possible initial states, in encoding order.
    pub fn start_states() -> Vec<usize> {
        (0..TAXI_STATES)
            .filter(|&i| {
                let s = taxi_decode(i);
                s.passenger < 4 && s.passenger != s.destination
            })
            .collect()
    }

    /// States an episode can visit before termination (passenger never
    /// waiting at its destination).
    pub fn reachable_states() -> Vec<usize> {
        (0..TAXI_STATES).filter(|&i| taxi_decode(i).passenger != taxi_decode(i).destination).collect()
    }

    pub fn reset_to(&mut self, index: usize) -> Vec<f64> {
        self.state = taxi_decode(index);
        self.steps = 0;
        self.done = false;
        Self::obs_of(index)
    }

    /// Pure transition function: (next state, reward, terminated).
    pub fn transition(s: TaxiState, action: usize) -> (TaxiState, f64, bool) {
        let mut n = s;
        let mut reward = -1.0;
        let mut terminated = false;
        let at = (s.row, s.col);
        match action {
            0 => n.row = (s.row + 1).min(4),
            1 => n.row = s.row.saturating_sub(1),
            2 if open_east(s.row, s.col) => n.col = (s.col + 1).min(4),
            3 if open_west(s.row, s.col) => n.col = s.col.saturating_sub(1),
            2 | 3 => {}
            4 => {
                if s.passenger < 4 && at == TAXI_DEPOTS[s.passenger] {
                    n.passenger = IN_TAXI;
                } else {
                    reward = -10.0;
                }
            }
            _ => {
                if s.passenger == IN_TAXI && at == TAXI_DEPOTS[s.destination] {
                    n.passenger = s.destination;
                    terminated = true;
                    reward = 20.0;
                } else if let (IN_TAXI, Some(d)) = (s.passenger, TAXI_DEPOTS.iter().position(|&p| p == at)) {
                    n.passenger = d;
                } else {
                    reward = -10.0;
                }
            }
        }
        (n, reward, terminated)
    }
}

impl Environment for Taxi {
    fn spec(&self) -> EnvSpec {
        EnvSpec::Taxi
    }

    fn obs_width(&self) -> usize {
        TAXI_STATES
    }

    fn num_actions(&self) -> usize {
        6
    }

    fn action_names(&self) -> Vec<String> {
        ["down", "up", "right", "left", "pickup", "dropoff"].iter().map(|s| s.to_string()).collect()
    }

    fn seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn reset(&mut self) -> Vec<f64> {
        let starts = Self::start_states();
        let i = starts[self.rng.gen_range(0..starts.len())];
        self.reset_to(i)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep, EnvError> {
        if action > 5 {
            return Err(EnvError::InvalidAction { action, actions: 6 });
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let (n, reward, terminated) = Self::transition(self.state, action);
        self.state = n;
        self.steps += 1;
        let truncated = !terminated && self.steps >= STEP_LIMIT;
        self.done = terminated || truncated;
        let s = self.state;
        Ok(EnvStep { obs: Self::obs_of(taxi_encode(s.row, s.col, s.passenger, s.destination)), reward, terminated, truncated })
    }

    fn discrete_obs(&self, obs: &[f64]) -> Option<usize> {
        obs.iter().position(|&v| v > 0.0)
    }

    fn num_discrete_obs(&self) -> Option<usize> {
        Some(TAXI_STATES)
    }
}

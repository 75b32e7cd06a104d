//! Seedable environments with the observation encodings used by the actors.

mod blackjack;
mod door_corridor;
mod switcheroo;
mod taxi;
mod vector;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blackjack::{Blackjack, BlackjackState, BLACKJACK_OBS_WIDTH};
pub use door_corridor::{
    raw_atoms, reference_encoder, DcVariant, DoorCorridor, Facing, Object, DC_STEP_LIMIT, REFERENCE_PREDICATES,
    VIEW_CELL_NAMES,
};
pub use switcheroo::{ObsMode, Switcheroo, SwitcherooConfig};
pub use taxi::{taxi_decode, taxi_encode, Taxi, TaxiState, TAXI_DEPOTS, TAXI_STATES};
pub use vector::{VecEnv, VecStep};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid action {action} (environment has {actions} actions)")]
    InvalidAction { action: usize, actions: usize },
    #[error("step called on a finished episode; reset first")]
    EpisodeOver,
    #[error("vector environment needs at least one member of a single family")]
    Heterogeneous,
    #[error("unknown environment {0:?}")]
    Unknown(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> EnvSpec;
    fn obs_width(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn action_names(&self) -> Vec<String>;
    /// Reseeds the environment's private random stream.
    fn seed(&mut self, seed: u64);
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<EnvStep, EnvError>;
    /// Index of an observation for tabular methods, when the observation space
    /// is finite and small.
    fn discrete_obs(&self, _obs: &[f64]) -> Option<usize> {
        None
    }
    fn num_discrete_obs(&self) -> Option<usize> {
        None
    }
}

/// Derives an independent seed for stream `index` of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitcherooLayout {
    Sc,
    Lc5,
    Lc11,
}

/// Every supported environment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvSpec {
    Switcheroo { layout: SwitcherooLayout, obs: ObsMode },
    Blackjack,
    Taxi,
    DoorCorridor(DcVariant),
}

impl EnvSpec {
    pub fn build(&self) -> Box<dyn Environment> {
        match *self {
            EnvSpec::Switcheroo { layout, obs } => Box::new(Switcheroo::new(SwitcherooConfig::preset(layout, obs))),
            EnvSpec::Blackjack => Box::new(Blackjack::new()),
            EnvSpec::Taxi => Box::new(Taxi::new()),
            EnvSpec::DoorCorridor(v) => Box::new(DoorCorridor::new(v)),
        }
    }

    pub fn all() -> Vec<EnvSpec> {
        let mut v = Vec::new();
        for layout in [SwitcherooLayout::Sc, SwitcherooLayout::Lc5, SwitcherooLayout::Lc11] {
            for obs in [ObsMode::StateOneHot, ObsMode::WallStatus] {
                v.push(EnvSpec::Switcheroo { layout, obs });
            }
        }
        v.extend([
            EnvSpec::Blackjack,
            EnvSpec::Taxi,
            EnvSpec::DoorCorridor(DcVariant::Dc),
            EnvSpec::DoorCorridor(DcVariant::DcT),
            EnvSpec::DoorCorridor(DcVariant::DcOt),
        ]);
        v
    }

    /// Atom names for the model inputs, used when printing logic programs.
    pub fn input_atoms(&self) -> Vec<String> {
        match *self {
            EnvSpec::Switcheroo { layout, obs } => match obs {
                ObsMode::StateOneHot => {
                    (0..SwitcherooConfig::preset(layout, obs).length).map(|i| format!("in_s_{i}")).collect()
                }
                ObsMode::WallStatus => vec!["left_wall_present".into(), "right_wall_present".into()],
            },
            EnvSpec::Blackjack => Blackjack::atom_names(),
            EnvSpec::Taxi => (0..TAXI_STATES).map(|i| format!("state({i})")).collect(),
            EnvSpec::DoorCorridor(_) => (0..REFERENCE_PREDICATES).map(|i| format!("a_{i}")).collect(),
        }
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match *self {
            EnvSpec::Switcheroo { layout, obs } => {
                let l = match layout {
                    SwitcherooLayout::Sc => "sc",
                    SwitcherooLayout::Lc5 => "lc5",
                    SwitcherooLayout::Lc11 => "lc11",
                };
                let o = match obs {
                    ObsMode::StateOneHot => "mdp",
                    ObsMode::WallStatus => "pomdp",
                };
                return write!(f, "{l}-{o}");
            }
            EnvSpec::Blackjack => "blackjack",
            EnvSpec::Taxi => "taxi",
            EnvSpec::DoorCorridor(DcVariant::Dc) => "dc",
            EnvSpec::DoorCorridor(DcVariant::DcT) => "dc-t",
            EnvSpec::DoorCorridor(DcVariant::DcOt) => "dc-ot",
        };
        f.write_str(s)
    }
}

impl FromStr for EnvSpec {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        EnvSpec::all().into_iter().find(|e| e.to_string() == lower).ok_or_else(|| EnvError::Unknown(s.to_string()))
    }
}

/// ±1 one-hot vector.
pub(crate) fn signed_one_hot(width: usize, hot: usize) -> Vec<f64> {
    let mut v = vec![-1.0; width];
    v[hot] = 1.0;
    v
}

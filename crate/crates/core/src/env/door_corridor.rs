use serde::{Deserialize, Serialize};

use super::{EnvError, EnvSpec, EnvStep, Environment};
use crate::autodiff::Tensor;
use crate::neural::{DcEncoder, Linear, CONV_CHANNELS, RAW_WIDTH, VIEW_CELLS};

pub const DC_STEP_LIMIT: usize = 270;
/// Width of the predicate layer of the Door Corridor encoder.
pub const REFERENCE_PREDICATES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DcVariant {
    /// Terminates on entering the goal.
    Dc,
    /// Terminates on toggling the goal from the cell in front of it.
    DcT,
    /// Terminates on toggling while standing on the goal.
    DcOt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Object {
    Unseen = 0,
    Empty = 1,
    Wall = 2,
    Door = 3,
    Agent = 4,
    Goal = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facing {
    North,
    East,
    South,
    West,
}

impl Facing {
    fn delta(self) -> (isize, isize) {
        match self {
            Facing::North => (-1, 0),
            Facing::East => (0, 1),
            Facing::South => (1, 0),
            Facing::West => (0, -1),
        }
    }

    fn right(self) -> Self {
        match self {
            Facing::North => Facing::East,
            Facing::East => Facing::South,
            Facing::South => Facing::West,
            Facing::West => Facing::North,
        }
    }

    fn left(self) -> Self {
        self.right().right().right()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    object: Object,
    closed: bool,
}

const ROWS: usize = 3;
const COLS: usize = 7;
const START: (usize, usize) = (1, 1);
const GOAL: (usize, usize) = (1, 5);

/// A walled corridor `start, door, door, door, goal` with the agent starting
/// on the start cell facing the wall to its north. Actions: 0 turn left,
/// 1 turn right, 2 forward, 3 toggle.
///
/// The observation is the 3×3 view in front of the agent (row 0 two cells
/// ahead, row 2 the agent's own row, columns left to right) as 18 raw values:
/// nine object ids, then nine state ids (0 open, 1 closed). Walls and closed
/// doors block sight; cells that are hidden or outside the grid read as
/// unseen.
#[derive(Debug, Clone)]
pub struct DoorCorridor {
    variant: DcVariant,
    grid: [[Cell; COLS]; ROWS],
    pos: (usize, usize),
    facing: Facing,
    steps: usize,
    done: bool,
}

impl DoorCorridor {
    pub fn new(variant: DcVariant) -> Self {
        let mut env = Self {
            variant,
            grid: [[Cell { object: Object::Wall, closed: false }; COLS]; ROWS],
            pos: START,
            facing: Facing::North,
            steps: 0,
            done: false,
        };
        env.reset();
        env
    }

    pub fn variant(&self) -> DcVariant {
        self.variant
    }

    fn cell_at(&self, r: isize, c: isize) -> Option<Cell> {
        if r < 0 || c < 0 || r >= ROWS as isize || c >= COLS as isize {
            return None;
        }
        Some(self.grid[r as usize][c as usize])
    }

    fn view_world(&self, vr: usize, vc: usize) -> (isize, isize) {
        let dist = 2 - vr as isize;
        let lat = vc as isize - 1;
        let (fr, fc) = self.facing.delta();
        let (rr, rc) = self.facing.right().delta();
        (self.pos.0 as isize + dist * fr + lat * rr, self.pos.1 as isize + dist * fc + lat * rc)
    }

    pub fn observe(&self) -> Vec<f64> {
        // view[vr][vc]; None = outside the grid
        let mut view = [[None; 3]; 3];
        for (vr, row) in view.iter_mut().enumerate() {
            for (vc, v) in row.iter_mut().enumerate() {
                let (r, c) = self.view_world(vr, vc);
                *v = self.cell_at(r, c);
            }
        }
        let see_through = |cell: Option<Cell>, is_agent: bool| -> bool {
            if is_agent {
                return true;
            }
            match cell {
                None => false,
                Some(Cell { object: Object::Wall, .. }) => false,
                Some(Cell { object: Object::Door, closed, .. }) => !closed,
                Some(_) => true,
            }
        };
        let mut mask = [[false; 3]; 3];
        mask[2][1] = true;
        for j in (0..3).rev() {
            for i in 0..2 {
                if !mask[j][i] || !see_through(view[j][i], (j, i) == (2, 1)) {
                    continue;
                }
                mask[j][i + 1] = true;
                if j > 0 {
                    mask[j - 1][i + 1] = true;
                    mask[j - 1][i] = true;
                }
            }
            for i in (1..3).rev() {
                if !mask[j][i] || !see_through(view[j][i], (j, i) == (2, 1)) {
                    continue;
                }
                mask[j][i - 1] = true;
                if j > 0 {
                    mask[j - 1][i - 1] = true;
                    mask[j - 1][i] = true;
                }
            }
        }
        let mut obs = vec![0.0; RAW_WIDTH];
        for vr in 0..3 {
            for vc in 0..3 {
                let k = vr * 3 + vc;
                let (object, closed) = if (vr, vc) == (2, 1) {
                    (Object::Agent, false)
                } else {
                    match (mask[vr][vc], view[vr][vc]) {
                        (true, Some(cell)) => (cell.object, cell.closed),
                        _ => (Object::Unseen, false),
                    }
                };
                obs[k] = object as u8 as f64;
                obs[VIEW_CELLS + k] = if closed { 1.0 } else { 0.0 };
            }
        }
        obs
    }

    /// Every distinct observation reachable from the start state, in BFS order.
    pub fn reachable_observations(variant: DcVariant) -> Vec<Vec<f64>> {
        let start = Self::new(variant);
        let key = |e: &Self| (e.pos, e.facing, [e.grid[1][2].closed, e.grid[1][3].closed, e.grid[1][4].closed]);
        let mut seen_states = std::collections::HashSet::new();
        let mut seen_obs = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        seen_states.insert(key(&start));
        queue.push_back(start);
        while let Some(env) = queue.pop_front() {
            let obs = env.observe();
            let bits: Vec<u64> = obs.iter().map(|v| v.to_bits()).collect();
            if seen_obs.insert(bits) {
                out.push(obs);
            }
            for a in 0..4 {
                let mut next = env.clone();
                next.steps = 0;
                let Ok(step) = next.step(a) else { continue };
                if step.terminated {
                    continue;
                }
                if seen_states.insert(key(&next)) {
                    queue.push_back(next);
                }
            }
        }
        out
    }

    fn ahead(&self) -> (isize, isize) {
        let (fr, fc) = self.facing.delta();
        (self.pos.0 as isize + fr, self.pos.1 as isize + fc)
    }
}

impl Environment for DoorCorridor {
    fn spec(&self) -> EnvSpec {
        EnvSpec::DoorCorridor(self.variant)
    }

    fn obs_width(&self) -> usize {
        RAW_WIDTH
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn action_names(&self) -> Vec<String> {
        ["turn_left", "turn_right", "forward", "toggle"].iter().map(|s| s.to_string()).collect()
    }

    fn seed(&mut self, _seed: u64) {}

    fn reset(&mut self) -> Vec<f64> {
        let wall = Cell { object: Object::Wall, closed: false };
        self.grid = [[wall; COLS]; ROWS];
        self.grid[1][1] = Cell { object: Object::Empty, closed: false };
        for c in 2..=4 {
            self.grid[1][c] = Cell { object: Object::Door, closed: true };
        }
        self.grid[GOAL.0][GOAL.1] = Cell { object: Object::Goal, closed: false };
        self.pos = START;
        self.facing = Facing::North;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<EnvStep, EnvError> {
        if action > 3 {
            return Err(EnvError::InvalidAction { action, actions: 4 });
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let mut terminated = false;
        let (ar, ac) = self.ahead();
        match action {
            0 => self.facing = self.facing.left(),
            1 => self.facing = self.facing.right(),
            2 => {
                if let Some(cell) = self.cell_at(ar, ac) {
                    let passable = match cell.object {
                        Object::Wall => false,
                        Object::Door => !cell.closed,
                        _ => true,
                    };
                    if passable {
                        self.pos = (ar as usize, ac as usize);
                        terminated = self.variant == DcVariant::Dc && self.pos == GOAL;
                    }
                }
            }
            _ => {
                if let Some(cell) = self.cell_at(ar, ac) {
                    match cell.object {
                        Object::Door => self.grid[ar as usize][ac as usize].closed = !cell.closed,
                        Object::Goal => terminated = self.variant == DcVariant::DcT,
                        _ => {}
                    }
                }
                if self.variant == DcVariant::DcOt && self.pos == GOAL {
                    terminated = true;
                }
            }
        }
        self.steps += 1;
        let truncated = !terminated && self.steps >= DC_STEP_LIMIT;
        self.done = terminated || truncated;
        Ok(EnvStep { obs: self.observe(), reward: -1.0, terminated, truncated })
    }
}

/// Names of the view cells, in observation order.
pub const VIEW_CELL_NAMES: [&str; 9] = [
    "top_left_corner",
    "two_step_ahead",
    "top_right_corner",
    "one_step_ahead_left",
    "one_step_ahead",
    "one_step_ahead_right",
    "curr_left",
    "curr_location",
    "curr_right",
];

const CELL_KINDS: [&str; 7] = ["unseen", "empty", "wall", "open_door", "closed_door", "agent", "goal"];

/// Raw observation atoms (`<cell>_<kind>`) and their truth in `obs`.
pub fn raw_atoms(obs: &[f64]) -> Vec<(String, bool)> {
    let mut out = Vec::with_capacity(VIEW_CELLS * CELL_KINDS.len());
    for (k, name) in VIEW_CELL_NAMES.iter().enumerate() {
        let object = obs[k] as usize;
        let closed = obs[VIEW_CELLS + k] > 0.5;
        let kind = match object {
            0 => "unseen",
            1 => "empty",
            2 => "wall",
            3 if closed => "closed_door",
            3 => "open_door",
            4 => "agent",
            _ => "goal",
        };
        for k2 in CELL_KINDS {
            out.push((format!("{name}_{k2}"), k2 == kind));
        }
    }
    out
}

/// Hand-built, already discretised encoder whose predicates have fixed
/// meanings (unused indices are constantly false):
///
/// | atom | true when |
/// |------|-----------|
/// | a_1  | goal one step ahead |
/// | a_2  | wall at the top-right corner of the view |
/// | a_3  | closed door one step ahead |
/// | a_5  | not standing on an open door and no closed door ahead |
/// | a_8  | cell two steps ahead unseen |
/// | a_11 | closed door directly to the agent's right |
/// | a_12 | wall two steps ahead |
///
/// `curr_location_open_door` is never observable because the agent's own cell
/// always reads as the agent, so a_5 reduces to "no closed door ahead".
pub fn reference_encoder() -> DcEncoder {
    const K: f64 = 50.0;
    // Per-cell units over scaled (object, state):
    // u0 = not unseen, u1 = object ≥ wall, u2 = object − 2·closed > 0, u3 = object + 2·closed > 0.8
    let conv_weight = Tensor::matrix(CONV_CHANNELS, 2, vec![K, 0.0, K, 0.0, K, -K, K, K]);
    let conv_bias = Tensor::vector(vec![0.8 * K, 0.4 * K, -K, 0.2 * K]);

    let feature = |cell: usize, unit: usize| cell * CONV_CHANNELS + unit;
    let wall = |cell: usize| vec![(feature(cell, 1), true), (feature(cell, 2), false), (feature(cell, 3), false)];
    let closed_door = |cell: usize| vec![(feature(cell, 1), true), (feature(cell, 2), false), (feature(cell, 3), true)];
    let goal = |cell: usize| vec![(feature(cell, 2), true), (feature(cell, 3), true)];
    let unseen = |cell: usize| vec![(feature(cell, 0), false)];

    let mut weight = Tensor::zeros(&[REFERENCE_PREDICATES, VIEW_CELLS * CONV_CHANNELS]);
    let mut bias = vec![-6.0; REFERENCE_PREDICATES];
    let mut conj = |p: usize, lits: Vec<(usize, bool)>| {
        for &(f, pos) in &lits {
            weight.set2(p, f, if pos { 6.0 } else { -6.0 });
        }
        bias[p] = 6.0 - 6.0 * lits.len() as f64;
    };
    conj(1, goal(4));
    conj(2, wall(2));
    conj(3, closed_door(4));
    conj(8, unseen(1));
    conj(11, closed_door(8));
    conj(12, wall(1));
    // a_5 = ¬closed_door(ahead): a disjunction of the negated literals.
    let lits: Vec<(usize, bool)> = closed_door(4).into_iter().map(|(f, pos)| (f, !pos)).collect();
    for &(f, pos) in &lits {
        weight.set2(5, f, if pos { 6.0 } else { -6.0 });
    }
    bias[5] = 6.0 * lits.len() as f64 - 6.0;

    DcEncoder { conv_weight, conv_bias, dense: Linear { weight, bias: Tensor::vector(bias) }, discretised: true }
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvDims, EnvPoint, StepOutcome};

/// Heaven-or-hell gridworld with a 3-cell approach corridor.
///
/// Cross-shaped map. The fork sits at the origin; two 3-cell arms run east
/// and west, ending in exits. One exit is heaven (+1, terminal), the other
/// hell (-1, terminal); which is which is drawn uniformly per episode. A
/// 6-cell corridor runs south of the fork: the agent starts 3 cells down it,
/// and a priest waits at its far end. Standing on the priest's cell is the
/// only place the observation reveals the heaven side, so the optimal route
/// walks away from the exits before committing to one.
///
/// Observation: one-hot over the 13 cells, then a 3-way reveal flag
/// (unknown / heaven-east / heaven-west). Ground state: scaled coordinates
/// and the heaven side. Privileged information: the same coordinates plus
/// the walking distance to heaven, a route-graded progress signal that is
/// cheap for an oracle to provide but not observable.
pub struct HeavenHell {
    max_steps: usize,
    /// Cell index into LAYOUT.
    cell: usize,
    /// +1: heaven at the east exit; -1: west.
    heaven_east: bool,
}

/// `(row, col)`: row grows southward from the fork, col eastward.
const LAYOUT: [(i32, i32); 13] = [
    (0, 0), // fork
    (0, 1),
    (0, 2),
    (0, 3), // east exit
    (0, -1),
    (0, -2),
    (0, -3), // west exit
    (1, 0),
    (2, 0),
    (3, 0), // start
    (4, 0),
    (5, 0),
    (6, 0), // priest
];

const START: usize = 9;
const PRIEST: usize = 12;
const EAST_EXIT: usize = 3;
const WEST_EXIT: usize = 6;


impl HeavenHell {
    pub fn new(max_steps: usize) -> Self {
        HeavenHell {
            max_steps,
            cell: START,
            heaven_east: true,
        }
    }

    fn cell_at(row: i32, col: i32) -> Option<usize> {
        LAYOUT.iter().position(|&(r, c)| r == row && c == col)
    }

    fn heaven_exit(&self) -> usize {
        if self.heaven_east {
            EAST_EXIT
        } else {
            WEST_EXIT
        }
    }

    /// Walking distance between two cells along the cross (both arms meet
    /// at the fork, so off-axis routes pass through it).
    fn walk_dist(from: usize, to: usize) -> i32 {
        let (r1, c1) = LAYOUT[from];
        let (r2, c2) = LAYOUT[to];
        if r1 == r2 && (c1 == c2 || r1 == 0) {
            return (c1 - c2).abs();
        }
        if c1 == c2 {
            return (r1 - r2).abs();
        }
        // Through the fork.
        r1.abs() + c1.abs() + r2.abs() + c2.abs()
    }

    fn point(&self) -> EnvPoint {
        let mut obs = vec![0.0; 16];
        obs[self.cell] = 1.0;
        if self.cell == PRIEST {
            obs[if self.heaven_east { 14 } else { 15 }] = 1.0;
        } else {
            obs[13] = 1.0;
        }
        let (r, c) = LAYOUT[self.cell];
        let side = if self.heaven_east { 1.0 } else { -1.0 };
        let state = vec![f64::from(r) / 3.0, f64::from(c) / 3.0, side];
        let dist = Self::walk_dist(self.cell, self.heaven_exit());
        let info = vec![
            f64::from(r) / 3.0,
            f64::from(c) / 3.0,
            f64::from(dist) / 9.0,
        ];
        EnvPoint {
            obs,
            info,
            state,
            state_index: Some(self.cell * 2 + usize::from(self.heaven_east)),
        }
    }
}

impl Env for HeavenHell {
    fn name(&self) -> &'static str {
        "heaven-hell-3"
    }

    fn dims(&self) -> EnvDims {
        EnvDims {
            obs: 16,
            info: 3,
            state: 3,
            num_actions: 4,
        }
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint {
        self.cell = START;
        self.heaven_east = rng.gen::<bool>();
        self.point()
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let _ = rng;
        let (r, c) = LAYOUT[self.cell];
        let (dr, dc) = match action {
            0 => (-1, 0),
            1 => (1, 0),
            2 => (0, 1),
            3 => (0, -1),
            _ => panic!("action {action} out of range"),
        };
        if let Some(next) = Self::cell_at(r + dr, c + dc) {
            self.cell = next;
        }
        let (reward, terminal) = if self.cell == EAST_EXIT || self.cell == WEST_EXIT {
            let won = self.cell == self.heaven_exit();
            (if won { 1.0 } else { -1.0 }, true)
        } else {
            (0.0, false)
        };
        StepOutcome {
            point: self.point(),
            reward,
            terminal,
        }
    }
}

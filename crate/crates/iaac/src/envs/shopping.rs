use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvDims, EnvPoint, StepOutcome};

/// 5x5 shopping task.
///
/// An item is hidden at a uniform cell each episode; the agent starts at a
/// uniform cell and never sees the item directly. Actions: four moves
/// (reward -1, bumps included), `query` (-2, which makes the *next*
/// observation show the item's cell), and `buy` (+10 and terminal on the
/// item's cell, -5 otherwise). Paying for a query early and remembering the
/// answer beats wandering.
///
/// Observation: agent cell one-hot (25), then the item cell one-hot (25,
/// all zero unless the previous action was a query), then an on-item flag.
/// Ground state: scaled agent and item coordinates. Privileged information:
/// the Manhattan distance from agent to item, scaled.
pub struct Shopping {
    max_steps: usize,
    agent: (i32, i32),
    item: (i32, i32),
    show_item: bool,
}

pub const SHOP_QUERY: usize = 4;
pub const SHOP_BUY: usize = 5;

const N: i32 = 5;

impl Shopping {
    pub fn new(max_steps: usize) -> Self {
        Shopping {
            max_steps,
            agent: (0, 0),
            item: (0, 0),
            show_item: false,
        }
    }

    fn cell(p: (i32, i32)) -> usize {
        (p.0 * N + p.1) as usize
    }

    fn point(&self) -> EnvPoint {
        let mut obs = vec![0.0; 51];
        obs[Self::cell(self.agent)] = 1.0;
        if self.show_item {
            obs[25 + Self::cell(self.item)] = 1.0;
        }
        if self.agent == self.item {
            obs[50] = 1.0;
        }
        let state = vec![
            f64::from(self.agent.0) / 4.0,
            f64::from(self.agent.1) / 4.0,
            f64::from(self.item.0) / 4.0,
            f64::from(self.item.1) / 4.0,
        ];
        let dist = (self.agent.0 - self.item.0).abs() + (self.agent.1 - self.item.1).abs();
        let info = vec![f64::from(dist) / 8.0];
        EnvPoint {
            obs,
            info,
            state,
            state_index: Some(Self::cell(self.agent) * 25 + Self::cell(self.item)),
        }
    }
}

impl Env for Shopping {
    fn name(&self) -> &'static str {
        "shopping-5"
    }

    fn dims(&self) -> EnvDims {
        EnvDims {
            obs: 51,
            info: 1,
            state: 4,
            num_actions: 6,
        }
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint {
        self.agent = (rng.gen_range(0..N), rng.gen_range(0..N));
        self.item = (rng.gen_range(0..N), rng.gen_range(0..N));
        self.show_item = false;
        self.point()
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let _ = rng;
        self.show_item = false;
        let (reward, terminal) = match action {
            0..=3 => {
                let (dr, dc) = [(-1, 0), (1, 0), (0, 1), (0, -1)][action];
                let next = (self.agent.0 + dr, self.agent.1 + dc);
                if (0..N).contains(&next.0) && (0..N).contains(&next.1) {
                    self.agent = next;
                }
                (-1.0, false)
            }
            SHOP_QUERY => {
                self.show_item = true;
                (-2.0, false)
            }
            SHOP_BUY => {
                if self.agent == self.item {
                    (10.0, true)
                } else {
                    (-5.0, false)
                }
            }
            _ => panic!("action {action} out of range"),
        };
        StepOutcome {
            point: self.point(),
            reward,
            terminal,
        }
    }
}

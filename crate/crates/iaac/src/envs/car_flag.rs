use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvDims, EnvPoint, StepOutcome};

/// Continuous car-and-flags task on the segment [-1.1, 1.1].
///
/// A goal flag sits at one end (+1 or -1, drawn per episode) and a penalty
/// flag at the other; reaching them ends the episode with +1 / -1. A third
/// flag at the origin marks an information zone: while |x| <= 0.2 the
/// observation reveals which end is the goal. Seven throttle actions apply
/// accelerations {0, +-0.0005, +-0.001, +-0.0015}; speed is clamped to
/// +-0.07. The car starts near the origin (x ~ U(-0.2, 0.2), v = 0).
///
/// Observation: position, zero placeholder where the state carries
/// velocity, and the reveal flag (0 outside the zone, otherwise the goal
/// end). Ground state: position, velocity, goal side. Privileged
/// information: the velocity, the dynamics variable the observation hides.
pub struct CarFlag {
    max_steps: usize,
    x: f64,
    v: f64,
    goal_right: bool,
}

const TRACK: f64 = 1.1;
const ZONE: f64 = 0.2;
const V_MAX: f64 = 0.07;
pub const CAR_FORCES: [f64; 7] = [-0.0015, -0.001, -0.0005, 0.0, 0.0005, 0.001, 0.0015];

impl CarFlag {
    pub fn new(max_steps: usize) -> Self {
        CarFlag {
            max_steps,
            x: 0.0,
            v: 0.0,
            goal_right: true,
        }
    }

    fn point(&self) -> EnvPoint {
        let side = if self.goal_right { 1.0 } else { -1.0 };
        let reveal = if self.x.abs() <= ZONE { side } else { 0.0 };
        EnvPoint {
            obs: vec![self.x, 0.0, reveal],
            info: vec![self.v / V_MAX],
            state: vec![self.x, self.v / V_MAX, side],
            state_index: None,
        }
    }
}

impl Env for CarFlag {
    fn name(&self) -> &'static str {
        "car-flag"
    }

    fn dims(&self) -> EnvDims {
        EnvDims {
            obs: 3,
            info: 1,
            state: 3,
            num_actions: CAR_FORCES.len(),
        }
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint {
        self.x = rng.gen_range(-ZONE..ZONE);
        self.v = 0.0;
        self.goal_right = rng.gen::<bool>();
        self.point()
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let _ = rng;
        self.v = (self.v + CAR_FORCES[action]).clamp(-V_MAX, V_MAX);
        self.x = (self.x + self.v).clamp(-TRACK, TRACK);
        let at_end = self.x.abs() >= TRACK;
        let (reward, terminal) = if at_end {
            let won = (self.x > 0.0) == self.goal_right;
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

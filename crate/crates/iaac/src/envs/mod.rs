//! Feature-level environments.
//!
//! An [`Env`] hands the agent three parallel views of each moment: the
//! observation (what a deployed policy would see), the privileged
//! information (available to critics during training only), and the ground
//! state (available to none of the deployed machinery; used by diagnostics
//! and the state-conditioned critic baseline). All three are flat f64
//! feature vectors so the same network code consumes any of them.

mod car_flag;
mod heaven_hell;
mod rollout;
mod shopping;
mod tabular;

pub use car_flag::CarFlag;
pub use heaven_hell::HeavenHell;
pub use rollout::{env_rollout, RolloutPolicy, UniformActions};
pub use shopping::Shopping;
pub use tabular::TabularEnv;

use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvDims {
    pub obs: usize,
    pub info: usize,
    pub state: usize,
    pub num_actions: usize,
}

/// The agent-visible bundle at one moment.
#[derive(Debug, Clone)]
pub struct EnvPoint {
    pub obs: Vec<f64>,
    pub info: Vec<f64>,
    pub state: Vec<f64>,
    /// Ground-state index for tabular environments.
    pub state_index: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: EnvPoint,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Env {
    fn name(&self) -> &'static str;
    fn dims(&self) -> EnvDims;
    /// Episode step cap; rollouts truncate after this many actions.
    fn max_steps(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint;
    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome;
}

/// Replaces the privileged-information view with the ground-state view.
///
/// Running the history-information critic on `WithStateAsInfo(env)` must act
/// exactly like the history-state critic on `env`; that equality is the
/// reduction the equivalence tests pin down.
pub struct WithStateAsInfo<E>(pub E);

impl<E: Env> Env for WithStateAsInfo<E> {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn dims(&self) -> EnvDims {
        let d = self.0.dims();
        EnvDims {
            info: d.state,
            ..d
        }
    }

    fn max_steps(&self) -> usize {
        self.0.max_steps()
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint {
        let mut p = self.0.reset(rng);
        p.info = p.state.clone();
        p
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let mut out = self.0.step(action, rng);
        out.point.info = out.point.state.clone();
        out
    }
}

use rand_chacha::ChaCha8Rng;

use super::Env;
use crate::rng::sample_categorical;
use crate::trajectory::{FinalPoint, Step, Trajectory};

/// A policy over feature observations. Implementations may carry recurrent
/// state between `act` calls; `begin` resets it.
pub trait RolloutPolicy {
    fn begin(&mut self);
    fn act(
        &mut self,
        obs: &[f64],
        prev_action: Option<usize>,
        num_actions: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize;
}

/// Uniform random actions.
pub struct UniformActions;

impl RolloutPolicy for UniformActions {
    fn begin(&mut self) {}

    fn act(
        &mut self,
        _obs: &[f64],
        _prev: Option<usize>,
        num_actions: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        sample_categorical(&vec![1.0; num_actions], rng)
    }
}

/// Runs one episode to termination or the environment's step cap.
pub fn env_rollout(
    env: &mut dyn Env,
    policy: &mut dyn RolloutPolicy,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let num_actions = env.dims().num_actions;
    let cap = env.max_steps();
    let mut point = env.reset(rng);
    policy.begin();
    let mut steps = Vec::new();
    let mut prev_action = None;
    let mut terminated = false;

    while !terminated && steps.len() < cap {
        let action = policy.act(&point.obs, prev_action, num_actions, rng);
        let out = env.step(action, rng);
        steps.push(Step {
            state: point.state,
            info: point.info,
            obs: point.obs,
            action,
            reward: out.reward,
            state_index: point.state_index,
        });
        point = out.point;
        prev_action = Some(action);
        terminated = out.terminal;
    }

    Trajectory {
        steps,
        last: Some(FinalPoint {
            state: point.state,
            info: point.info,
            obs: point.obs,
            state_index: point.state_index,
        }),
        terminated,
        truncated: !terminated,
    }
}

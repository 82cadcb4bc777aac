use rand_chacha::ChaCha8Rng;

use super::{Env, EnvDims, EnvPoint, StepOutcome};
use crate::pomdp::{sample_info, sample_obs, InformedPomdp, Value};
use crate::rng::sample_categorical;

/// Runs a tabular model as a feature-level environment.
///
/// Discrete observations and information values become one-hot vectors;
/// continuous channels pass through as-is. The ground state is always
/// one-hot alongside its index.
pub struct TabularEnv {
    pomdp: InformedPomdp,
    max_steps: usize,
    state: usize,
}

impl TabularEnv {
    pub fn new(pomdp: InformedPomdp, max_steps: usize) -> Self {
        TabularEnv {
            pomdp,
            max_steps,
            state: 0,
        }
    }

    pub fn pomdp(&self) -> &InformedPomdp {
        &self.pomdp
    }

    fn info_dim(&self) -> usize {
        match self.pomdp.num_infos() {
            Some(n) => n,
            None => match self.pomdp.info_channel() {
                crate::pomdp::InfoChannel::Gaussian { embeddings, .. } => embeddings[0].len(),
                crate::pomdp::InfoChannel::Discrete { .. } => unreachable!(),
            },
        }
    }

    fn obs_dim(&self) -> usize {
        match self.pomdp.num_obs() {
            Some(n) => n,
            None => match self.pomdp.obs_channel() {
                crate::pomdp::ObsChannel::Linear { map, .. } => map.len(),
                crate::pomdp::ObsChannel::Discrete { .. } => unreachable!(),
            },
        }
    }

    fn featurize(&self, value: &Value, dim: usize) -> Vec<f64> {
        match value {
            Value::Index(i) => {
                let mut v = vec![0.0; dim];
                v[*i] = 1.0;
                v
            }
            Value::Vector(v) => v.clone(),
        }
    }

    fn point(&self, info: &Value, obs: &Value) -> EnvPoint {
        let mut state = vec![0.0; self.pomdp.num_states()];
        state[self.state] = 1.0;
        EnvPoint {
            obs: self.featurize(obs, self.obs_dim()),
            info: self.featurize(info, self.info_dim()),
            state,
            state_index: Some(self.state),
        }
    }
}

impl Env for TabularEnv {
    fn name(&self) -> &'static str {
        "tabular"
    }

    fn dims(&self) -> EnvDims {
        EnvDims {
            obs: self.obs_dim(),
            info: self.info_dim(),
            state: self.pomdp.num_states(),
            num_actions: self.pomdp.num_actions(),
        }
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> EnvPoint {
        self.state = sample_categorical(self.pomdp.initial_dist(), rng);
        let info = sample_info(&self.pomdp, self.state, rng);
        let obs = sample_obs(&self.pomdp, &info, rng);
        self.point(&info, &obs)
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> StepOutcome {
        let reward = self.pomdp.reward(self.state, action);
        self.state = sample_categorical(self.pomdp.transition_row(self.state, action), rng);
        let info = sample_info(&self.pomdp, self.state, rng);
        let obs = sample_obs(&self.pomdp, &info, rng);
        StepOutcome {
            point: self.point(&info, &obs),
            reward,
            terminal: self.pomdp.is_terminal(self.state),
        }
    }
}

use rand_chacha::ChaCha8Rng;

use super::history::{History, Value};
use super::model::{InfoChannel, InformedPomdp, ObsChannel};
use super::policy::TabularPolicy;
use crate::rng::{sample_categorical, standard_normal};

/// One simulated step at the index level.
#[derive(Debug, Clone)]
pub struct TabStep {
    pub state: usize,
    pub info: Value,
    pub obs: Value,
    pub action: usize,
    pub reward: f64,
}

/// An index-level episode, including the point reached after the last action.
#[derive(Debug, Clone)]
pub struct TabTrajectory {
    pub steps: Vec<TabStep>,
    pub final_state: usize,
    pub final_info: Value,
    pub final_obs: Value,
    pub terminated: bool,
    pub truncated: bool,
}

impl TabTrajectory {
    /// The history after `t` actions (observations `0..=t`).
    pub fn history_at(&self, t: usize) -> History {
        if self.steps.is_empty() {
            assert_eq!(t, 0);
            return History::new(self.final_obs.clone());
        }
        let mut h = History::new(self.steps[0].obs.clone());
        for j in 0..t {
            let next_obs = if j + 1 < self.steps.len() {
                self.steps[j + 1].obs.clone()
            } else {
                self.final_obs.clone()
            };
            h.push_step(self.steps[j].action, next_obs);
        }
        h
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut g = 0.0;
        for s in self.steps.iter().rev() {
            g = s.reward + gamma * g;
        }
        g
    }
}

/// Draws `i ~ I(.|s)`.
pub fn sample_info(pomdp: &InformedPomdp, state: usize, rng: &mut ChaCha8Rng) -> Value {
    match pomdp.info_channel() {
        InfoChannel::Discrete { cardinality, probs } => {
            Value::Index(sample_categorical(&probs[state * cardinality..][..*cardinality], rng))
        }
        InfoChannel::Gaussian { embeddings, noise } => {
            let v = embeddings[state]
                .iter()
                .map(|&m| m + noise * standard_normal(rng))
                .collect();
            Value::Vector(v)
        }
    }
}

/// Draws `o ~ O(.|i)`. The state is deliberately not an argument: the
/// emission factorisation is enforced by the signature.
pub fn sample_obs(pomdp: &InformedPomdp, info: &Value, rng: &mut ChaCha8Rng) -> Value {
    match (pomdp.obs_channel(), info) {
        (ObsChannel::Discrete { cardinality, probs }, Value::Index(i)) => {
            Value::Index(sample_categorical(&probs[i * cardinality..][..*cardinality], rng))
        }
        (ObsChannel::Linear { map, noise }, Value::Vector(i)) => {
            let v = map
                .iter()
                .map(|row| {
                    let dot: f64 = row.iter().zip(i).map(|(a, b)| a * b).sum();
                    dot + noise * standard_normal(rng)
                })
                .collect();
            Value::Vector(v)
        }
        _ => panic!("information value kind does not match the observation channel"),
    }
}

/// Simulates one episode. Stops on entering a terminal state or after
/// `max_steps` actions, whichever comes first.
pub fn rollout(
    pomdp: &InformedPomdp,
    policy: &dyn TabularPolicy,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> TabTrajectory {
    let mut state = sample_categorical(pomdp.initial_dist(), rng);
    let mut info = sample_info(pomdp, state, rng);
    let mut obs = sample_obs(pomdp, &info, rng);
    let mut history = History::new(obs.clone());
    let mut steps = Vec::new();
    let mut terminated = pomdp.is_terminal(state);

    while !terminated && steps.len() < max_steps {
        let action = policy.sample(&history, pomdp.num_actions(), rng);
        let reward = pomdp.reward(state, action);
        let next = sample_categorical(pomdp.transition_row(state, action), rng);
        let next_info = sample_info(pomdp, next, rng);
        let next_obs = sample_obs(pomdp, &next_info, rng);
        steps.push(TabStep {
            state,
            info,
            obs,
            action,
            reward,
        });
        history.push_step(action, next_obs.clone());
        state = next;
        info = next_info;
        obs = next_obs;
        terminated = pomdp.is_terminal(state);
    }

    TabTrajectory {
        steps,
        final_state: state,
        final_info: info,
        final_obs: obs,
        terminated,
        truncated: !terminated,
    }
}

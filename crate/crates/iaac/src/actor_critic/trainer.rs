use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Env;
use crate::nn::{Categorical, IoDims, NetCheckpoint, SequenceNet};
use crate::rng::{derive_seed, stream, StreamState};
use crate::trajectory::{FinalPoint, Step, Trajectory};

use super::hyper::{side_input_dim, ArchConfig, CriticVariant, HyperParams, TrainError};
use super::log::LogRow;
use super::update::a2c_update;

pub const TRAIN_FORMAT_VERSION: u32 = 1;

/// Everything a training run is determined by, besides the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: CriticVariant,
    pub hyper: HyperParams,
    pub arch: ArchConfig,
    pub total_steps: u64,
    pub seed: u64,
}

/// Runs one episode with the actor sampling from its logits. The episode
/// ends at a terminal state or after `cap` steps, whichever comes first.
pub fn run_episode(
    env: &mut dyn Env,
    actor: &SequenceNet,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    collect_episode(env, actor, cap, u64::MAX, rng).expect("unlimited step allowance")
}

/// As [`run_episode`], but gives up and returns `None` if the episode would
/// run past `allow` steps; a `None` episode consumed RNG draws but must not
/// count toward any step budget.
fn collect_episode(
    env: &mut dyn Env,
    actor: &SequenceNet,
    cap: usize,
    allow: u64,
    rng: &mut ChaCha8Rng,
) -> Option<Trajectory> {
    let mut point = env.reset(rng);
    let mut state = actor.initial_state();
    let mut prev: Option<usize> = None;
    let mut steps: Vec<Step> = Vec::new();

    loop {
        if steps.len() >= cap {
            return Some(Trajectory {
                steps,
                last: Some(final_point(point)),
                terminated: false,
                truncated: true,
            });
        }
        if steps.len() as u64 >= allow {
            return None;
        }
        let logits = actor.step(&mut state, &point.obs, prev, None);
        let action = Categorical::from_logits(&logits).sample(rng);
        let outcome = env.step(action, rng);
        steps.push(Step {
            state: point.state,
            info: point.info,
            obs: point.obs,
            action,
            reward: outcome.reward,
            state_index: point.state_index,
        });
        if outcome.terminal {
            return Some(Trajectory {
                steps,
                last: Some(final_point(outcome.point)),
                terminated: true,
                truncated: false,
            });
        }
        point = outcome.point;
        prev = Some(action);
    }
}

fn final_point(p: crate::envs::EnvPoint) -> FinalPoint {
    FinalPoint {
        state: p.state,
        info: p.info,
        obs: p.obs,
        state_index: p.state_index,
    }
}

/// Runs the frozen actor for `episodes` episodes and returns them.
pub fn evaluate_policy(
    env: &mut dyn Env,
    actor: &SequenceNet,
    episodes: usize,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Trajectory> {
    (0..episodes)
        .map(|_| run_episode(env, actor, cap, rng))
        .collect()
}

/// The batched actor-critic training loop.
///
/// Each round collects complete episodes with the current actor, applies
/// one [`a2c_update`], and refreshes the frozen target critic whenever the
/// step counter crosses a multiple of the sync period. The step budget is
/// enforced during collection: an episode that would overrun it is
/// discarded unfinished and the run ends, so a budget smaller than one
/// episode produces no updates at all.
pub struct Trainer {
    pub actor: SequenceNet,
    pub critic: SequenceNet,
    target: SequenceNet,
    rng: ChaCha8Rng,
    rollout_seed: u64,
    variant: CriticVariant,
    hyper: HyperParams,
    total_steps: u64,
    steps_done: u64,
    episodes_done: u64,
    update_index: u64,
    synced_at: u64,
    out_of_budget: bool,
    recent_returns: VecDeque<f64>,
}

impl Trainer {
    pub fn new(dims: crate::envs::EnvDims, cfg: &TrainConfig) -> Result<Self, TrainError> {
        cfg.hyper.validate()?;
        if let Some(side) = cfg.variant.side_input() {
            if side_input_dim(cfg.variant, &dims) == Some(0) {
                return Err(TrainError::MissingInput {
                    variant: cfg.variant,
                    column: side.column_name(),
                });
            }
        }
        let actor_dims = IoDims {
            obs: dims.obs,
            num_actions: dims.num_actions,
            extra: None,
            out: dims.num_actions,
        };
        let critic_dims = IoDims {
            obs: dims.obs,
            num_actions: dims.num_actions,
            extra: side_input_dim(cfg.variant, &dims),
            out: 1,
        };
        let actor = SequenceNet::new(
            &cfg.arch.actor_spec(),
            actor_dims,
            &mut stream(cfg.seed, "train/actor-init"),
        );
        let critic = SequenceNet::new(
            &cfg.arch.critic_spec(cfg.variant),
            critic_dims,
            &mut stream(cfg.seed, "train/critic-init"),
        );
        let target = critic.clone();
        let rollout_seed = derive_seed(cfg.seed, "train/rollouts");
        Ok(Trainer {
            actor,
            critic,
            target,
            rng: StreamState {
                seed: rollout_seed,
                word_pos_hi: 0,
                word_pos_lo: 0,
            }
            .restore(),
            rollout_seed,
            variant: cfg.variant,
            hyper: cfg.hyper.clone(),
            total_steps: cfg.total_steps,
            steps_done: 0,
            episodes_done: 0,
            update_index: 0,
            synced_at: 0,
            out_of_budget: false,
            recent_returns: VecDeque::with_capacity(100),
        })
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    pub fn update_index(&self) -> u64 {
        self.update_index
    }

    pub fn variant(&self) -> CriticVariant {
        self.variant
    }

    /// The frozen critic copy used for regression targets.
    pub fn target(&self) -> &SequenceNet {
        &self.target
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    /// Mean undiscounted return over the last (up to) 100 episodes.
    pub fn rolling_return(&self) -> f64 {
        if self.recent_returns.is_empty() {
            return 0.0;
        }
        self.recent_returns.iter().sum::<f64>() / self.recent_returns.len() as f64
    }

    fn record_return(&mut self, value: f64) {
        if self.recent_returns.len() == 100 {
            self.recent_returns.pop_front();
        }
        self.recent_returns.push_back(value);
    }

    /// Collects one batch and applies one update. Returns `None` once the
    /// step budget is exhausted.
    pub fn update_once(&mut self, env: &mut dyn Env) -> Result<Option<LogRow>, TrainError> {
        if self.out_of_budget || self.steps_done >= self.total_steps {
            return Ok(None);
        }
        let cap = self.hyper.episode_cap.min(env.max_steps());
        let mut batch = Vec::with_capacity(self.hyper.episodes_per_update);
        for _ in 0..self.hyper.episodes_per_update {
            let allow = self.total_steps - self.steps_done;
            match collect_episode(env, &self.actor, cap, allow, &mut self.rng) {
                Some(traj) => {
                    self.steps_done += traj.len() as u64;
                    self.episodes_done += 1;
                    self.record_return(traj.total_reward());
                    batch.push(traj);
                }
                None => {
                    self.out_of_budget = true;
                    return Ok(None);
                }
            }
        }

        let entropy_weight = self.hyper.entropy_weight_at(self.steps_done);
        let stats = a2c_update(
            &batch,
            &mut self.actor,
            &mut self.critic,
            &self.target,
            self.variant,
            &self.hyper,
            entropy_weight,
        )?;
        self.update_index += 1;

        if self.steps_done / self.hyper.target_sync_period
            > self.synced_at / self.hyper.target_sync_period
        {
            self.target.store.copy_data_from(&self.critic.store);
            self.synced_at = self.steps_done;
        }

        Ok(Some(LogRow {
            update_index: self.update_index,
            env_steps: self.steps_done,
            rolling_return_100: self.rolling_return(),
            actor_loss: stats.actor_loss,
            critic_loss: stats.critic_loss,
            entropy_weight,
        }))
    }

    /// Trains until the step budget runs out, passing every log row to
    /// `on_row` (checkpointing hooks go there).
    pub fn run(
        &mut self,
        env: &mut dyn Env,
        mut on_row: impl FnMut(&Trainer, &LogRow),
    ) -> Result<Vec<LogRow>, TrainError> {
        let mut rows = Vec::new();
        while let Some(row) = self.update_once(env)? {
            on_row(self, &row);
            rows.push(row);
        }
        Ok(rows)
    }

    pub fn checkpoint(&self) -> TrainCheckpoint {
        TrainCheckpoint {
            version: TRAIN_FORMAT_VERSION,
            variant: self.variant,
            hyper: self.hyper.clone(),
            total_steps: self.total_steps,
            steps_done: self.steps_done,
            episodes_done: self.episodes_done,
            update_index: self.update_index,
            synced_at: self.synced_at,
            out_of_budget: self.out_of_budget,
            recent_returns: self.recent_returns.iter().copied().collect(),
            rng: StreamState::capture(self.rollout_seed, &self.rng),
            actor: NetCheckpoint::capture(&self.actor),
            critic: NetCheckpoint::capture(&self.critic),
            target: NetCheckpoint::capture(&self.target),
        }
    }

    /// Rebuilds a trainer mid-run; continuation is step-for-step identical
    /// to the uninterrupted run because the RNG position is restored too.
    pub fn restore(ck: &TrainCheckpoint) -> Result<Self, TrainError> {
        if ck.version != TRAIN_FORMAT_VERSION {
            return Err(TrainError::BadHyper(format!(
                "unsupported training checkpoint version {}",
                ck.version
            )));
        }
        ck.hyper.validate()?;
        let mut recent = VecDeque::with_capacity(100);
        recent.extend(ck.recent_returns.iter().copied());
        Ok(Trainer {
            actor: ck.actor.restore()?,
            critic: ck.critic.restore()?,
            target: ck.target.restore()?,
            rng: ck.rng.restore(),
            rollout_seed: ck.rng.seed,
            variant: ck.variant,
            hyper: ck.hyper.clone(),
            total_steps: ck.total_steps,
            steps_done: ck.steps_done,
            episodes_done: ck.episodes_done,
            update_index: ck.update_index,
            synced_at: ck.synced_at,
            out_of_budget: ck.out_of_budget,
            recent_returns: recent,
        })
    }
}

/// Serializable snapshot of a [`Trainer`] between updates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCheckpoint {
    pub version: u32,
    pub variant: CriticVariant,
    pub hyper: HyperParams,
    pub total_steps: u64,
    pub steps_done: u64,
    pub episodes_done: u64,
    pub update_index: u64,
    pub synced_at: u64,
    pub out_of_budget: bool,
    pub recent_returns: Vec<f64>,
    pub rng: StreamState,
    pub actor: NetCheckpoint,
    pub critic: NetCheckpoint,
    pub target: NetCheckpoint,
}

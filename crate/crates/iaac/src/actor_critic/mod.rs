//! Advantage actor-critic with interchangeable critic inputs.
//!
//! The actor is always a recurrent policy over observations and past
//! actions. The critic comes in four wirings ([`CriticVariant`]): history
//! only, ground state only, history plus state, and history plus the
//! privileged signal. Advantages are one-step TD errors; a frozen target
//! copy of the critic stabilizes the regression targets; entropy
//! regularization decays linearly. [`Trainer`] owns the loop, the budget
//! accounting, and exact-resume checkpoints.

mod hyper;
mod log;
mod trainer;
mod update;

pub use hyper::{
    side_input_dim, td_error, ArchConfig, CriticVariant, HyperParams, SideInput, TrainError,
};
pub use log::{format_log_row, read_log_csv, write_log_csv, LogRow, LOG_HEADER};
pub use trainer::{
    evaluate_policy, run_episode, TrainCheckpoint, TrainConfig, Trainer, TRAIN_FORMAT_VERSION,
};
pub use update::{a2c_update, actor_input, critic_input, UpdateStats};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Env, TabularEnv};
    use crate::nn::{Categorical, SequenceNet};
    use crate::pomdp::{InfoChannel, InformedPomdp, ObsChannel};
    use crate::rng::stream;
    use crate::trajectory::{FinalPoint, Step, Trajectory};

    fn tiny_pomdp(rewards: &[f64]) -> InformedPomdp {
        // 2 states, 2 actions, self-identifying info, noisy observations.
        InformedPomdp::new(
            2,
            2,
            vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5, 0.9, 0.1],
            rewards.to_vec(),
            vec![0.6, 0.4],
            0.9,
            InfoChannel::Discrete {
                cardinality: 2,
                probs: vec![1.0, 0.0, 0.0, 1.0],
            },
            ObsChannel::Discrete {
                cardinality: 2,
                probs: vec![0.8, 0.2, 0.1, 0.9],
            },
            vec![false, false],
        )
        .unwrap()
    }

    fn small_arch() -> ArchConfig {
        ArchConfig {
            encoder_width: 4,
            head: vec![5],
            ..ArchConfig::default()
        }
    }

    fn config(variant: CriticVariant, total_steps: u64, seed: u64) -> TrainConfig {
        TrainConfig {
            variant,
            hyper: HyperParams {
                episode_cap: 6,
                ..HyperParams::default()
            },
            arch: small_arch(),
            total_steps,
            seed,
        }
    }

    #[test]
    fn zero_rewards_and_zero_critic_leave_only_the_entropy_force() {
        let pomdp = tiny_pomdp(&[0.0, 0.0, 0.0, 0.0]);
        let mut env = TabularEnv::new(pomdp, 6);
        let cfg = config(CriticVariant::HistoryInformation, 1_000, 3);
        let mut tr = Trainer::new(env.dims(), &cfg).unwrap();

        // Zero critic: every value, delta, and regression target is zero
        // (zero rewards close the loop).
        let zeros = vec![0.0; tr.critic.store.param_count()];
        tr.critic.store.write_flat(&zeros);
        let target = tr.critic.clone();

        let mut rng = stream(3, "episodes");
        let batch: Vec<Trajectory> = (0..2)
            .map(|_| run_episode(&mut env, &tr.actor, 6, &mut rng))
            .collect();

        let critic_before = tr.critic.store.read_flat();
        let actor_before = tr.actor.store.read_flat();
        let mut actor_entropy_only = tr.actor.clone();
        a2c_update(
            &batch,
            &mut actor_entropy_only,
            &mut tr.critic,
            &target,
            CriticVariant::HistoryInformation,
            &cfg.hyper,
            0.1,
        )
        .unwrap();
        assert_eq!(tr.critic.store.read_flat(), critic_before);
        assert_ne!(actor_entropy_only.store.read_flat(), actor_before);

        // With the entropy weight off too, nothing moves at all.
        let mut actor_frozen = tr.actor.clone();
        a2c_update(
            &batch,
            &mut actor_frozen,
            &mut tr.critic,
            &target,
            CriticVariant::HistoryInformation,
            &cfg.hyper,
            0.0,
        )
        .unwrap();
        assert_eq!(actor_frozen.store.read_flat(), actor_before);
        assert_eq!(tr.critic.store.read_flat(), critic_before);
    }

    /// Recomputes the actor's surrogate loss from nets and fixed TD errors;
    /// must match what `a2c_update` minimizes.
    fn actor_surrogate(
        actor: &SequenceNet,
        batch: &[Trajectory],
        deltas: &[Vec<f64>],
        hyper: &HyperParams,
        lambda: f64,
    ) -> f64 {
        let episodes = batch.len() as f64;
        let n: usize = batch.iter().map(Trajectory::len).sum();
        let mut loss = 0.0;
        for (traj, dl) in batch.iter().zip(deltas) {
            let trace = actor.forward(&actor_input(traj));
            let mut disc = 1.0;
            for t in 0..traj.len() {
                let dist = Categorical::from_logits(&trace.outputs[t]);
                let w = if hyper.discounted_gradient { disc } else { 1.0 };
                disc *= hyper.discount;
                loss += -(w * dl[t] / episodes) * dist.log_prob(traj.steps[t].action)
                    + lambda * (-dist.entropy()) / n as f64;
            }
        }
        loss
    }

    #[test]
    fn actor_update_matches_finite_differences_of_the_surrogate() {
        let pomdp = tiny_pomdp(&[0.5, -0.25, 1.0, 0.125]);
        let mut env = TabularEnv::new(pomdp, 4);
        let mut rng = stream(40, "fd-episodes");
        let cfg = config(CriticVariant::HistoryState, 1_000, 41);
        let mut tr = Trainer::new(env.dims(), &cfg).unwrap();

        let batch: Vec<Trajectory> = (0..2)
            .map(|_| run_episode(&mut env, &tr.actor, 3, &mut rng))
            .collect();

        // TD errors exactly as the update will see them.
        let hyper = HyperParams {
            actor_lr: 1.0,
            ..cfg.hyper.clone()
        };
        let mut deltas = Vec::new();
        for traj in &batch {
            let cin = critic_input(traj, CriticVariant::HistoryState).unwrap();
            let v: Vec<f64> = tr.critic.forward(&cin).outputs.iter().map(|o| o[0]).collect();
            let mut dl = Vec::new();
            for t in 0..traj.len() {
                let terminal = traj.terminated && t == traj.len() - 1;
                let vn = if terminal { 0.0 } else { v[t + 1] };
                dl.push(td_error(traj.steps[t].reward, vn, v[t], hyper.discount));
            }
            deltas.push(dl);
        }

        let lambda = 0.05;
        let theta = tr.actor.store.read_flat();
        let target = tr.critic.clone();
        let mut critic = tr.critic.clone();
        a2c_update(
            &batch,
            &mut tr.actor,
            &mut critic,
            &target,
            CriticVariant::HistoryState,
            &hyper,
            lambda,
        )
        .unwrap();
        // With unit learning rate, the applied SGD step IS the gradient.
        let after = tr.actor.store.read_flat();
        let analytic: Vec<f64> = theta.iter().zip(&after).map(|(b, a)| b - a).collect();

        let eps = 1e-5;
        let mut probe = theta.clone();
        let mut worst = 0.0f64;
        for k in 0..theta.len() {
            probe[k] = theta[k] + eps;
            tr.actor.store.write_flat(&probe);
            let up = actor_surrogate(&tr.actor, &batch, &deltas, &hyper, lambda);
            probe[k] = theta[k] - eps;
            tr.actor.store.write_flat(&probe);
            let down = actor_surrogate(&tr.actor, &batch, &deltas, &hyper, lambda);
            probe[k] = theta[k];
            let fd = (up - down) / (2.0 * eps);
            let rel = (analytic[k] - fd).abs() / 1e-6f64.max(analytic[k].abs() + fd.abs());
            worst = worst.max(rel);
        }
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn side_input_critics_reject_logs_without_their_column() {
        let traj = Trajectory {
            steps: vec![Step {
                state: vec![],
                info: vec![0.5],
                obs: vec![1.0],
                action: 0,
                reward: 0.0,
                state_index: None,
            }],
            last: Some(FinalPoint {
                state: vec![],
                info: vec![0.5],
                obs: vec![0.0],
                state_index: None,
            }),
            terminated: true,
            truncated: false,
        };
        let err = critic_input(&traj, CriticVariant::State).unwrap_err();
        assert!(matches!(err, TrainError::MissingInput { .. }));
        assert!(critic_input(&traj, CriticVariant::HistoryInformation).is_ok());
    }

    #[test]
    fn target_sync_happens_exactly_on_period_crossings() {
        let pomdp = tiny_pomdp(&[0.5, -0.25, 1.0, 0.125]);
        let mut env = TabularEnv::new(pomdp, 6);
        let mut cfg = config(CriticVariant::History, 10_000, 7);
        // Episodes run up to 6 steps, batches of 2: crossings are rare
        // enough to observe both outcomes.
        cfg.hyper.target_sync_period = 25;
        let mut tr = Trainer::new(env.dims(), &cfg).unwrap();

        let mut prev_steps = 0;
        for _ in 0..40 {
            let row = tr.update_once(&mut env).unwrap().unwrap();
            let crossed = row.env_steps / 25 > prev_steps / 25;
            let in_sync = tr.target().store.read_flat() == tr.critic.store.read_flat();
            assert_eq!(in_sync, crossed, "steps {} -> {}", prev_steps, row.env_steps);
            prev_steps = row.env_steps;
        }
    }

    #[test]
    fn budget_smaller_than_one_episode_means_zero_updates() {
        // No terminal states, so every episode runs to the cap of 6 > 4.
        let pomdp = tiny_pomdp(&[0.1, 0.2, 0.3, 0.4]);
        let mut env = TabularEnv::new(pomdp, 6);
        let cfg = config(CriticVariant::History, 4, 11);
        let mut tr = Trainer::new(env.dims(), &cfg).unwrap();
        let rows = tr.run(&mut env, |_, _| {}).unwrap();
        assert!(rows.is_empty());
        assert_eq!(tr.steps_done(), 0);
        assert_eq!(tr.update_index(), 0);
    }

    #[test]
    fn actor_is_wired_without_any_side_input() {
        for variant in CriticVariant::ALL {
            let pomdp = tiny_pomdp(&[0.0; 4]);
            let env = TabularEnv::new(pomdp, 6);
            let tr = Trainer::new(env.dims(), &config(variant, 100, 1)).unwrap();
            assert!(tr.actor.dims().extra.is_none(), "{variant}");
            assert!(tr.actor.spec().extra_embed.is_none(), "{variant}");
            let has_side = variant.side_input().is_some();
            assert_eq!(tr.critic.dims().extra.is_some(), has_side, "{variant}");
        }
    }
}

use crate::nn::{Categorical, EpisodeInput, SequenceNet};
use crate::trajectory::Trajectory;

use super::hyper::{td_error, CriticVariant, HyperParams, SideInput, TrainError};

/// Scalars produced by one gradient update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Surrogate actor loss (policy-gradient term plus weighted negative
    /// entropy), as minimized.
    pub actor_loss: f64,
    /// Mean squared TD regression error of the critic.
    pub critic_loss: f64,
    /// Environment steps in the batch.
    pub steps: usize,
    /// Mean undiscounted return of the batch episodes.
    pub mean_return: f64,
}

fn side_column<'a>(
    traj: &'a Trajectory,
    variant: CriticVariant,
    side: SideInput,
) -> Result<Vec<&'a [f64]>, TrainError> {
    let last = traj.last.as_ref().ok_or(TrainError::MissingFinalPoint)?;
    let mut cols: Vec<&[f64]> = Vec::with_capacity(traj.len() + 1);
    for s in &traj.steps {
        cols.push(match side {
            SideInput::State => &s.state,
            SideInput::Information => &s.info,
        });
    }
    cols.push(match side {
        SideInput::State => &last.state,
        SideInput::Information => &last.info,
    });
    if cols.iter().any(|c| c.is_empty()) {
        return Err(TrainError::MissingInput {
            variant,
            column: side.column_name(),
        });
    }
    Ok(cols)
}

/// Actor inputs: the T observations and the actions preceding them.
pub fn actor_input(traj: &Trajectory) -> EpisodeInput {
    let obs = traj.steps.iter().map(|s| s.obs.clone()).collect();
    let mut prev_actions = Vec::with_capacity(traj.len());
    prev_actions.push(None);
    prev_actions.extend(traj.steps.iter().take(traj.len().saturating_sub(1)).map(|s| Some(s.action)));
    EpisodeInput {
        obs,
        prev_actions,
        extra: None,
    }
}

/// Critic inputs: T+1 entries, the post-episode point last, so values exist
/// at every bootstrap target.
pub fn critic_input(traj: &Trajectory, variant: CriticVariant) -> Result<EpisodeInput, TrainError> {
    let last = traj.last.as_ref().ok_or(TrainError::MissingFinalPoint)?;
    let mut obs: Vec<Vec<f64>> = traj.steps.iter().map(|s| s.obs.clone()).collect();
    obs.push(last.obs.clone());
    let mut prev_actions = Vec::with_capacity(traj.len() + 1);
    prev_actions.push(None);
    prev_actions.extend(traj.steps.iter().map(|s| Some(s.action)));
    let extra = match variant.side_input() {
        None => None,
        Some(side) => Some(
            side_column(traj, variant, side)?
                .into_iter()
                .map(<[f64]>::to_vec)
                .collect(),
        ),
    };
    Ok(EpisodeInput {
        obs,
        prev_actions,
        extra,
    })
}

/// One batched advantage actor-critic update, applied in place by plain SGD.
///
/// Advantages are one-step TD errors from the online critic; the critic
/// regresses on targets bootstrapped through the frozen `target` copy.
/// Truncated episodes bootstrap through their final point, terminated ones
/// use zero. The policy-gradient term is summed per episode (weighted by
/// discount^t unless switched off) and averaged over episodes; the entropy
/// and critic terms are averaged over all steps in the batch.
pub fn a2c_update(
    batch: &[Trajectory],
    actor: &mut SequenceNet,
    critic: &mut SequenceNet,
    target: &SequenceNet,
    variant: CriticVariant,
    hyper: &HyperParams,
    entropy_weight: f64,
) -> Result<UpdateStats, TrainError> {
    let episodes = batch.len() as f64;
    let steps: usize = batch.iter().map(Trajectory::len).sum();
    if batch.is_empty() || steps == 0 {
        return Err(TrainError::EmptyEpisode);
    }
    let n = steps as f64;

    actor.store.zero_grad();
    critic.store.zero_grad();
    let mut actor_loss = 0.0;
    let mut critic_loss = 0.0;

    for traj in batch {
        if traj.is_empty() {
            return Err(TrainError::EmptyEpisode);
        }
        let t_len = traj.len();

        let cin = critic_input(traj, variant)?;
        let ctrace = critic.forward(&cin);
        let v: Vec<f64> = ctrace.outputs.iter().map(|o| o[0]).collect();
        let vbar: Vec<f64> = target.forward(&cin).outputs.iter().map(|o| o[0]).collect();

        let mut deltas = Vec::with_capacity(t_len);
        let mut cdout = vec![vec![0.0]; t_len + 1];
        for t in 0..t_len {
            let r = traj.steps[t].reward;
            let terminal_here = traj.terminated && t == t_len - 1;
            let (v_next, vbar_next) = if terminal_here {
                (0.0, 0.0)
            } else {
                (v[t + 1], vbar[t + 1])
            };
            deltas.push(td_error(r, v_next, v[t], hyper.discount));
            let err = v[t] - (r + hyper.discount * vbar_next);
            critic_loss += err * err / n;
            cdout[t][0] = 2.0 * err / n;
        }
        critic.backward(&cin, &ctrace, &cdout);

        let ain = actor_input(traj);
        let atrace = actor.forward(&ain);
        let mut adout = Vec::with_capacity(t_len);
        let mut disc = 1.0;
        for t in 0..t_len {
            let dist = Categorical::from_logits(&atrace.outputs[t]);
            let a = traj.steps[t].action;
            let w = if hyper.discounted_gradient { disc } else { 1.0 };
            disc *= hyper.discount;

            let pg_coeff = -w * deltas[t] / episodes;
            let mut g = dist.grad_log_prob(a);
            let ent = dist.grad_neg_entropy();
            for (gk, ek) in g.iter_mut().zip(&ent) {
                *gk = pg_coeff * *gk + entropy_weight * ek / n;
            }
            adout.push(g);
            actor_loss +=
                pg_coeff * dist.log_prob(a) + entropy_weight * (-dist.entropy()) / n;
        }
        actor.backward(&ain, &atrace, &adout);
    }

    actor.store.sgd_step(hyper.actor_lr);
    critic.store.sgd_step(hyper.critic_lr);

    Ok(UpdateStats {
        actor_loss,
        critic_loss,
        steps,
        mean_return: batch.iter().map(Trajectory::total_reward).sum::<f64>() / episodes,
    })
}

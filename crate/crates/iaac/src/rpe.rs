//! Post-hoc test of whether the privileged critic predicts returns better
//! than the history-only critic.
//!
//! Per step the gain is the reduction in squared prediction error,
//!
//! ```text
//! E_t = (Q_sym(h_t, a_t) - G_t)^2 - (Q_inf(h_t, i_t, a_t) - G_t)^2
//! ```
//!
//! and a Bernstein-style lower confidence bound on the mean gain,
//!
//! ```text
//! eps = mean - sqrt(2 var log(2/d) / T) - 2 C log(2/d) / (3 T)
//! ```
//!
//! with `C = max |E_t|` and population variance (divisor T), decides the
//! test: the signal is declared useful exactly when `eps > 0`.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actor_critic::{critic_input, run_episode, CriticVariant, SideInput, TrainError};
use crate::envs::Env;
use crate::nn::{EpisodeInput, SequenceNet};
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum RpeError {
    #[error("gain series is empty")]
    EmptySeries,
    #[error("delta must lie strictly inside (0, 1), got {0}")]
    BadDelta(f64),
    #[error("{0}")]
    BadConfig(String),
    #[error("predictor returned {got} values for a {want}-step episode")]
    PredictionLength { want: usize, got: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Reduction in squared prediction error from using the privileged critic.
pub fn pointwise_gain(q_sym: f64, q_inf: f64, g: f64) -> f64 {
    (q_sym - g) * (q_sym - g) - (q_inf - g) * (q_inf - g)
}

/// One episode's gains with the summaries the bound consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSeries {
    pub e: Vec<f64>,
    pub t: usize,
    /// max |E_t|.
    pub c: f64,
    pub mean: f64,
    /// Population variance, divisor T.
    pub variance: f64,
}

impl GainSeries {
    pub fn from_gains(e: Vec<f64>) -> Result<Self, RpeError> {
        if e.is_empty() {
            return Err(RpeError::EmptySeries);
        }
        let t = e.len();
        let mean = e.iter().sum::<f64>() / t as f64;
        let variance = e.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
        let c = e.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        Ok(GainSeries {
            e,
            t,
            c,
            mean,
            variance,
        })
    }
}

/// Lower confidence bound on the mean gain at confidence `1 - delta`.
pub fn epsilon_bound(series: &GainSeries, delta: f64) -> Result<f64, RpeError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(RpeError::BadDelta(delta));
    }
    let t = series.t as f64;
    let log_term = (2.0 / delta).ln();
    Ok(series.mean
        - (2.0 * series.variance * log_term / t).sqrt()
        - 2.0 * series.c * log_term / (3.0 * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reject,
    FailToReject,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Reject => "reject",
            Verdict::FailToReject => "fail-to-reject",
        })
    }
}

/// The null hypothesis is "no useful signal"; it falls only on strict
/// positivity, so a bound of exactly zero fails to reject.
pub fn informativeness_test(epsilon: f64) -> Verdict {
    if epsilon > 0.0 {
        Verdict::Reject
    } else {
        Verdict::FailToReject
    }
}

/// Per-step return prediction for a rolled-out episode. Implementations
/// must return one value per step, aligned with `traj.steps`.
pub trait ReturnPredictor {
    fn predict(&self, traj: &Trajectory) -> Result<Vec<f64>, RpeError>;
}

/// Q(., a_t) from a trained V-critic through the one-step bootstrap
/// `r_t + discount * V(next)`, zero at termination. The variant decides
/// whether the next-point value sees the privileged column.
pub struct CriticBridge<'a> {
    pub critic: &'a SequenceNet,
    pub variant: CriticVariant,
    pub discount: f64,
}

impl ReturnPredictor for CriticBridge<'_> {
    fn predict(&self, traj: &Trajectory) -> Result<Vec<f64>, RpeError> {
        let input = critic_input(traj, self.variant)?;
        let trace = self.critic.forward(&input);
        let t = traj.len();
        let mut q = Vec::with_capacity(t);
        for (i, step) in traj.steps.iter().enumerate() {
            let v_next = if i + 1 == t && traj.terminated {
                0.0
            } else {
                trace.outputs[i + 1][0]
            };
            q.push(step.reward + self.discount * v_next);
        }
        Ok(q)
    }
}

/// Direct Q-head alternative to the bootstrap bridge: a network with one
/// output per action, read off at the taken action.
pub struct QHeadPredictor<'a> {
    pub net: &'a SequenceNet,
    pub variant: CriticVariant,
}

impl ReturnPredictor for QHeadPredictor<'_> {
    fn predict(&self, traj: &Trajectory) -> Result<Vec<f64>, RpeError> {
        let input = q_head_input(traj, self.variant)?;
        let trace = self.net.forward(&input);
        Ok(traj
            .steps
            .iter()
            .enumerate()
            .map(|(t, s)| trace.outputs[t][s.action])
            .collect())
    }
}

/// Inputs for a Q-head: the T observed steps only, no post-episode point.
fn q_head_input(traj: &Trajectory, variant: CriticVariant) -> Result<EpisodeInput, RpeError> {
    let obs = traj.steps.iter().map(|s| s.obs.clone()).collect();
    let mut prev_actions: Vec<Option<usize>> = Vec::with_capacity(traj.len());
    prev_actions.push(None);
    prev_actions.extend(
        traj.steps
            .iter()
            .take(traj.len().saturating_sub(1))
            .map(|s| Some(s.action)),
    );
    let extra = match variant.side_input() {
        None => None,
        Some(side) => {
            let col: Vec<Vec<f64>> = traj
                .steps
                .iter()
                .map(|s| match side {
                    SideInput::State => s.state.clone(),
                    SideInput::Information => s.info.clone(),
                })
                .collect();
            if col.iter().any(|c| c.is_empty()) {
                return Err(TrainError::MissingInput {
                    variant,
                    column: side.column_name(),
                }
                .into());
            }
            Some(col)
        }
    };
    Ok(EpisodeInput {
        obs,
        prev_actions,
        extra,
    })
}

/// Predicts the realized discounted return exactly. Useful as a ceiling.
pub struct OracleReturns {
    pub discount: f64,
}

impl ReturnPredictor for OracleReturns {
    fn predict(&self, traj: &Trajectory) -> Result<Vec<f64>, RpeError> {
        Ok(traj.returns_to_go(self.discount))
    }
}

/// Predicts the same value at every step. Useful as a floor.
pub struct ConstantPredictor(pub f64);

impl ReturnPredictor for ConstantPredictor {
    fn predict(&self, traj: &Trajectory) -> Result<Vec<f64>, RpeError> {
        Ok(vec![self.0; traj.len()])
    }
}

/// Evaluation settings for [`evaluate_signal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpeConfig {
    pub episodes: usize,
    /// Episode cap during evaluation rollouts.
    pub horizon: usize,
    pub deltas: Vec<f64>,
    pub discount: f64,
}

impl Default for RpeConfig {
    fn default() -> Self {
        RpeConfig {
            episodes: 1000,
            horizon: 50,
            deltas: vec![0.01, 0.05, 0.1],
            discount: 0.99,
        }
    }
}

/// One bound evaluation: an episode's (or the pooled) series summary and
/// the resulting decision at a given delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    /// `None` marks the pooled-across-episodes rows.
    pub episode: Option<usize>,
    pub delta: f64,
    pub t: usize,
    pub mean: f64,
    pub variance: f64,
    pub c: f64,
    pub epsilon: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeReport {
    /// episodes x |deltas| rows, episode-major, delta order as configured.
    pub rows: Vec<EpsilonRow>,
    /// One row per delta over all steps of all episodes concatenated.
    pub pooled: Vec<EpsilonRow>,
    pub episodes: usize,
    pub deltas: Vec<f64>,
}

impl RpeReport {
    /// Epsilon values across episodes at one delta, for boxplots.
    pub fn epsilons_at(&self, delta: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.delta == delta)
            .map(|r| r.epsilon)
            .collect()
    }
}

fn bound_rows(
    episode: Option<usize>,
    series: &GainSeries,
    deltas: &[f64],
    out: &mut Vec<EpsilonRow>,
) -> Result<(), RpeError> {
    for &delta in deltas {
        let epsilon = epsilon_bound(series, delta)?;
        out.push(EpsilonRow {
            episode,
            delta,
            t: series.t,
            mean: series.mean,
            variance: series.variance,
            c: series.c,
            epsilon,
            verdict: informativeness_test(epsilon),
        });
    }
    Ok(())
}

/// Rolls out the frozen policy and scores both predictors against realized
/// returns, bounding the mean gain per episode and over the pooled steps.
pub fn evaluate_signal(
    env: &mut dyn Env,
    policy: &SequenceNet,
    sym: &dyn ReturnPredictor,
    inf: &dyn ReturnPredictor,
    config: &RpeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RpeReport, RpeError> {
    if config.episodes == 0 || config.horizon == 0 {
        return Err(RpeError::BadConfig(
            "episodes and horizon must be positive".into(),
        ));
    }
    if config.deltas.is_empty() {
        return Err(RpeError::BadConfig("need at least one delta".into()));
    }
    let mut rows = Vec::with_capacity(config.episodes * config.deltas.len());
    let mut all_gains = Vec::new();
    for episode in 0..config.episodes {
        let traj = run_episode(env, policy, config.horizon, rng);
        let gains = episode_gains(&traj, sym, inf, config.discount)?;
        let series = GainSeries::from_gains(gains)?;
        bound_rows(Some(episode), &series, &config.deltas, &mut rows)?;
        all_gains.extend(series.e);
    }
    let pooled_series = GainSeries::from_gains(all_gains)?;
    let mut pooled = Vec::with_capacity(config.deltas.len());
    bound_rows(None, &pooled_series, &config.deltas, &mut pooled)?;
    Ok(RpeReport {
        rows,
        pooled,
        episodes: config.episodes,
        deltas: config.deltas.clone(),
    })
}

/// Per-step gains for one episode.
pub fn episode_gains(
    traj: &Trajectory,
    sym: &dyn ReturnPredictor,
    inf: &dyn ReturnPredictor,
    discount: f64,
) -> Result<Vec<f64>, RpeError> {
    let g = traj.returns_to_go(discount);
    let q_sym = sym.predict(traj)?;
    let q_inf = inf.predict(traj)?;
    for q in [&q_sym, &q_inf] {
        if q.len() != traj.len() {
            return Err(RpeError::PredictionLength {
                want: traj.len(),
                got: q.len(),
            });
        }
    }
    Ok((0..traj.len())
        .map(|t| pointwise_gain(q_sym[t], q_inf[t], g[t]))
        .collect())
}

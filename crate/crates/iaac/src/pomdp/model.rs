use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for probability checks: rows must sum to 1 within this, and
/// entries may be negative only by this much (clamped to 0 on use).
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what} must be positive, got {got}")]
    EmptyDimension { what: &'static str, got: usize },
    #[error("discount must be in (0, 1], got {0}")]
    BadDiscount(f64),
    #[error("{what} has {got} entries, expected {expected}")]
    WrongLength {
        what: String,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("negative probability {value:.3e} in {what}")]
    Negative { what: String, value: f64 },
    #[error("{what} sums to {sum} (must be 1 within {PROB_TOL:e})")]
    RowSum { what: String, sum: f64 },
    #[error("terminal state {state} must be absorbing with zero reward")]
    BadTerminal { state: usize },
    #[error("gaussian channel noise scale must be nonnegative, got {0}")]
    BadNoise(f64),
}

/// How states emit information samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum InfoChannel {
    /// Row-stochastic table, `num_states` rows of `cardinality` entries.
    Discrete {
        cardinality: usize,
        probs: Vec<f64>,
    },
    /// `i = embedding[s] + noise * xi`, `xi ~ N(0, I)`.
    Gaussian {
        /// One embedding row per state.
        embeddings: Vec<Vec<f64>>,
        noise: f64,
    },
}

/// How information samples emit observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ObsChannel {
    /// Row-stochastic table, one row per information index.
    Discrete {
        cardinality: usize,
        probs: Vec<f64>,
    },
    /// `o = map . i + noise * xi`, `xi ~ N(0, I)`; rows of `map` are output
    /// coordinates.
    Linear { map: Vec<Vec<f64>>, noise: f64 },
}

/// A tabular POMDP whose observations factor through an information channel.
///
/// `transition` is laid out `[s][a][s']` row-major, `reward` is `[s][a]`.
/// Terminal states are absorbing with zero reward; simulation stops when one
/// is entered, and the value oracles rely on the absorbing structure instead
/// of special-casing them.
///
/// Construction via [`InformedPomdp::new`] is the only way to get one, so a
/// value in hand has passed validation. (De)serialisation goes through the
/// versioned document in this module's `document` functions for the same
/// reason.
#[derive(Debug, Clone)]
pub struct InformedPomdp {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    initial_dist: Vec<f64>,
    discount: f64,
    info_channel: InfoChannel,
    obs_channel: ObsChannel,
    terminal: Vec<bool>,
    r_max: f64,
}

impl InformedPomdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
        info_channel: InfoChannel,
        obs_channel: ObsChannel,
        terminal: Vec<bool>,
    ) -> Result<Self, ModelError> {
        if num_states == 0 {
            return Err(ModelError::EmptyDimension {
                what: "num_states",
                got: 0,
            });
        }
        if num_actions == 0 {
            return Err(ModelError::EmptyDimension {
                what: "num_actions",
                got: 0,
            });
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(ModelError::BadDiscount(discount));
        }
        check_len("transition", &transition, num_states * num_actions * num_states)?;
        check_len("reward", &reward, num_states * num_actions)?;
        check_len("initial_dist", &initial_dist, num_states)?;
        if terminal.len() != num_states {
            return Err(ModelError::WrongLength {
                what: "terminal".into(),
                got: terminal.len(),
                expected: num_states,
            });
        }
        check_finite("reward", &reward)?;
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = &transition[(s * num_actions + a) * num_states..][..num_states];
                check_dist(&format!("transition row (s={s}, a={a})"), row)?;
            }
        }
        check_dist("initial_dist", &initial_dist)?;

        match &info_channel {
            InfoChannel::Discrete { cardinality, probs } => {
                if *cardinality == 0 {
                    return Err(ModelError::EmptyDimension {
                        what: "info cardinality",
                        got: 0,
                    });
                }
                let c = *cardinality;
                check_len("info channel", probs, num_states * c)?;
                for s in 0..num_states {
                    check_dist(&format!("info row (s={s})"), &probs[s * c..][..c])?;
                }
            }
            InfoChannel::Gaussian { embeddings, noise } => {
                if embeddings.len() != num_states {
                    return Err(ModelError::WrongLength {
                        what: "info embeddings".into(),
                        got: embeddings.len(),
                        expected: num_states,
                    });
                }
                let dim = embeddings.first().map_or(0, Vec::len);
                if dim == 0 {
                    return Err(ModelError::EmptyDimension {
                        what: "info dimension",
                        got: 0,
                    });
                }
                for (s, e) in embeddings.iter().enumerate() {
                    if e.len() != dim {
                        return Err(ModelError::WrongLength {
                            what: format!("info embedding {s}"),
                            got: e.len(),
                            expected: dim,
                        });
                    }
                    check_finite(&format!("info embedding {s}"), e)?;
                }
                if !noise.is_finite() || *noise < 0.0 {
                    return Err(ModelError::BadNoise(*noise));
                }
            }
        }

        match &obs_channel {
            ObsChannel::Discrete { cardinality, probs } => {
                if *cardinality == 0 {
                    return Err(ModelError::EmptyDimension {
                        what: "obs cardinality",
                        got: 0,
                    });
                }
                let rows = match &info_channel {
                    InfoChannel::Discrete { cardinality, .. } => *cardinality,
                    InfoChannel::Gaussian { .. } => {
                        return Err(ModelError::WrongLength {
                            what: "discrete obs channel over gaussian info".into(),
                            got: 0,
                            expected: 0,
                        })
                    }
                };
                let c = *cardinality;
                check_len("obs channel", probs, rows * c)?;
                for i in 0..rows {
                    check_dist(&format!("obs row (i={i})"), &probs[i * c..][..c])?;
                }
            }
            ObsChannel::Linear { map, noise } => {
                let in_dim = match &info_channel {
                    InfoChannel::Gaussian { embeddings, .. } => embeddings[0].len(),
                    InfoChannel::Discrete { cardinality, .. } => *cardinality,
                };
                if map.is_empty() {
                    return Err(ModelError::EmptyDimension {
                        what: "obs dimension",
                        got: 0,
                    });
                }
                for (r, row) in map.iter().enumerate() {
                    if row.len() != in_dim {
                        return Err(ModelError::WrongLength {
                            what: format!("obs map row {r}"),
                            got: row.len(),
                            expected: in_dim,
                        });
                    }
                    check_finite(&format!("obs map row {r}"), row)?;
                }
                if !noise.is_finite() || *noise < 0.0 {
                    return Err(ModelError::BadNoise(*noise));
                }
            }
        }

        for s in 0..num_states {
            if terminal[s] {
                for a in 0..num_actions {
                    let self_loop = transition[(s * num_actions + a) * num_states + s];
                    if (self_loop - 1.0).abs() > PROB_TOL
                        || reward[s * num_actions + a].abs() > PROB_TOL
                    {
                        return Err(ModelError::BadTerminal { state: s });
                    }
                }
            }
        }

        let r_max = reward.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Ok(InformedPomdp {
            num_states,
            num_actions,
            transition,
            reward,
            initial_dist,
            discount,
            info_channel,
            obs_channel,
            terminal,
            r_max,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Largest absolute one-step reward; bounds value truncation error by
    /// `r_max * gamma^H / (1 - gamma)`.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn transition(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + s2]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[(s * self.num_actions + a) * self.num_states..][..self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn info_channel(&self) -> &InfoChannel {
        &self.info_channel
    }

    pub fn obs_channel(&self) -> &ObsChannel {
        &self.obs_channel
    }

    /// Both channels are finite tables, so beliefs and oracles apply.
    pub fn is_discrete(&self) -> bool {
        matches!(self.info_channel, InfoChannel::Discrete { .. })
            && matches!(self.obs_channel, ObsChannel::Discrete { .. })
    }

    /// Information cardinality for a discrete channel.
    pub fn num_infos(&self) -> Option<usize> {
        match &self.info_channel {
            InfoChannel::Discrete { cardinality, .. } => Some(*cardinality),
            InfoChannel::Gaussian { .. } => None,
        }
    }

    /// Observation cardinality for a discrete channel.
    pub fn num_obs(&self) -> Option<usize> {
        match &self.obs_channel {
            ObsChannel::Discrete { cardinality, .. } => Some(*cardinality),
            ObsChannel::Linear { .. } => None,
        }
    }

    /// P(i | s) for discrete info channels.
    pub fn info_prob(&self, s: usize, i: usize) -> f64 {
        match &self.info_channel {
            InfoChannel::Discrete { cardinality, probs } => probs[s * cardinality + i],
            InfoChannel::Gaussian { .. } => panic!("info_prob on a gaussian channel"),
        }
    }

    /// P(o | i) for discrete observation channels.
    pub fn obs_prob(&self, i: usize, o: usize) -> f64 {
        match &self.obs_channel {
            ObsChannel::Discrete { cardinality, probs } => probs[i * cardinality + o],
            ObsChannel::Linear { .. } => panic!("obs_prob on a linear channel"),
        }
    }

    /// Marginal observation kernel P(o | s) = sum_i P(o|i) P(i|s).
    pub fn induced_obs_prob(&self, s: usize, o: usize) -> f64 {
        let ni = self.num_infos().expect("discrete info channel");
        (0..ni).map(|i| self.info_prob(s, i) * self.obs_prob(i, o)).sum()
    }
}

fn check_len(what: &str, v: &[f64], expected: usize) -> Result<(), ModelError> {
    if v.len() != expected {
        return Err(ModelError::WrongLength {
            what: what.into(),
            got: v.len(),
            expected,
        });
    }
    Ok(())
}

fn check_finite(what: &str, v: &[f64]) -> Result<(), ModelError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NonFinite(what.into()));
    }
    Ok(())
}

fn check_dist(what: &str, row: &[f64]) -> Result<(), ModelError> {
    check_finite(what, row)?;
    for &p in row {
        if p < -PROB_TOL {
            return Err(ModelError::Negative {
                what: what.into(),
                value: p,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(ModelError::RowSum {
            what: what.into(),
            sum,
        });
    }
    Ok(())
}

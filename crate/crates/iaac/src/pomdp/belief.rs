use thiserror::Error;

use super::history::{History, Value};
use super::model::{InfoChannel, InformedPomdp, ObsChannel};

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("beliefs require discrete information and observation channels")]
    NotDiscrete,
    #[error("observation at position {t} is a feature vector, not an index")]
    VectorObservation { t: usize },
    #[error("history has probability zero under the model (observation {t})")]
    ImpossibleEvidence { t: usize },
    #[error("information value {info} has probability zero given this history")]
    ImpossibleInfo { info: usize },
}

/// A distribution over states. Non-negative, sums to 1 within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.0
    }

    fn from_unnormalised(mut w: Vec<f64>) -> Option<Self> {
        let z: f64 = w.iter().sum();
        if z <= 0.0 {
            return None;
        }
        for x in &mut w {
            *x = x.max(0.0) / z;
        }
        Some(Belief(w))
    }
}

/// Posterior over `(s_t, i_t)` after the final observation of a history,
/// kept alongside its marginals.
#[derive(Debug, Clone)]
pub struct JointBelief {
    /// `[s][i]` row-major, normalised over both axes.
    pub joint: Vec<f64>,
    pub state: Vec<f64>,
    pub info: Vec<f64>,
    num_infos: usize,
}

impl JointBelief {
    pub fn joint_prob(&self, s: usize, i: usize) -> f64 {
        self.joint[s * self.num_infos + i]
    }
}

/// Runs the exact filter over a history, tracking the joint posterior of the
/// current state and information sample.
///
/// The observation at each step was generated from that step's information
/// sample, so `o_t` is conditionally independent of `s_t` given `i_t`; the
/// joint update `w(s, i) = pred(s) I(i|s) O(o_t|i)` captures this exactly.
pub fn joint_belief(pomdp: &InformedPomdp, history: &History) -> Result<JointBelief, BeliefError> {
    let (ni, _no) = match (pomdp.info_channel(), pomdp.obs_channel()) {
        (
            InfoChannel::Discrete { cardinality: ni, .. },
            ObsChannel::Discrete { cardinality: no, .. },
        ) => (*ni, *no),
        _ => return Err(BeliefError::NotDiscrete),
    };
    let ns = pomdp.num_states();
    let mut pred: Vec<f64> = pomdp.initial_dist().to_vec();
    let mut joint = vec![0.0; ns * ni];
    let obs = history.observations();
    let actions = history.actions();

    for (t, o) in obs.iter().enumerate() {
        let o = match o {
            Value::Index(o) => *o,
            Value::Vector(_) => return Err(BeliefError::VectorObservation { t }),
        };
        let mut z = 0.0;
        for s in 0..ns {
            for i in 0..ni {
                let w = pred[s] * pomdp.info_prob(s, i) * pomdp.obs_prob(i, o);
                joint[s * ni + i] = w;
                z += w;
            }
        }
        if z <= 0.0 {
            return Err(BeliefError::ImpossibleEvidence { t });
        }
        for w in &mut joint {
            *w /= z;
        }
        if t < actions.len() {
            let a = actions[t];
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                let ms: f64 = joint[s * ni..][..ni].iter().sum();
                if ms == 0.0 {
                    continue;
                }
                let row = pomdp.transition_row(s, a);
                for (s2, &p) in row.iter().enumerate() {
                    next[s2] += ms * p;
                }
            }
            pred = next;
        }
    }

    let mut state = vec![0.0; ns];
    let mut info = vec![0.0; ni];
    for s in 0..ns {
        for i in 0..ni {
            state[s] += joint[s * ni + i];
            info[i] += joint[s * ni + i];
        }
    }
    Ok(JointBelief {
        joint,
        state,
        info,
        num_infos: ni,
    })
}

/// Exact posterior `p(s_t | h_t)`.
pub fn belief_filter(pomdp: &InformedPomdp, history: &History) -> Result<Belief, BeliefError> {
    let jb = joint_belief(pomdp, history)?;
    Ok(Belief::from_unnormalised(jb.state).expect("filter normalises"))
}

/// Exact posterior `p(s_t | h_t, i_t = info)`.
///
/// Conditioning on the information sample behind the latest observation
/// changes the state posterior through the joint filter; a naive
/// `p(i|s) p(s|h)` product would double-count the observation that `i`
/// itself generated.
pub fn belief_refine(
    pomdp: &InformedPomdp,
    history: &History,
    info: usize,
) -> Result<Belief, BeliefError> {
    let jb = joint_belief(pomdp, history)?;
    let ns = pomdp.num_states();
    let w: Vec<f64> = (0..ns).map(|s| jb.joint_prob(s, info)).collect();
    Belief::from_unnormalised(w).ok_or(BeliefError::ImpossibleInfo { info })
}

//! Tabular POMDPs with a privileged information channel.
//!
//! The model factors observation emission through information: each state
//! `s` draws an information sample `i ~ I(.|s)`, and the observation is then
//! drawn from `o ~ O(.|i)` without looking at `s` again. Marginalising the
//! information recovers an ordinary POMDP whose observation kernel is
//! `sum_i O(o|i) I(i|s)`.
//!
//! Everything here is exact: beliefs come from a joint filter over `(s, i)`,
//! and the value oracles enumerate futures to a fixed horizon. These are the
//! ground truth that the learned critics and the statistical tests are
//! checked against.

mod belief;
mod document;
mod history;
mod model;
mod oracle;
mod policy;
mod sim;

pub use belief::{belief_filter, belief_refine, joint_belief, Belief, BeliefError, JointBelief};
pub use document::{model_from_json, model_to_json, DocumentError, MODEL_FORMAT_VERSION};
pub use history::{History, Value};
pub use model::{InfoChannel, InformedPomdp, ModelError, ObsChannel, PROB_TOL};
pub use oracle::{
    exact_history_q, exact_history_v, exact_informed_q, exact_informed_v, history_reward,
    horizon_for_tolerance, info_posterior, informed_reward, ExactOracle, OracleError,
};
pub use policy::{SeededTablePolicy, SoftmaxPolicy, TabularPolicy, UniformPolicy};
pub use sim::{rollout, sample_info, sample_obs, TabStep, TabTrajectory};

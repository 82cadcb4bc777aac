use std::collections::HashMap;

use thiserror::Error;

use super::belief::{belief_filter, belief_refine, joint_belief, BeliefError};
use super::history::History;
use super::model::InformedPomdp;
use super::policy::TabularPolicy;
use crate::pomdp::Value;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact oracles require discrete information and observation channels")]
    NotDiscrete,
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("enumeration exceeded the node budget of {budget}")]
    BudgetExceeded { budget: usize },
}

/// Brute-force finite-horizon policy evaluation on a discrete model.
///
/// `horizon` counts reward terms: horizon 0 values are 0 and horizon 1
/// values are the one-step expected reward. Truncation error relative to the
/// infinite-horizon value is at most `r_max * gamma^horizon / (1 - gamma)`.
///
/// Two families are computed. History values condition on the
/// action-observation history alone. Informed values condition additionally
/// on the current information sample and are defined by the recursion
///
/// `Q(h, i, a) = E[R(s, a) | h, i] + gamma * E[V(h', i') | h, i, a]`,
/// `V(h, i) = sum_a pi(a | h) Q(h, i, a)`,
///
/// i.e. the fixed point a temporal-difference critic with inputs `(h, i)`
/// regresses to. Averaging the information sample back out recovers the
/// history quantities exactly:
/// `sum_i p(i | h) Q(h, i, a) = Q(h, a)` and likewise for V, which is what
/// makes critics with privileged inputs legitimate baselines.
///
/// Each node carries two posteriors: `p(s | h)` and `p(s | h, i)`. The
/// successor's information posterior is refined from the *history* predictive
/// `p(s' | h, a)`, not the informed one, since `V(h', i')` conditions on
/// nothing but `(h', i')`.
pub struct ExactOracle<'a> {
    pomdp: &'a InformedPomdp,
    policy: &'a dyn TabularPolicy,
    budget: usize,
    nodes: usize,
    num_infos: usize,
    num_obs: usize,
    /// Induced `P(o | s)`, `[s][o]` row-major.
    obs_marg: Vec<f64>,
    memo_informed: HashMap<(Vec<u32>, u32, u32, u32), f64>,
    memo_history: HashMap<(Vec<u32>, u32, u32), f64>,
}

const DEFAULT_BUDGET: usize = 20_000_000;

impl<'a> ExactOracle<'a> {
    pub fn new(
        pomdp: &'a InformedPomdp,
        policy: &'a dyn TabularPolicy,
    ) -> Result<Self, OracleError> {
        Self::with_budget(pomdp, policy, DEFAULT_BUDGET)
    }

    pub fn with_budget(
        pomdp: &'a InformedPomdp,
        policy: &'a dyn TabularPolicy,
        budget: usize,
    ) -> Result<Self, OracleError> {
        let (num_infos, num_obs) = match (pomdp.num_infos(), pomdp.num_obs()) {
            (Some(ni), Some(no)) => (ni, no),
            _ => return Err(OracleError::NotDiscrete),
        };
        let ns = pomdp.num_states();
        let mut obs_marg = vec![0.0; ns * num_obs];
        for s in 0..ns {
            for o in 0..num_obs {
                obs_marg[s * num_obs + o] = pomdp.induced_obs_prob(s, o);
            }
        }
        Ok(ExactOracle {
            pomdp,
            policy,
            budget,
            nodes: 0,
            num_infos,
            num_obs,
            obs_marg,
            memo_informed: HashMap::new(),
            memo_history: HashMap::new(),
        })
    }

    /// Nodes expanded so far (monotone across calls; memo hits are free).
    pub fn nodes_expanded(&self) -> usize {
        self.nodes
    }

    pub fn history_q(
        &mut self,
        history: &History,
        action: usize,
        horizon: usize,
    ) -> Result<f64, OracleError> {
        let bh = belief_filter(self.pomdp, history)?.into_probs();
        let key = history.index_key().expect("discrete history");
        self.history_q_inner(history, &key, &bh, action, horizon as u32)
    }

    pub fn history_v(&mut self, history: &History, horizon: usize) -> Result<f64, OracleError> {
        let bh = belief_filter(self.pomdp, history)?.into_probs();
        let key = history.index_key().expect("discrete history");
        self.history_v_inner(history, &key, &bh, horizon as u32)
    }

    pub fn informed_q(
        &mut self,
        history: &History,
        info: usize,
        action: usize,
        horizon: usize,
    ) -> Result<f64, OracleError> {
        let bh = belief_filter(self.pomdp, history)?.into_probs();
        let bhi = belief_refine(self.pomdp, history, info)?.into_probs();
        let key = history.index_key().expect("discrete history");
        self.informed_q_inner(history, &key, &bh, &bhi, info, action, horizon as u32)
    }

    pub fn informed_v(
        &mut self,
        history: &History,
        info: usize,
        horizon: usize,
    ) -> Result<f64, OracleError> {
        let bh = belief_filter(self.pomdp, history)?.into_probs();
        let bhi = belief_refine(self.pomdp, history, info)?.into_probs();
        let key = history.index_key().expect("discrete history");
        self.informed_v_inner(history, &key, &bh, &bhi, info, horizon as u32)
    }

    fn charge_node(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    fn history_v_inner(
        &mut self,
        history: &History,
        key: &[u32],
        bh: &[f64],
        horizon: u32,
    ) -> Result<f64, OracleError> {
        if horizon == 0 {
            return Ok(0.0);
        }
        let probs = self.policy.probs(history, self.pomdp.num_actions());
        let mut v = 0.0;
        for (a, &pa) in probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            v += pa * self.history_q_inner(history, key, bh, a, horizon)?;
        }
        Ok(v)
    }

    fn history_q_inner(
        &mut self,
        history: &History,
        key: &[u32],
        bh: &[f64],
        action: usize,
        horizon: u32,
    ) -> Result<f64, OracleError> {
        if horizon == 0 {
            return Ok(0.0);
        }
        let memo_key = (key.to_vec(), action as u32, horizon);
        if let Some(&v) = self.memo_history.get(&memo_key) {
            return Ok(v);
        }
        self.charge_node()?;

        let ns = self.pomdp.num_states();
        let mut value: f64 = (0..ns).map(|s| bh[s] * self.pomdp.reward(s, action)).sum();

        if horizon > 1 {
            let mut pred = vec![0.0; ns];
            for s in 0..ns {
                if bh[s] == 0.0 {
                    continue;
                }
                for (s2, &p) in self.pomdp.transition_row(s, action).iter().enumerate() {
                    pred[s2] += bh[s] * p;
                }
            }
            let mut acc = 0.0;
            for o2 in 0..self.num_obs {
                let mut w = 0.0;
                let mut bh2 = vec![0.0; ns];
                for s2 in 0..ns {
                    let m = pred[s2] * self.obs_marg[s2 * self.num_obs + o2];
                    bh2[s2] = m;
                    w += m;
                }
                if w <= 0.0 {
                    continue;
                }
                for x in &mut bh2 {
                    *x /= w;
                }
                let mut h2 = history.clone();
                h2.push_step(action, Value::Index(o2));
                let mut key2 = key.to_vec();
                key2.push(action as u32);
                key2.push(o2 as u32);
                acc += w * self.history_v_inner(&h2, &key2, &bh2, horizon - 1)?;
            }
            value += self.pomdp.discount() * acc;
        }

        self.memo_history.insert(memo_key, value);
        Ok(value)
    }

    fn informed_v_inner(
        &mut self,
        history: &History,
        key: &[u32],
        bh: &[f64],
        bhi: &[f64],
        info: usize,
        horizon: u32,
    ) -> Result<f64, OracleError> {
        if horizon == 0 {
            return Ok(0.0);
        }
        let probs = self.policy.probs(history, self.pomdp.num_actions());
        let mut v = 0.0;
        for (a, &pa) in probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            v += pa * self.informed_q_inner(history, key, bh, bhi, info, a, horizon)?;
        }
        Ok(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn informed_q_inner(
        &mut self,
        history: &History,
        key: &[u32],
        bh: &[f64],
        bhi: &[f64],
        info: usize,
        action: usize,
        horizon: u32,
    ) -> Result<f64, OracleError> {
        if horizon == 0 {
            return Ok(0.0);
        }
        let memo_key = (key.to_vec(), info as u32, action as u32, horizon);
        if let Some(&v) = self.memo_informed.get(&memo_key) {
            return Ok(v);
        }
        self.charge_node()?;

        let ns = self.pomdp.num_states();
        let mut value: f64 = (0..ns).map(|s| bhi[s] * self.pomdp.reward(s, action)).sum();

        if horizon > 1 {
            let mut pred_h = vec![0.0; ns];
            let mut pred_hi = vec![0.0; ns];
            for s in 0..ns {
                let row = self.pomdp.transition_row(s, action);
                for (s2, &p) in row.iter().enumerate() {
                    pred_h[s2] += bh[s] * p;
                    pred_hi[s2] += bhi[s] * p;
                }
            }
            let mut acc = 0.0;
            for o2 in 0..self.num_obs {
                // p(s' | h') is shared by all information branches under o2.
                let mut bh2 = vec![0.0; ns];
                let mut zh = 0.0;
                for s2 in 0..ns {
                    let m = pred_h[s2] * self.obs_marg[s2 * self.num_obs + o2];
                    bh2[s2] = m;
                    zh += m;
                }
                for i2 in 0..self.num_infos {
                    let po = self.pomdp.obs_prob(i2, o2);
                    if po == 0.0 {
                        continue;
                    }
                    let mut w = 0.0;
                    let mut bhi2 = vec![0.0; ns];
                    for s2 in 0..ns {
                        w += pred_hi[s2] * self.pomdp.info_prob(s2, i2) * po;
                        bhi2[s2] = pred_h[s2] * self.pomdp.info_prob(s2, i2);
                    }
                    if w <= 0.0 {
                        continue;
                    }
                    // Reachable branch under (h, i) implies reachable under h.
                    debug_assert!(zh > 0.0);
                    let zi: f64 = bhi2.iter().sum();
                    debug_assert!(zi > 0.0);
                    let bhi2: Vec<f64> = bhi2.iter().map(|x| x / zi).collect();
                    let bh2n: Vec<f64> = bh2.iter().map(|x| x / zh).collect();
                    let mut h2 = history.clone();
                    h2.push_step(action, Value::Index(o2));
                    let mut key2 = key.to_vec();
                    key2.push(action as u32);
                    key2.push(o2 as u32);
                    acc += w
                        * self.informed_v_inner(&h2, &key2, &bh2n, &bhi2, i2, horizon - 1)?;
                }
            }
            value += self.pomdp.discount() * acc;
        }

        self.memo_informed.insert(memo_key, value);
        Ok(value)
    }
}

/// `E[R(s, a) | h, i]` under the exact refined posterior.
pub fn informed_reward(
    pomdp: &InformedPomdp,
    history: &History,
    info: usize,
    action: usize,
) -> Result<f64, BeliefError> {
    let b = belief_refine(pomdp, history, info)?;
    Ok(b.probs()
        .iter()
        .enumerate()
        .map(|(s, &p)| p * pomdp.reward(s, action))
        .sum())
}

/// `E[R(s, a) | h]` under the filtered posterior.
pub fn history_reward(
    pomdp: &InformedPomdp,
    history: &History,
    action: usize,
) -> Result<f64, BeliefError> {
    let b = belief_filter(pomdp, history)?;
    Ok(b.probs()
        .iter()
        .enumerate()
        .map(|(s, &p)| p * pomdp.reward(s, action))
        .sum())
}

/// Probability of each information value at the end of a history,
/// `p(i_t | h_t)`. Weighting informed values by this row recovers history
/// values.
pub fn info_posterior(pomdp: &InformedPomdp, history: &History) -> Result<Vec<f64>, BeliefError> {
    Ok(joint_belief(pomdp, history)?.info)
}

pub fn exact_history_q(
    pomdp: &InformedPomdp,
    policy: &dyn TabularPolicy,
    history: &History,
    action: usize,
    horizon: usize,
) -> Result<f64, OracleError> {
    ExactOracle::new(pomdp, policy)?.history_q(history, action, horizon)
}

pub fn exact_history_v(
    pomdp: &InformedPomdp,
    policy: &dyn TabularPolicy,
    history: &History,
    horizon: usize,
) -> Result<f64, OracleError> {
    ExactOracle::new(pomdp, policy)?.history_v(history, horizon)
}

pub fn exact_informed_q(
    pomdp: &InformedPomdp,
    policy: &dyn TabularPolicy,
    history: &History,
    info: usize,
    action: usize,
    horizon: usize,
) -> Result<f64, OracleError> {
    ExactOracle::new(pomdp, policy)?.informed_q(history, info, action, horizon)
}

pub fn exact_informed_v(
    pomdp: &InformedPomdp,
    policy: &dyn TabularPolicy,
    history: &History,
    info: usize,
    horizon: usize,
) -> Result<f64, OracleError> {
    ExactOracle::new(pomdp, policy)?.informed_v(history, info, horizon)
}

/// Smallest horizon whose truncation error bound `r_max gamma^H / (1-gamma)`
/// is at most `tol`. `None` when `gamma = 1` (no geometric tail).
pub fn horizon_for_tolerance(r_max: f64, gamma: f64, tol: f64) -> Option<usize> {
    assert!(tol > 0.0 && r_max >= 0.0 && gamma > 0.0 && gamma <= 1.0);
    if r_max == 0.0 {
        return Some(0);
    }
    if gamma >= 1.0 {
        return None;
    }
    let bound0 = r_max / (1.0 - gamma);
    if bound0 <= tol {
        return Some(0);
    }
    let h = ((tol * (1.0 - gamma) / r_max).ln() / gamma.ln()).ceil();
    Some(h.max(0.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::model::{InfoChannel, ObsChannel};
    use crate::pomdp::policy::{SeededTablePolicy, UniformPolicy};
    use crate::pomdp::sim::rollout;
    use crate::rng::stream;
    use crate::synthetic::random_discrete;

    fn single_state(gamma: f64) -> InformedPomdp {
        InformedPomdp::new(
            1,
            1,
            vec![1.0],
            vec![1.0],
            vec![1.0],
            gamma,
            InfoChannel::Discrete {
                cardinality: 1,
                probs: vec![1.0],
            },
            ObsChannel::Discrete {
                cardinality: 1,
                probs: vec![1.0],
            },
            vec![false],
        )
        .unwrap()
    }

    #[test]
    fn geometric_series_pins_the_horizon_convention() {
        let gamma = 0.9;
        let p = single_state(gamma);
        let h = History::new(Value::Index(0));
        let mut oracle = ExactOracle::new(&p, &UniformPolicy).unwrap();
        for horizon in 0..8 {
            let expect = (1.0 - gamma.powi(horizon as i32)) / (1.0 - gamma);
            let q = oracle.history_q(&h, 0, horizon).unwrap();
            let qi = oracle.informed_q(&h, 0, 0, horizon).unwrap();
            let v = oracle.history_v(&h, horizon).unwrap();
            let vi = oracle.informed_v(&h, 0, horizon).unwrap();
            for got in [q, qi, v, vi] {
                assert!((got - expect).abs() < 1e-12, "H={horizon}: {got} vs {expect}");
            }
        }
    }

    /// Model whose information channel reveals the state exactly; the
    /// observation still garbles it.
    fn revealing() -> InformedPomdp {
        InformedPomdp::new(
            3,
            2,
            vec![
                0.2, 0.5, 0.3, 0.6, 0.2, 0.2, // s0
                0.1, 0.8, 0.1, 0.3, 0.3, 0.4, // s1
                0.5, 0.25, 0.25, 0.2, 0.1, 0.7, // s2
            ],
            vec![0.4, -0.3, 1.0, 0.2, -0.8, 0.6],
            vec![0.5, 0.3, 0.2],
            0.8,
            InfoChannel::Discrete {
                cardinality: 3,
                probs: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            },
            ObsChannel::Discrete {
                cardinality: 2,
                probs: vec![0.9, 0.1, 0.3, 0.7, 0.5, 0.5],
            },
            vec![false, false, false],
        )
        .unwrap()
    }

    /// Independent path enumeration for the full-revelation case: when the
    /// information sample pins the state, the informed value is the plain
    /// state-conditioned value of the history policy.
    fn enum_state_q(
        p: &InformedPomdp,
        policy: &dyn TabularPolicy,
        h: &History,
        s: usize,
        a: usize,
        horizon: usize,
    ) -> f64 {
        if horizon == 0 {
            return 0.0;
        }
        let mut v = p.reward(s, a);
        if horizon > 1 {
            let mut acc = 0.0;
            for (s2, &t) in p.transition_row(s, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for o2 in 0..p.num_obs().unwrap() {
                    let w = p.obs_prob(s2, o2);
                    if w == 0.0 {
                        continue;
                    }
                    let mut h2 = h.clone();
                    h2.push_step(a, Value::Index(o2));
                    let probs = policy.probs(&h2, p.num_actions());
                    let mut v2 = 0.0;
                    for (a2, &pa) in probs.iter().enumerate() {
                        if pa > 0.0 {
                            v2 += pa * enum_state_q(p, policy, &h2, s2, a2, horizon - 1);
                        }
                    }
                    acc += t * w * v2;
                }
            }
            v += p.discount() * acc;
        }
        v
    }

    #[test]
    fn full_revelation_matches_independent_path_enumeration() {
        let p = revealing();
        let policy = SeededTablePolicy::new(17);
        let mut oracle = ExactOracle::new(&p, &policy).unwrap();
        for o0 in 0..2 {
            let h = History::new(Value::Index(o0));
            for s in 0..3 {
                for a in 0..2 {
                    for horizon in 1..5 {
                        let got = oracle.informed_q(&h, s, a, horizon).unwrap();
                        let expect = enum_state_q(&p, &policy, &h, s, a, horizon);
                        assert!(
                            (got - expect).abs() < 1e-10,
                            "s={s} a={a} H={horizon}: {got} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn information_average_recovers_history_values() {
        let mut rng = stream(23, "oracle");
        let p = random_discrete(3, 2, 3, 2, &mut rng);
        let policy = SeededTablePolicy::new(7);
        let mut oracle = ExactOracle::new(&p, &policy).unwrap();

        let t = rollout(&p, &policy, 3, &mut stream(24, "roll"));
        for step in 0..=t.steps.len() {
            let h = t.history_at(step);
            let weights = info_posterior(&p, &h).unwrap();
            for horizon in 0..4 {
                for a in 0..p.num_actions() {
                    let mut mix = 0.0;
                    for (i, &wi) in weights.iter().enumerate() {
                        if wi > 0.0 {
                            mix += wi * oracle.informed_q(&h, i, a, horizon).unwrap();
                        }
                    }
                    let hq = oracle.history_q(&h, a, horizon).unwrap();
                    assert!((mix - hq).abs() < 1e-10, "H={horizon} a={a}");
                }
                let mut mixv = 0.0;
                for (i, &wi) in weights.iter().enumerate() {
                    if wi > 0.0 {
                        mixv += wi * oracle.informed_v(&h, i, horizon).unwrap();
                    }
                }
                let hv = oracle.history_v(&h, horizon).unwrap();
                assert!((mixv - hv).abs() < 1e-10, "H={horizon}");
            }
        }
    }

    #[test]
    fn bellman_backup_holds_with_test_side_branch_weights() {
        let mut rng = stream(31, "oracle");
        let p = random_discrete(4, 2, 2, 2, &mut rng);
        let policy = SeededTablePolicy::new(3);
        let mut oracle = ExactOracle::new(&p, &policy).unwrap();
        let h = History::new(Value::Index(1));
        let ni = p.num_infos().unwrap();
        let no = p.num_obs().unwrap();

        for info in 0..ni {
            for a in 0..p.num_actions() {
                for horizon in 1..4usize {
                    let lhs = oracle.informed_q(&h, info, a, horizon).unwrap();
                    let r = informed_reward(&p, &h, info, a).unwrap();
                    let bhi = belief_refine(&p, &h, info).unwrap().into_probs();
                    let mut pred = vec![0.0; p.num_states()];
                    for (s, &b) in bhi.iter().enumerate() {
                        for (s2, &t) in p.transition_row(s, a).iter().enumerate() {
                            pred[s2] += b * t;
                        }
                    }
                    let mut cont = 0.0;
                    for o2 in 0..no {
                        for i2 in 0..ni {
                            let w: f64 = (0..p.num_states())
                                .map(|s2| pred[s2] * p.info_prob(s2, i2) * p.obs_prob(i2, o2))
                                .sum();
                            if w == 0.0 {
                                continue;
                            }
                            let mut h2 = h.clone();
                            h2.push_step(a, Value::Index(o2));
                            cont += w * oracle.informed_v(&h2, i2, horizon - 1).unwrap();
                        }
                    }
                    let rhs = r + p.discount() * cont;
                    assert!((lhs - rhs).abs() < 1e-10, "i={info} a={a} H={horizon}");
                }
            }
        }
    }

    #[test]
    fn truncation_error_respects_the_geometric_tail_bound() {
        let mut rng = stream(41, "oracle");
        let p = random_discrete(3, 2, 2, 2, &mut rng);
        let policy = UniformPolicy;
        let mut oracle = ExactOracle::new(&p, &policy).unwrap();
        let h = History::new(Value::Index(0));
        let gamma = p.discount();
        for horizon in [2usize, 3, 4] {
            let tail = p.r_max() * gamma.powi(horizon as i32) / (1.0 - gamma);
            let a = oracle.history_v(&h, horizon).unwrap();
            let b = oracle.history_v(&h, horizon + 4).unwrap();
            assert!((a - b).abs() <= tail + 1e-12);
        }
        let want = 1e-3;
        let hh = horizon_for_tolerance(p.r_max(), gamma, want).unwrap();
        assert!(p.r_max() * gamma.powi(hh as i32) / (1.0 - gamma) <= want);
        if hh > 0 {
            assert!(p.r_max() * gamma.powi(hh as i32 - 1) / (1.0 - gamma) > want);
        }
    }

    #[test]
    fn node_budget_is_enforced() {
        let mut rng = stream(51, "oracle");
        let p = random_discrete(4, 2, 3, 2, &mut rng);
        let policy = UniformPolicy;
        let mut oracle = ExactOracle::with_budget(&p, &policy, 10).unwrap();
        let h = History::new(Value::Index(0));
        let err = oracle.informed_v(&h, 0, 6);
        assert!(matches!(err, Err(OracleError::BudgetExceeded { budget: 10 })));
    }

    #[test]
    fn continuous_channels_are_rejected() {
        let (p, _) = crate::synthetic::generate(
            &crate::synthetic::SyntheticConfig::default(),
            &mut stream(1, "gen"),
        );
        assert!(matches!(
            ExactOracle::new(&p, &UniformPolicy),
            Err(OracleError::NotDiscrete)
        ));
    }
}

use rand_chacha::ChaCha8Rng;

use super::history::History;
use crate::rng::sample_categorical;

/// A stochastic policy over a tabular model's actions, conditioned on the
/// action-observation history only.
pub trait TabularPolicy {
    /// Action probabilities; must be non-negative and sum to 1.
    fn probs(&self, history: &History, num_actions: usize) -> Vec<f64>;

    fn sample(&self, history: &History, num_actions: usize, rng: &mut ChaCha8Rng) -> usize {
        sample_categorical(&self.probs(history, num_actions), rng)
    }
}

/// Uniform over all actions.
pub struct UniformPolicy;

impl TabularPolicy for UniformPolicy {
    fn probs(&self, _history: &History, num_actions: usize) -> Vec<f64> {
        vec![1.0 / num_actions as f64; num_actions]
    }
}

/// History-independent softmax over fixed logits. Small enough to
/// differentiate by hand, which is what the gradient identity tests need.
pub struct SoftmaxPolicy {
    pub logits: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn new(logits: Vec<f64>) -> Self {
        SoftmaxPolicy { logits }
    }

    /// d log pi(a) / d logits = e_a - pi.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        let p = softmax(&self.logits);
        let mut g: Vec<f64> = p.iter().map(|x| -x).collect();
        g[action] += 1.0;
        g
    }
}

impl TabularPolicy for SoftmaxPolicy {
    fn probs(&self, _history: &History, num_actions: usize) -> Vec<f64> {
        assert_eq!(self.logits.len(), num_actions);
        softmax(&self.logits)
    }
}

/// A deterministic but effectively arbitrary history-dependent policy:
/// logits are hashed from (seed, history, action). Useful for exercising
/// history dependence in oracle tests without training anything.
pub struct SeededTablePolicy {
    pub seed: u64,
    /// Softmax temperature scale on the hashed logits.
    pub spread: f64,
}

impl SeededTablePolicy {
    pub fn new(seed: u64) -> Self {
        SeededTablePolicy { seed, spread: 1.0 }
    }
}

impl TabularPolicy for SeededTablePolicy {
    fn probs(&self, history: &History, num_actions: usize) -> Vec<f64> {
        let key = history
            .index_key()
            .expect("seeded table policy needs discrete histories");
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for v in key {
            h = mix(h ^ u64::from(v));
        }
        let logits: Vec<f64> = (0..num_actions)
            .map(|a| {
                let bits = mix(h ^ (a as u64).wrapping_mul(0xff51_afd7_ed55_8ccd));
                // Map to (-spread, spread).
                self.spread * (2.0 * (bits as f64 / u64::MAX as f64) - 1.0)
            })
            .collect();
        softmax(&logits)
    }
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    x = (x ^ (x >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

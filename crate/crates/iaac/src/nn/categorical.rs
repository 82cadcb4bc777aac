use rand::Rng;

/// A categorical action distribution built from logits via a max-shifted
/// log-softmax, so arbitrarily large logits stay finite.
#[derive(Debug, Clone)]
pub struct Categorical {
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Self {
        assert!(!logits.is_empty());
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = logits.iter().map(|l| l - m).collect();
        let lse = shifted.iter().map(|s| s.exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = shifted.iter().map(|s| s - lse).collect();
        let probs: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
        Categorical { log_probs, probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .zip(&self.log_probs)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &lp)| p * lp)
            .sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        crate::rng::sample_categorical(&self.probs, rng)
    }

    /// d log pi(a) / d logits = e_a - pi.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        let mut g: Vec<f64> = self.probs.iter().map(|&p| -p).collect();
        g[action] += 1.0;
        g
    }

    /// Gradient of the *negative* entropy with respect to the logits:
    /// d(-H)/d logit_k = p_k (log p_k + H).
    pub fn grad_neg_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs
            .iter()
            .zip(&self.log_probs)
            .map(|(&p, &lp)| p * (lp + h))
            .collect()
    }
}

//! Random instance generators.
//!
//! [`generate`] builds the continuous-information benchmark family: small
//! dense-reward MDP cores with a Gaussian information channel (a noisy
//! state embedding) and a linear-Gaussian observation of the information.
//! [`random_discrete`] builds fully discrete models sized for exact
//! enumeration, used as ground-truth fixtures in tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pomdp::{InfoChannel, InformedPomdp, ObsChannel};
use crate::rng::standard_normal;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub num_states: usize,
    pub num_actions: usize,
    /// Per-entry probability that a transition entry is zeroed before
    /// normalisation.
    pub sparsity: f64,
    pub info_dim: usize,
    pub obs_dim: usize,
    /// Standard deviation of the Gaussian information channel (varsigma).
    pub info_noise: f64,
    /// Standard deviation of the observation noise.
    pub obs_noise: f64,
    pub discount: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_states: 10,
            num_actions: 4,
            sparsity: 0.75,
            info_dim: 4,
            obs_dim: 4,
            info_noise: 0.1,
            obs_noise: 0.1,
            discount: 0.99,
        }
    }
}

/// Generation diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenStats {
    /// Fraction of transition entries zeroed, measured before row repair.
    pub zero_fraction: f64,
    /// Rows that lost all mass and were repaired to a point mass.
    pub repaired_rows: usize,
}

/// Draws one synthetic instance.
///
/// Transition rows are U(0,1) entries with each entry zeroed with
/// probability `sparsity`; a row left empty is repaired by putting mass 1 on
/// a uniformly chosen successor; surviving rows are normalised. Rewards are
/// U(-1,1). State embeddings are standard normal; the observation map has
/// N(0, 1/info_dim) entries so observation scale is roughly independent of
/// the information dimension. The initial state is uniform and no state is
/// terminal.
pub fn generate(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> (InformedPomdp, GenStats) {
    let ns = config.num_states;
    let na = config.num_actions;
    assert!(ns > 0 && na > 0 && config.info_dim > 0 && config.obs_dim > 0);
    assert!((0.0..=1.0).contains(&config.sparsity));

    let mut transition = vec![0.0; ns * na * ns];
    let mut zeroed = 0usize;
    let mut repaired = 0usize;
    for s in 0..ns {
        for a in 0..na {
            let row = &mut transition[(s * na + a) * ns..][..ns];
            let mut mass = 0.0;
            for x in row.iter_mut() {
                if rng.gen::<f64>() < config.sparsity {
                    zeroed += 1;
                } else {
                    *x = rng.gen::<f64>();
                    mass += *x;
                }
            }
            if mass <= 0.0 {
                repaired += 1;
                let s2 = rng.gen_range(0..ns);
                row[s2] = 1.0;
            } else {
                for x in row.iter_mut() {
                    *x /= mass;
                }
            }
        }
    }

    let reward: Vec<f64> = (0..ns * na).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let embeddings: Vec<Vec<f64>> = (0..ns)
        .map(|_| (0..config.info_dim).map(|_| standard_normal(rng)).collect())
        .collect();
    let scale = 1.0 / (config.info_dim as f64).sqrt();
    let map: Vec<Vec<f64>> = (0..config.obs_dim)
        .map(|_| {
            (0..config.info_dim)
                .map(|_| scale * standard_normal(rng))
                .collect()
        })
        .collect();

    let pomdp = InformedPomdp::new(
        ns,
        na,
        transition,
        reward,
        vec![1.0 / ns as f64; ns],
        config.discount,
        InfoChannel::Gaussian {
            embeddings,
            noise: config.info_noise,
        },
        ObsChannel::Linear {
            map,
            noise: config.obs_noise,
        },
        vec![false; ns],
    )
    .expect("generated instance validates");

    let stats = GenStats {
        zero_fraction: zeroed as f64 / (ns * na * ns) as f64,
        repaired_rows: repaired,
    };
    (pomdp, stats)
}

/// The mean embedding of each state, when the instance has a Gaussian
/// information channel.
pub fn state_embeddings(pomdp: &InformedPomdp) -> Option<&[Vec<f64>]> {
    match pomdp.info_channel() {
        InfoChannel::Gaussian { embeddings, .. } => Some(embeddings),
        InfoChannel::Discrete { .. } => None,
    }
}

/// A fully discrete random model small enough for exact enumeration.
///
/// All probability rows are strictly positive (smoothed uniform draws), so
/// every observation and information value stays reachable and belief
/// filters never hit zero-probability evidence.
pub fn random_discrete(
    num_states: usize,
    num_actions: usize,
    num_infos: usize,
    num_obs: usize,
    rng: &mut ChaCha8Rng,
) -> InformedPomdp {
    let smooth_row = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / z).collect()
    };

    let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        transition.extend(smooth_row(rng, num_states));
    }
    let reward: Vec<f64> = (0..num_states * num_actions)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let initial = smooth_row(rng, num_states);
    let mut info_probs = Vec::with_capacity(num_states * num_infos);
    for _ in 0..num_states {
        info_probs.extend(smooth_row(rng, num_infos));
    }
    let mut obs_probs = Vec::with_capacity(num_infos * num_obs);
    for _ in 0..num_infos {
        obs_probs.extend(smooth_row(rng, num_obs));
    }
    let discount = rng.gen_range(0.5..0.95);

    InformedPomdp::new(
        num_states,
        num_actions,
        transition,
        reward,
        initial,
        discount,
        InfoChannel::Discrete {
            cardinality: num_infos,
            probs: info_probs,
        },
        ObsChannel::Discrete {
            cardinality: num_obs,
            probs: obs_probs,
        },
        vec![false; num_states],
    )
    .expect("random discrete model validates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn default_instance_validates_and_reports_sparsity() {
        let mut rng = stream(11, "gen");
        let (p, stats) = generate(&SyntheticConfig::default(), &mut rng);
        assert_eq!(p.num_states(), 10);
        assert_eq!(p.num_actions(), 4);
        assert!(stats.zero_fraction > 0.6 && stats.zero_fraction < 0.9);
        assert!(state_embeddings(&p).is_some());
        for r in p.reward_table() {
            assert!((-1.0..1.0).contains(r));
        }
    }

    #[test]
    fn sparsity_knob_is_monotone_in_expectation() {
        let frac = |sparsity: f64| {
            let cfg = SyntheticConfig {
                sparsity,
                ..Default::default()
            };
            let mut rng = stream(42, "gen");
            generate(&cfg, &mut rng).1.zero_fraction
        };
        assert!(frac(0.3) < frac(0.6));
        assert!(frac(0.6) < frac(0.9));
    }

    #[test]
    fn zero_sparsity_repairs_nothing() {
        let cfg = SyntheticConfig {
            sparsity: 0.0,
            ..Default::default()
        };
        let mut rng = stream(3, "gen");
        let (_, stats) = generate(&cfg, &mut rng);
        assert_eq!(stats.zero_fraction, 0.0);
        assert_eq!(stats.repaired_rows, 0);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cfg = SyntheticConfig::default();
        let (a, _) = generate(&cfg, &mut stream(9, "gen"));
        let (b, _) = generate(&cfg, &mut stream(9, "gen"));
        assert_eq!(a.transition_table(), b.transition_table());
        assert_eq!(a.reward_table(), b.reward_table());
    }

    #[test]
    fn discrete_fixture_is_fully_supported() {
        let mut rng = stream(5, "fixture");
        let p = random_discrete(4, 2, 3, 2, &mut rng);
        for s in 0..4 {
            for i in 0..3 {
                assert!(p.info_prob(s, i) > 0.0);
            }
            for o in 0..2 {
                assert!(p.induced_obs_prob(s, o) > 0.0);
            }
        }
    }
}

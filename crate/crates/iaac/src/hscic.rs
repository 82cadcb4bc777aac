//! Kernel test for whether the privileged signal predicts returns beyond
//! what history and action already do.
//!
//! The quantity estimated is the Hilbert-Schmidt norm of the difference
//! between the conditional joint embedding of (return, signal) given
//! (history, action) and the product of the conditional marginals; it
//! vanishes exactly under conditional independence. The plug-in estimator
//! uses RBF kernels and a ridge-regularized kernel regression
//! `W = (K_Z + ridge I)^-1`. Significance comes from a permutation test
//! that shuffles the signal column.
//!
//! For a query column `k` and `u = W k`, the squared pointwise value is
//!
//! ```text
//! u' (K_X . K_Y) u  -  2 u' ((K_X u) . (K_Y u))  +  (u' K_X u)(u' K_Y u)
//! ```
//!
//! with `.` the entrywise product. The mean statistic averages
//! `sqrt(max(0, .))` over the sample queries.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::Env;
use crate::rng::indexed_stream;
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum HscicError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("sample columns have mismatched lengths")]
    MismatchedLengths,
    #[error("median pairwise distance is zero (all points identical)")]
    ZeroBandwidth,
    #[error("bandwidths and ridge must be positive")]
    BadConfig,
    #[error("statistic is not finite")]
    NonFinite,
}

/// Kernel choices. `None` bandwidths resolve to the median pairwise
/// distance of the corresponding sample column; the ridge scales with the
/// sample count so the regression stays conditioned as n grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub bandwidth_x: Option<f64>,
    pub bandwidth_y: Option<f64>,
    pub bandwidth_z: Option<f64>,
    /// ridge = ridge_scale * n.
    pub ridge_scale: f64,
    /// Resolve bandwidths on the first half of the data and compute the
    /// statistic on the second half.
    pub data_split: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            bandwidth_x: None,
            bandwidth_y: None,
            bandwidth_z: None,
            ridge_scale: 1e-3,
            data_split: false,
        }
    }
}

/// Test inputs: per sample a scalar return `x`, a signal vector `y`, and a
/// conditioning vector `z` (history summary plus current action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HscicSamples {
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl HscicSamples {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn check(&self) -> Result<(), HscicError> {
        if self.y.len() != self.x.len() || self.z.len() != self.x.len() {
            return Err(HscicError::MismatchedLengths);
        }
        Ok(())
    }

    fn x_points(&self) -> Vec<Vec<f64>> {
        self.x.iter().map(|&g| vec![g]).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Gram matrix with entries `exp(-|x_i - x_j|^2 / (2 bw^2))`.
pub fn rbf_matrix(points: &[Vec<f64>], bandwidth: f64) -> DMatrix<f64> {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    let n = points.len();
    let denom = 2.0 * bandwidth * bandwidth;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = (-sq_dist(&points[i], &points[j]) / denom).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Median pairwise Euclidean distance over i < j.
pub fn median_heuristic(points: &[Vec<f64>]) -> Result<f64, HscicError> {
    if points.len() < 2 {
        return Err(HscicError::TooFewSamples {
            need: 2,
            got: points.len(),
        });
    }
    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in 0..i {
            dists.push(sq_dist(&points[i], &points[j]).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let med = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if med <= 0.0 {
        return Err(HscicError::ZeroBandwidth);
    }
    Ok(med)
}

/// Bandwidth for data with repeated points: median over the *positive*
/// pairwise distances. A column of identical points gets 1.0; its kernel
/// matrix is all ones at any bandwidth, so the value is arbitrary.
pub fn resolve_bandwidth(points: &[Vec<f64>]) -> Result<f64, HscicError> {
    match median_heuristic(points) {
        Err(HscicError::ZeroBandwidth) => {}
        other => return other,
    }
    let mut dists = Vec::new();
    for i in 0..points.len() {
        for j in 0..i {
            let d = sq_dist(&points[i], &points[j]).sqrt();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return Ok(1.0);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    Ok(if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    })
}

/// Squared pointwise value at one query column `k_z` of the Z kernel,
/// evaluated straight from the printed formula. May come out slightly
/// negative numerically; callers clamp before taking roots.
pub fn hscic_pointwise(
    k_x: &DMatrix<f64>,
    k_y: &DMatrix<f64>,
    k_z: &DMatrix<f64>,
    k_col: &DVector<f64>,
    ridge: f64,
) -> Result<f64, HscicError> {
    if ridge <= 0.0 {
        return Err(HscicError::BadConfig);
    }
    let n = k_z.nrows();
    let mut reg = k_z.clone();
    for i in 0..n {
        reg[(i, i)] += ridge;
    }
    let chol = Cholesky::new(reg).ok_or(HscicError::NonFinite)?;
    let u = chol.solve(k_col);
    let value = pointwise_from_u(k_x, k_y, &u);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(HscicError::NonFinite)
    }
}

fn pointwise_from_u(k_x: &DMatrix<f64>, k_y: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let xu = k_x * u;
    let yu = k_y * u;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for i in 0..u.len() {
        t2 += u[i] * xu[i] * yu[i];
        for j in 0..u.len() {
            t1 += u[i] * k_x[(i, j)] * k_y[(i, j)] * u[j];
        }
    }
    let t3 = u.dot(&xu) * u.dot(&yu);
    t1 - 2.0 * t2 + t3
}

/// Bandwidths and ridge actually used after resolution, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedKernels {
    pub bandwidth_x: f64,
    pub bandwidth_y: f64,
    pub bandwidth_z: f64,
    pub ridge: f64,
    pub n: usize,
}

struct Prepared {
    k_x: DMatrix<f64>,
    k_y: DMatrix<f64>,
    /// U = (K_Z + ridge I)^-1 K_Z; column j is `u` for query z_j.
    u: DMatrix<f64>,
    /// K_X U, reused across permutations of Y.
    xu: DMatrix<f64>,
    resolved: ResolvedKernels,
}

fn prepare(samples: &HscicSamples, config: &KernelConfig) -> Result<Prepared, HscicError> {
    samples.check()?;
    let n = samples.len();
    if n < 2 {
        return Err(HscicError::TooFewSamples { need: 2, got: n });
    }
    if !(config.ridge_scale > 0.0) {
        return Err(HscicError::BadConfig);
    }

    // Under data splitting the first half only picks bandwidths.
    let (bw_data_end, test_start) = if config.data_split {
        if n < 4 {
            return Err(HscicError::TooFewSamples { need: 4, got: n });
        }
        (n / 2, n / 2)
    } else {
        (n, 0)
    };

    let x_pts = samples.x_points();
    let resolve = |fixed: Option<f64>, pts: &[Vec<f64>]| -> Result<f64, HscicError> {
        match fixed {
            Some(b) if b > 0.0 => Ok(b),
            Some(_) => Err(HscicError::BadConfig),
            None => resolve_bandwidth(&pts[..bw_data_end]),
        }
    };
    let bx = resolve(config.bandwidth_x, &x_pts)?;
    let by = resolve(config.bandwidth_y, &samples.y)?;
    let bz = resolve(config.bandwidth_z, &samples.z)?;

    let x_test = &x_pts[test_start..];
    let y_test = &samples.y[test_start..];
    let z_test = &samples.z[test_start..];
    let m = x_test.len();
    let ridge = config.ridge_scale * m as f64;

    let k_x = rbf_matrix(x_test, bx);
    let k_y = rbf_matrix(y_test, by);
    let k_z = rbf_matrix(z_test, bz);
    let mut reg = k_z.clone();
    for i in 0..m {
        reg[(i, i)] += ridge;
    }
    let chol = Cholesky::new(reg).ok_or(HscicError::NonFinite)?;
    let u = chol.solve(&k_z);
    let xu = &k_x * &u;
    Ok(Prepared {
        k_x,
        k_y,
        u,
        xu,
        resolved: ResolvedKernels {
            bandwidth_x: bx,
            bandwidth_y: by,
            bandwidth_z: bz,
            ridge,
            n: m,
        },
    })
}

/// Mean statistic given a (possibly permuted) Y kernel.
fn mean_given_ky(p: &Prepared, k_y: &DMatrix<f64>) -> Result<f64, HscicError> {
    let m = p.u.ncols();
    let yu = k_y * &p.u;
    // (K_X . K_Y) U, the only other matrix product that depends on Y.
    let mut a = p.k_x.clone();
    a.component_mul_assign(k_y);
    let au = &a * &p.u;

    let mut total = 0.0;
    for j in 0..m {
        let uj = p.u.column(j);
        let t1 = uj.dot(&au.column(j));
        let mut t2 = 0.0;
        for i in 0..m {
            t2 += uj[i] * p.xu[(i, j)] * yu[(i, j)];
        }
        let t3 = uj.dot(&p.xu.column(j)) * uj.dot(&yu.column(j));
        let sq = t1 - 2.0 * t2 + t3;
        if !sq.is_finite() {
            return Err(HscicError::NonFinite);
        }
        total += sq.max(0.0).sqrt();
    }
    Ok(total / m as f64)
}

/// Average pointwise statistic over all sample queries.
pub fn mean_statistic(
    samples: &HscicSamples,
    config: &KernelConfig,
) -> Result<(f64, ResolvedKernels), HscicError> {
    let p = prepare(samples, config)?;
    let stat = mean_given_ky(&p, &p.k_y)?;
    Ok((stat, p.resolved))
}

/// Outcome of one permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HscicReport {
    pub mean_statistic: f64,
    pub permuted: Vec<f64>,
    pub p_value: f64,
    pub kernels: ResolvedKernels,
    pub config: KernelConfig,
    pub seed: u64,
}

/// Permutes the signal column B times; `p = #{permuted >= observed} / B`.
/// Rejection at a level is the caller's decision.
pub fn permutation_test(
    samples: &HscicSamples,
    config: &KernelConfig,
    b: usize,
    seed: u64,
) -> Result<HscicReport, HscicError> {
    assert!(b >= 1, "need at least one permutation");
    let p = prepare(samples, config)?;
    let observed = mean_given_ky(&p, &p.k_y)?;

    let m = p.u.ncols();
    let mut permuted = Vec::with_capacity(b);
    let mut at_least = 0usize;
    for rep in 0..b {
        let mut rng = indexed_stream(seed, "hscic/permutation", rep as u64);
        let perm = random_permutation(m, &mut rng);
        let mut ky_b = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                ky_b[(i, j)] = p.k_y[(perm[i], perm[j])];
            }
        }
        let stat = mean_given_ky(&p, &ky_b)?;
        if stat >= observed {
            at_least += 1;
        }
        permuted.push(stat);
    }
    Ok(HscicReport {
        mean_statistic: observed,
        permuted,
        p_value: at_least as f64 / b as f64,
        kernels: p.resolved,
        config: config.clone(),
        seed,
    })
}

fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Which signal column the samples carry as Y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum InfoMode {
    /// The environment's own privileged signal.
    FromEnv,
    /// A constant scalar: the degenerate no-signal row.
    Constant,
    /// The ground-state features: the fully revealing row.
    StateFeatures,
    /// Independent standard normal noise, the conditional-independence null.
    Noise { dim: usize },
}

/// How many (observation, previous-action) pairs summarize the history in Z.
pub const DEFAULT_HISTORY_WINDOW: usize = 4;

/// Rolls out a uniform-random policy and builds one test sample per visited
/// step: X the discounted return-to-go, Y the signal per `mode`, Z the
/// windowed history summary plus the one-hot current action.
pub fn collect_hscic_samples(
    env: &mut dyn Env,
    episodes: usize,
    horizon: usize,
    discount: f64,
    window: usize,
    mode: &InfoMode,
    rng: &mut ChaCha8Rng,
) -> HscicSamples {
    let dims = env.dims();
    let mut out = HscicSamples {
        x: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
    };
    for _ in 0..episodes {
        let traj = uniform_rollout(env, horizon, rng);
        let gains = traj.returns_to_go(discount);
        for t in 0..traj.len() {
            out.x.push(gains[t]);
            out.y.push(match mode {
                InfoMode::FromEnv => traj.steps[t].info.clone(),
                InfoMode::Constant => vec![0.0],
                InfoMode::StateFeatures => traj.steps[t].state.clone(),
                InfoMode::Noise { dim } => (0..*dim)
                    .map(|_| crate::rng::standard_normal(rng))
                    .collect(),
            });
            out.z.push(history_summary(&traj, t, window, horizon, &dims));
        }
    }
    out
}

fn uniform_rollout(env: &mut dyn Env, horizon: usize, rng: &mut ChaCha8Rng) -> Trajectory {
    use crate::trajectory::{FinalPoint, Step};
    let mut point = env.reset(rng);
    let mut steps = Vec::new();
    let num_actions = env.dims().num_actions;
    let mut terminated = false;
    while steps.len() < horizon {
        let action = rng.gen_range(0..num_actions);
        let outcome = env.step(action, rng);
        steps.push(Step {
            state: point.state,
            info: point.info,
            obs: point.obs,
            action,
            reward: outcome.reward,
            state_index: point.state_index,
        });
        point = outcome.point;
        if outcome.terminal {
            terminated = true;
            break;
        }
    }
    let truncated = !terminated;
    Trajectory {
        steps,
        last: Some(FinalPoint {
            state: point.state,
            info: point.info,
            obs: point.obs,
            state_index: point.state_index,
        }),
        terminated,
        truncated,
    }
}

/// Fixed-width embedding of the variable-length history at step `t`: the
/// last `window` observations, each preceded by the one-hot action that led
/// to it (zeros where the episode is younger than the window), the
/// normalized step index, and the one-hot action taken at `t`.
fn history_summary(
    traj: &Trajectory,
    t: usize,
    window: usize,
    horizon: usize,
    dims: &crate::envs::EnvDims,
) -> Vec<f64> {
    let per_slot = dims.obs + dims.num_actions;
    let mut z = Vec::with_capacity(window * per_slot + 1 + dims.num_actions);
    for k in (0..window).rev() {
        // Slot for step t - k.
        if k > t {
            z.extend(std::iter::repeat(0.0).take(per_slot));
            continue;
        }
        let step_idx = t - k;
        let mut action_slot = vec![0.0; dims.num_actions];
        if step_idx > 0 {
            action_slot[traj.steps[step_idx - 1].action] = 1.0;
        }
        z.extend(action_slot);
        z.extend(traj.steps[step_idx].obs.iter().copied());
    }
    z.push(t as f64 / horizon.max(1) as f64);
    let mut cur = vec![0.0; dims.num_actions];
    cur[traj.steps[t].action] = 1.0;
    z.extend(cur);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TabularEnv;
    use crate::pomdp::{InfoChannel, InformedPomdp, ObsChannel};
    use crate::rng::stream;

    fn random_points(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn rbf_matrix_has_unit_diagonal_and_known_off_diagonals() {
        let bw = 0.7;
        let pts = vec![vec![0.0, 0.0], vec![bw * 2f64.sqrt(), 0.0]];
        let k = rbf_matrix(&pts, bw);
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(1, 1)], 1.0);
        assert!((k[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rbf_matrix_is_positive_semidefinite() {
        let pts = random_points(50, 3, &mut stream(1, "psd"));
        let k = rbf_matrix(&pts, 1.3);
        let eig = k.symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| l >= -1e-10), "min eig {:?}", eig.min());
    }

    #[test]
    fn median_heuristic_matches_brute_force() {
        assert_eq!(median_heuristic(&[vec![0.0], vec![2.0]]).unwrap(), 2.0);
        assert_eq!(
            median_heuristic(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap(),
            1.0
        );

        let pts = random_points(100, 2, &mut stream(2, "median"));
        let mut dists = Vec::new();
        for i in 0..pts.len() {
            for j in 0..i {
                dists.push(sq_dist(&pts[i], &pts[j]).sqrt());
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = 0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2]);
        assert_eq!(median_heuristic(&pts).unwrap(), expect);

        assert!(matches!(
            median_heuristic(&[vec![1.0], vec![1.0], vec![1.0]]),
            Err(HscicError::ZeroBandwidth)
        ));
    }

    #[test]
    fn resolve_bandwidth_handles_repeated_points() {
        // No repeats: agrees with the strict median.
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(
            resolve_bandwidth(&pts).unwrap(),
            median_heuristic(&pts).unwrap()
        );
        // Identical points: unit bandwidth stands in for an arbitrary one.
        let same = vec![vec![2.0]; 5];
        assert_eq!(resolve_bandwidth(&same).unwrap(), 1.0);
        // Mostly repeated: more than half the pairs at distance zero sinks
        // the strict median, the positive-distance median still stands.
        // Points {0,0,0,0,2}: 6 zero pairs, 4 at distance 2.
        let mixed = vec![vec![0.0], vec![0.0], vec![0.0], vec![0.0], vec![2.0]];
        assert!(matches!(
            median_heuristic(&mixed),
            Err(HscicError::ZeroBandwidth)
        ));
        assert_eq!(resolve_bandwidth(&mixed).unwrap(), 2.0);
    }

    #[test]
    fn single_sample_value_matches_hand_evaluation() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let col = DVector::from_element(1, 1.0);
        let v = hscic_pointwise(&one, &one, &one, &col, 1.0).unwrap();
        // u = 1/2; u^2 (1 - u)^2 = 0.0625.
        assert!((v - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn efficient_mean_agrees_with_direct_pointwise_evaluation() {
        let mut rng = stream(3, "agree");
        let n = 24;
        let samples = HscicSamples {
            x: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            y: random_points(n, 2, &mut rng),
            z: random_points(n, 3, &mut rng),
        };
        let config = KernelConfig::default();
        let (stat, rk) = mean_statistic(&samples, &config).unwrap();

        let k_x = rbf_matrix(&samples.x_points(), rk.bandwidth_x);
        let k_y = rbf_matrix(&samples.y, rk.bandwidth_y);
        let k_z = rbf_matrix(&samples.z, rk.bandwidth_z);
        let mut direct = 0.0;
        for j in 0..n {
            let col = DVector::from_iterator(n, (0..n).map(|i| k_z[(i, j)]));
            let v = hscic_pointwise(&k_x, &k_y, &k_z, &col, rk.ridge).unwrap();
            direct += v.max(0.0).sqrt();
        }
        direct /= n as f64;
        assert!((stat - direct).abs() < 1e-10, "{stat} vs {direct}");
    }

    #[test]
    fn relabeling_the_samples_leaves_the_mean_unchanged() {
        let mut rng = stream(4, "relabel");
        let n = 20;
        let samples = HscicSamples {
            x: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            y: random_points(n, 2, &mut rng),
            z: random_points(n, 2, &mut rng),
        };
        let perm = random_permutation(n, &mut stream(5, "perm"));
        let shuffled = HscicSamples {
            x: perm.iter().map(|&i| samples.x[i]).collect(),
            y: perm.iter().map(|&i| samples.y[i].clone()).collect(),
            z: perm.iter().map(|&i| samples.z[i].clone()).collect(),
        };
        let config = KernelConfig::default();
        let (a, _) = mean_statistic(&samples, &config).unwrap();
        let (b, _) = mean_statistic(&shuffled, &config).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn constant_signal_gives_p_exactly_one_and_vanishing_statistic() {
        let mut rng = stream(6, "const");
        let n = 30;
        let samples = HscicSamples {
            x: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            y: vec![vec![0.0]; n],
            z: (0..n).map(|i| vec![i as f64]).collect(),
        };
        // Well-separated Z and a tiny ridge: the regression interpolates
        // and the statistic collapses.
        let config = KernelConfig {
            bandwidth_y: Some(1.0),
            bandwidth_z: Some(0.05),
            ridge_scale: 1e-10,
            ..KernelConfig::default()
        };
        let (stat, _) = mean_statistic(&samples, &config).unwrap();
        assert!(stat < 1e-6, "stat {stat}");

        let report = permutation_test(&samples, &config, 30, 11).unwrap();
        assert_eq!(report.p_value, 1.0);
        assert_eq!(report.permuted.len(), 30);
    }

    #[test]
    fn strong_dependence_beyond_z_is_detected() {
        let mut rng = stream(7, "dep");
        let n = 60;
        // Y literally determines X; Z is unrelated noise.
        let y: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }])
            .collect();
        let x: Vec<f64> = y.iter().map(|v| v[0]).collect();
        let z = random_points(n, 2, &mut rng);
        let dependent = HscicSamples { x, y, z: z.clone() };
        let constant = HscicSamples {
            x: dependent.x.clone(),
            y: vec![vec![0.0]; n],
            z,
        };
        // X is two-valued and Y degenerate in the second row, so medians
        // are unusable; pin both bandwidths to compare like with like.
        let config = KernelConfig {
            bandwidth_x: Some(1.0),
            bandwidth_y: Some(1.0),
            ..KernelConfig::default()
        };
        let (dep_stat, _) = mean_statistic(&dependent, &config).unwrap();
        let (const_stat, _) = mean_statistic(&constant, &config).unwrap();
        assert!(
            dep_stat > 10.0 * const_stat.max(1e-12),
            "dependent {dep_stat} vs constant {const_stat}"
        );

        let report = permutation_test(&dependent, &config, 30, 13).unwrap();
        assert!(report.p_value <= 0.1, "p {}", report.p_value);
    }

    #[test]
    fn collected_returns_match_the_trajectory_oracle() {
        let pomdp = InformedPomdp::new(
            2,
            2,
            vec![0.6, 0.4, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8],
            vec![1.0, -1.0, 0.5, 0.25],
            vec![0.5, 0.5],
            0.9,
            InfoChannel::Discrete {
                cardinality: 2,
                probs: vec![0.9, 0.1, 0.2, 0.8],
            },
            ObsChannel::Discrete {
                cardinality: 2,
                probs: vec![0.8, 0.2, 0.3, 0.7],
            },
            vec![false, false],
        )
        .unwrap();
        let mut env = TabularEnv::new(pomdp, 25);
        let mut rng = stream(8, "collect");
        let mut replay = rng.clone();
        let samples = collect_hscic_samples(
            &mut env,
            4,
            6,
            0.9,
            DEFAULT_HISTORY_WINDOW,
            &InfoMode::FromEnv,
            &mut rng,
        );
        // No terminal states: every episode contributes its full horizon.
        assert_eq!(samples.len(), 4 * 6);
        // Replaying the rollouts from the cloned stream recovers the exact
        // X column and the per-step signals.
        let mut at = 0;
        for _ in 0..4 {
            let traj = uniform_rollout(&mut env, 6, &mut replay);
            let gains = traj.returns_to_go(0.9);
            for t in 0..traj.len() {
                assert_eq!(samples.x[at], gains[t]);
                assert_eq!(samples.y[at], traj.steps[t].info);
                at += 1;
            }
        }
        assert_eq!(at, samples.len());
        let dims = env.dims();
        let z_dim = DEFAULT_HISTORY_WINDOW * (dims.obs + dims.num_actions) + 1 + dims.num_actions;
        assert!(samples.z.iter().all(|z| z.len() == z_dim));
        assert!(samples.y.iter().all(|y| y.len() == dims.info));
    }

    #[test]
    fn info_modes_change_only_the_signal_column() {
        let pomdp = InformedPomdp::new(
            2,
            1,
            vec![0.5, 0.5, 0.5, 0.5],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            0.9,
            InfoChannel::Discrete {
                cardinality: 2,
                probs: vec![1.0, 0.0, 0.0, 1.0],
            },
            ObsChannel::Discrete {
                cardinality: 2,
                probs: vec![0.5, 0.5, 0.5, 0.5],
            },
            vec![false, false],
        )
        .unwrap();
        let mut env = TabularEnv::new(pomdp, 10);
        for (mode, want_dim) in [
            (InfoMode::Constant, 1),
            (InfoMode::StateFeatures, 2),
            (InfoMode::Noise { dim: 3 }, 3),
        ] {
            let mut rng = stream(9, "modes");
            let s = collect_hscic_samples(&mut env, 2, 5, 0.9, 4, &mode, &mut rng);
            assert_eq!(s.len(), 10);
            assert!(s.y.iter().all(|y| y.len() == want_dim), "{mode:?}");
        }
        let mut rng = stream(9, "modes");
        let s = collect_hscic_samples(&mut env, 2, 5, 0.9, 4, &InfoMode::Constant, &mut rng);
        assert!(s.y.iter().all(|y| y == &vec![0.0]));
    }
}

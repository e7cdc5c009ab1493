//! Conjugate Bayesian arm models: Beta-Bernoulli and Gaussian with known
//! noise variance.
//!
//! A [`BeliefVector`] holds one [`ArmPrior`] per arm. Updates are pure: they
//! return a new belief and only ever touch the pulled arm. Outcomes (a
//! parameter draw plus a full reward matrix) are sampled parameters-first and
//! then time-major, so an outcome drawn for horizon `T` is a prefix of the one
//! drawn from the same stream for any longer horizon.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IrsError, Result};
use crate::special::{self, normal_cdf, normal_pdf, CompensatedSum};

/// Reward model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    BetaBernoulli,
    Gaussian,
}

/// Posterior over one arm's mean parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ArmPrior {
    /// `θ ~ Beta(alpha, beta)`, rewards `Bernoulli(θ)`.
    BetaBernoulli { alpha: f64, beta: f64 },
    /// `θ ~ N(mean, variance)`, rewards `N(θ, noise_variance)`.
    GaussianKnownVar {
        mean: f64,
        variance: f64,
        noise_variance: f64,
    },
}

impl ArmPrior {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        let p = ArmPrior::BetaBernoulli { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(mean: f64, variance: f64, noise_variance: f64) -> Result<Self> {
        let p = ArmPrior::GaussianKnownVar {
            mean,
            variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => {
                if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
                    return Err(IrsError::InvalidInput(format!(
                        "beta prior needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
                    )));
                }
            }
            ArmPrior::GaussianKnownVar {
                mean,
                variance,
                noise_variance,
            } => {
                if !mean.is_finite()
                    || !(variance > 0.0 && variance.is_finite())
                    || !(noise_variance > 0.0 && noise_variance.is_finite())
                {
                    return Err(IrsError::InvalidInput(format!(
                        "gaussian prior needs finite mean and positive variances, got \
                         (mean {mean}, variance {variance}, noise {noise_variance})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            ArmPrior::BetaBernoulli { .. } => ModelFamily::BetaBernoulli,
            ArmPrior::GaussianKnownVar { .. } => ModelFamily::Gaussian,
        }
    }

    /// Posterior mean of the arm's mean reward.
    #[inline]
    pub fn mean(&self) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => alpha / (alpha + beta),
            ArmPrior::GaussianKnownVar { mean, .. } => mean,
        }
    }

    /// Standard deviation of `θ` under this belief.
    pub fn theta_std(&self) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => {
                let s = alpha + beta;
                (alpha * beta / (s * s * (s + 1.0))).sqrt()
            }
            ArmPrior::GaussianKnownVar { variance, .. } => variance.sqrt(),
        }
    }

    /// Standard deviation of a single reward given `θ` (Gaussian only).
    pub fn noise_std(&self) -> Option<f64> {
        match *self {
            ArmPrior::BetaBernoulli { .. } => None,
            ArmPrior::GaussianKnownVar { noise_variance, .. } => Some(noise_variance.sqrt()),
        }
    }

    /// CDF of `θ` under this belief.
    pub fn theta_cdf(&self, x: f64) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => special::beta_cdf(alpha, beta, x),
            ArmPrior::GaussianKnownVar { mean, variance, .. } => {
                normal_cdf((x - mean) / variance.sqrt())
            }
        }
    }

    /// Quantile of `θ` under this belief.
    pub fn theta_quantile(&self, q: f64) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => special::beta_quantile(alpha, beta, q),
            ArmPrior::GaussianKnownVar { mean, variance, .. } => {
                mean + variance.sqrt() * special::normal_quantile(q)
            }
        }
    }

    pub fn check_reward(&self, reward: f64) -> Result<()> {
        match self {
            ArmPrior::BetaBernoulli { .. } if reward != 0.0 && reward != 1.0 => Err(
                IrsError::InvalidInput(format!("bernoulli reward must be 0 or 1, got {reward}")),
            ),
            ArmPrior::GaussianKnownVar { .. } if !reward.is_finite() => Err(
                IrsError::InvalidInput(format!("gaussian reward must be finite, got {reward}")),
            ),
            _ => Ok(()),
        }
    }

    /// Bayesian update after one observed reward.
    pub fn update(&self, reward: f64) -> Result<ArmPrior> {
        self.check_reward(reward)?;
        Ok(match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => ArmPrior::BetaBernoulli {
                alpha: alpha + reward,
                beta: beta + 1.0 - reward,
            },
            ArmPrior::GaussianKnownVar {
                mean,
                variance,
                noise_variance,
            } => {
                let prec = 1.0 / variance;
                let noise_prec = 1.0 / noise_variance;
                let post_prec = prec + noise_prec;
                ArmPrior::GaussianKnownVar {
                    mean: (prec * mean + noise_prec * reward) / post_prec,
                    variance: 1.0 / post_prec,
                    noise_variance,
                }
            }
        })
    }

    /// Posterior after `n` observations whose sum is `total`.
    #[inline]
    pub fn after(&self, n: usize, total: f64) -> ArmPrior {
        let n = n as f64;
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => ArmPrior::BetaBernoulli {
                alpha: alpha + total,
                beta: beta + n - total,
            },
            ArmPrior::GaussianKnownVar {
                mean,
                variance,
                noise_variance,
            } => {
                let prec = 1.0 / variance;
                let post_prec = prec + n / noise_variance;
                ArmPrior::GaussianKnownVar {
                    mean: (prec * mean + total / noise_variance) / post_prec,
                    variance: 1.0 / post_prec,
                    noise_variance,
                }
            }
        }
    }

    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .expect("validated beta parameters")
                .sample(rng),
            ArmPrior::GaussianKnownVar { mean, variance, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
        }
    }

    #[inline]
    pub fn sample_reward<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        match *self {
            ArmPrior::BetaBernoulli { .. } => {
                if rng.gen::<f64>() < theta {
                    1.0
                } else {
                    0.0
                }
            }
            ArmPrior::GaussianKnownVar { noise_variance, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                theta + noise_variance.sqrt() * z
            }
        }
    }
}

/// Beliefs across all arms of one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector {
    arms: Vec<ArmPrior>,
}

impl BeliefVector {
    /// At least one arm, all arms of one family.
    pub fn new(arms: Vec<ArmPrior>) -> Result<Self> {
        let Some(first) = arms.first() else {
            return Err(IrsError::InvalidInput("belief needs at least one arm".into()));
        };
        let family = first.family();
        for arm in &arms {
            arm.validate()?;
            if arm.family() != family {
                return Err(IrsError::ModelMismatch(
                    "all arms of a belief must share one model family".into(),
                ));
            }
        }
        Ok(Self { arms })
    }

    /// `k` copies of the same prior.
    pub fn uniform(k: usize, prior: ArmPrior) -> Result<Self> {
        Self::new(vec![prior; k])
    }

    pub fn arms(&self) -> &[ArmPrior] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn family(&self) -> ModelFamily {
        self.arms[0].family()
    }

    pub fn arm(&self, arm: usize) -> Result<&ArmPrior> {
        self.arms.get(arm).ok_or(IrsError::ArmOutOfRange {
            arm,
            arms: self.arms.len(),
        })
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmPrior::mean).collect()
    }

    /// Index of the arm with the highest posterior mean (lowest index on ties).
    pub fn myopic_arm(&self) -> usize {
        special::argmax_first(&self.means())
    }

    pub(crate) fn update_in_place(&mut self, arm: usize, reward: f64) -> Result<()> {
        let next = self.arm(arm)?.update(reward)?;
        self.arms[arm] = next;
        Ok(())
    }
}

/// One sampled future: parameters and the full reward matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub theta: Vec<f64>,
    /// `rewards[a][n]` is the reward of the `(n+1)`-th pull of arm `a`.
    pub rewards: Vec<Vec<f64>>,
}

impl Outcome {
    pub fn arms(&self) -> usize {
        self.theta.len()
    }

    /// Number of rewards held per arm.
    pub fn horizon(&self) -> usize {
        self.rewards.first().map_or(0, Vec::len)
    }

    /// Copy keeping only the first `horizon` rewards of each arm.
    pub fn truncated(&self, horizon: usize) -> Result<Outcome> {
        if horizon > self.horizon() {
            return Err(IrsError::InvalidInput(format!(
                "outcome holds {} rewards per arm, {horizon} requested",
                self.horizon()
            )));
        }
        Ok(Outcome {
            theta: self.theta.clone(),
            rewards: self.rewards.iter().map(|r| r[..horizon].to_vec()).collect(),
        })
    }

    /// Order-sensitive digest of every parameter and reward bit.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325_u64;
        let mut eat = |x: f64| {
            h = crate::rng::splitmix64(h ^ x.to_bits());
        };
        self.theta.iter().copied().for_each(&mut eat);
        for row in &self.rewards {
            row.iter().copied().for_each(&mut eat);
        }
        h
    }
}

/// Posterior-mean trajectories, `mu[a][n]` after `n` observations of arm `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTrajectory {
    pub mu: Vec<Vec<f64>>,
}

impl MeanTrajectory {
    /// Trajectories of every arm over the first `len` rewards of `outcome`.
    pub fn from_outcome(belief: &BeliefVector, outcome: &Outcome, len: usize) -> Result<Self> {
        if outcome.arms() != belief.len() {
            return Err(IrsError::InvalidInput(format!(
                "outcome has {} arms, belief has {}",
                outcome.arms(),
                belief.len()
            )));
        }
        let mu = belief
            .arms()
            .iter()
            .zip(&outcome.rewards)
            .map(|(prior, row)| {
                let row = row.get(..len).ok_or_else(|| {
                    IrsError::InvalidInput(format!(
                        "reward row has {} entries, {len} needed",
                        row.len()
                    ))
                })?;
                mean_trajectory(prior, row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu })
    }

    pub fn arms(&self) -> usize {
        self.mu.len()
    }
}

pub fn update(belief: &BeliefVector, arm: usize, reward: f64) -> Result<BeliefVector> {
    let mut next = belief.clone();
    next.update_in_place(arm, reward)?;
    Ok(next)
}

pub fn posterior_mean(belief: &BeliefVector, arm: usize) -> Result<f64> {
    Ok(belief.arm(arm)?.mean())
}

/// Draw `θ ~ prior` for every arm, then `horizon` rewards per arm.
pub fn sample_outcome<R: Rng + ?Sized>(
    belief: &BeliefVector,
    horizon: usize,
    rng: &mut R,
) -> Result<Outcome> {
    if horizon == 0 {
        return Err(IrsError::InvalidInput("horizon must be at least 1".into()));
    }
    let theta: Vec<f64> = belief.arms().iter().map(|p| p.sample_theta(rng)).collect();
    let mut rewards = vec![Vec::with_capacity(horizon); belief.len()];
    for _ in 0..horizon {
        for ((prior, &th), row) in belief.arms().iter().zip(&theta).zip(rewards.iter_mut()) {
            row.push(prior.sample_reward(th, rng));
        }
    }
    Ok(Outcome { theta, rewards })
}

/// Beliefs `y_0..=y_n` obtained by folding `rewards` into `prior`.
pub fn belief_trajectory(prior: &ArmPrior, rewards: &[f64]) -> Result<Vec<ArmPrior>> {
    let mut out = Vec::with_capacity(rewards.len() + 1);
    out.push(*prior);
    let mut total = CompensatedSum::new();
    for (n, &r) in rewards.iter().enumerate() {
        prior.check_reward(r)?;
        total.add(r);
        out.push(prior.after(n + 1, total.value()));
    }
    Ok(out)
}

/// Posterior means after `0..=rewards.len()` observations.
pub fn mean_trajectory(prior: &ArmPrior, rewards: &[f64]) -> Result<Vec<f64>> {
    Ok(belief_trajectory(prior, rewards)?
        .iter()
        .map(ArmPrior::mean)
        .collect())
}

/// One draw of the posterior mean after `n_obs` future observations, using
/// the sufficient statistic instead of simulating the reward path.
pub fn sample_fh_mean<R: Rng + ?Sized>(prior: &ArmPrior, n_obs: usize, rng: &mut R) -> f64 {
    if n_obs == 0 {
        return prior.mean();
    }
    let theta = prior.sample_theta(rng);
    let total = match *prior {
        ArmPrior::BetaBernoulli { .. } => {
            let p = theta.clamp(0.0, 1.0);
            Binomial::new(n_obs as u64, p)
                .expect("probability within [0, 1]")
                .sample(rng) as f64
        }
        ArmPrior::GaussianKnownVar { noise_variance, .. } => {
            let n = n_obs as f64;
            let z: f64 = StandardNormal.sample(rng);
            n * theta + (n * noise_variance).sqrt() * z
        }
    };
    prior.after(n_obs, total).mean()
}

/// `E[max_a θ_a]` under independent per-arm beliefs, by deterministic quadrature.
pub fn expected_max_mean(belief: &BeliefVector) -> Result<f64> {
    expected_max_of(belief.arms())
}

pub(crate) fn expected_max_of(arms: &[ArmPrior]) -> Result<f64> {
    let value = match arms {
        [] => return Err(IrsError::InvalidInput("no arms".into())),
        [single] => single.mean(),
        _ => match arms[0].family() {
            ModelFamily::BetaBernoulli => beta_expected_max(arms),
            ModelFamily::Gaussian => {
                let params: Vec<(f64, f64)> =
                    arms.iter().map(|a| (a.mean(), a.theta_std())).collect();
                gaussian_expected_max(&params)
            }
        },
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(IrsError::Numerical(format!(
            "expected maximum quadrature produced {value}"
        )))
    }
}

/// Incomplete-beta recurrence along a Beta-Bernoulli belief trajectory.
pub(crate) fn beta_path(trajectory: &[ArmPrior]) -> special::BetaPath {
    let (a0, b0) = match trajectory.first() {
        Some(&ArmPrior::BetaBernoulli { alpha, beta }) => (alpha, beta),
        _ => panic!("beta_path needs a Beta-Bernoulli trajectory"),
    };
    let successes: Vec<bool> = trajectory
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (ArmPrior::BetaBernoulli { alpha: a, .. }, ArmPrior::BetaBernoulli { alpha: b, .. }) => b > a,
            _ => unreachable!("mixed trajectory"),
        })
        .collect();
    special::BetaPath::new(a0, b0, &successes)
}

/// Gauss-Legendre nodes and weights on `[0, 1]` for Beta-family integrals.
pub(crate) fn unit_interval_rule() -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| special::gauss_legendre_256().mapped(0.0, 1.0).collect())
}

// E[max] = ∫_0^1 (1 - Π_a F_a(x)) dx for θ supported on [0, 1].
fn beta_expected_max(arms: &[ArmPrior]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &(x, w) in unit_interval_rule() {
        let prod: f64 = arms.iter().map(|a| a.theta_cdf(x)).product();
        acc.add(w * (1.0 - prod));
    }
    acc.value()
}

/// `E[max]` of independent normals given as `(mean, std)` pairs.
pub(crate) fn gaussian_expected_max(params: &[(f64, f64)]) -> f64 {
    match *params {
        [(m, _)] => m,
        [(m1, s1), (m2, s2)] => {
            // E[max(X, Y)] = m1 Φ(a) + m2 Φ(-a) + θ φ(a), θ² = s1² + s2², a = (m1 - m2)/θ
            let theta = s1.hypot(s2);
            let a = (m1 - m2) / theta;
            m1 * normal_cdf(a) + m2 * normal_cdf(-a) + theta * normal_pdf(a)
        }
        _ => gaussian_expected_max_quadrature(params),
    }
}

// E[max] = L + ∫_L^U (1 - Π Φ_a) over L = max(m - 9s), U = max(m + 9s):
// below L the product is under Φ(-9), above U its complement is.
// Arms whose CDF is already 1 on [L, U] drop out of the product. Panel
// breakpoints sit every two standard deviations within ±9 sd of each
// remaining arm.
pub(crate) fn gaussian_expected_max_quadrature(params: &[(f64, f64)]) -> f64 {
    const REACH: f64 = 9.0;
    let lower = params
        .iter()
        .map(|&(m, s)| m - REACH * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = params
        .iter()
        .map(|&(m, s)| m + REACH * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let live: Vec<(f64, f64)> = params
        .iter()
        .copied()
        .filter(|&(m, s)| m + REACH * s > lower)
        .collect();
    let mut breaks = vec![lower, upper];
    for &(m, s) in &live {
        breaks.extend(
            (-9..=9)
                .step_by(2)
                .map(|k| m + s * k as f64)
                .filter(|x| (lower..=upper).contains(x)),
        );
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * (1.0 + a.abs()));
    let rule = special::gauss_legendre_panel();
    let mut acc = CompensatedSum::new();
    for pair in breaks.windows(2) {
        for (x, w) in rule.mapped(pair[0], pair[1]) {
            let prod: f64 = live
                .iter()
                .map(|&(m, s)| normal_cdf((x - m) / s))
                .product();
            acc.add(w * (1.0 - prod));
        }
    }
    lower + acc.value()
}

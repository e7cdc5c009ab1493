//! Index policies: for each arm, the outside-option level `λ` at which pulling
//! the arm stops being worth trying along one sampled belief trajectory.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, ArmPrior, BeliefVector};
use crate::error::{IrsError, Result};
use crate::special::{self, normal_cdf, normal_pdf, BetaPath};

/// Absolute bisection tolerance on `λ`.
pub const INDEX_TOLERANCE: f64 = 1e-6;
/// Bisection iteration cap.
pub const INDEX_MAX_ITERATIONS: u32 = 60;

/// Which worth-trying function defines the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexVariant {
    Standard,
    Star,
}

impl fmt::Display for IndexVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexVariant::Standard => "standard",
            IndexVariant::Star => "star",
        })
    }
}

/// `E[max(θ, λ)]` for `θ ~ Beta(α, β)`.
pub fn gamma_beta(alpha: f64, beta: f64, lambda: f64) -> f64 {
    let mean = alpha / (alpha + beta);
    if lambda <= 0.0 {
        return mean;
    }
    if lambda >= 1.0 {
        return lambda;
    }
    let below = special::beta_cdf(alpha, beta, lambda);
    let shifted = special::beta_cdf(alpha + 1.0, beta, lambda);
    beta_gamma_from_cdfs(mean, lambda, below, shifted)
}

#[inline]
fn beta_gamma_from_cdfs(mean: f64, lambda: f64, cdf: f64, shifted: f64) -> f64 {
    (lambda * cdf + mean * (1.0 - shifted)).max(lambda).max(mean)
}

/// `E[max(θ, λ)]` for `θ ~ N(mean, 1/precision²)`; `precision` is the
/// reciprocal standard deviation.
#[inline]
pub fn gamma_gauss(mean: f64, precision: f64, lambda: f64) -> f64 {
    // With z = ν(λ - m) and g(u) = φ(u) + uΦ(u) ≥ 0:
    // Γ = max(m, λ) + g(-|z|)/ν.
    let z = precision * (lambda - mean);
    let u = -z.abs();
    let top = mean.max(lambda);
    if u < -9.0 {
        return top;
    }
    let g = (normal_pdf(u) + u * normal_cdf(u)).max(0.0);
    top + g / precision
}

/// `Γ^λ_n` over a belief trajectory at one `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTable {
    pub lambda: f64,
    pub values: Vec<f64>,
}

impl GammaTable {
    /// Direct closed-form evaluation at every belief.
    pub fn new(beliefs: &[ArmPrior], lambda: f64) -> Self {
        let values = beliefs.iter().map(|b| gamma_of(b, lambda)).collect();
        Self { lambda, values }
    }
}

/// `E[max(θ, λ)]` under one belief.
pub fn gamma_of(belief: &ArmPrior, lambda: f64) -> f64 {
    match *belief {
        ArmPrior::BetaBernoulli { alpha, beta } => gamma_beta(alpha, beta, lambda),
        ArmPrior::GaussianKnownVar { mean, variance, .. } => {
            gamma_gauss(mean, 1.0 / variance.sqrt(), lambda)
        }
    }
}

#[derive(Debug, Clone)]
enum GammaSource {
    Beta(BetaPath),
    Gauss(Vec<f64>),
}

/// One arm's sampled belief trajectory, prepared for repeated `φ(λ)` scans.
#[derive(Debug, Clone)]
pub struct ArmTrajectory {
    means: Vec<f64>,
    source: GammaSource,
    bracket: (f64, f64),
}

impl ArmTrajectory {
    /// `beliefs[n]` is the belief after `n` observations; at least one entry.
    pub fn new(beliefs: &[ArmPrior]) -> Result<Self> {
        let first = beliefs
            .first()
            .ok_or_else(|| IrsError::InvalidInput("empty belief trajectory".into()))?;
        let means = beliefs.iter().map(ArmPrior::mean).collect();
        let (source, bracket) = match *first {
            ArmPrior::BetaBernoulli { .. } => {
                (GammaSource::Beta(bayes::beta_path(beliefs)), (0.0, 1.0))
            }
            ArmPrior::GaussianKnownVar {
                mean,
                variance,
                noise_variance,
            } => {
                let precisions = beliefs
                    .iter()
                    .map(|b| 1.0 / b.theta_std())
                    .collect();
                let spread = 8.0 * (variance.sqrt() + noise_variance.sqrt());
                (GammaSource::Gauss(precisions), (mean - spread, mean + spread))
            }
        };
        Ok(Self {
            means,
            source,
            bracket,
        })
    }

    /// Trajectory of `prior` through `rewards`.
    pub fn from_rewards(prior: &ArmPrior, rewards: &[f64]) -> Result<Self> {
        Self::new(&bayes::belief_trajectory(prior, rewards)?)
    }

    /// Longest horizon this trajectory supports.
    pub fn max_horizon(&self) -> usize {
        self.means.len() - 1
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Initial search bracket for the index.
    pub fn bracket(&self) -> (f64, f64) {
        self.bracket
    }

    /// `Γ^λ_0..=Γ^λ_T`.
    pub fn gamma_table(&self, horizon: usize, lambda: f64) -> GammaTable {
        let mut values = Vec::with_capacity(horizon + 1);
        self.for_each_gamma(horizon, lambda, |_, g| {
            values.push(g);
            true
        });
        GammaTable { lambda, values }
    }

    fn for_each_gamma(&self, horizon: usize, lambda: f64, mut f: impl FnMut(usize, f64) -> bool) {
        match &self.source {
            GammaSource::Beta(path) => path.walk(lambda, |n, cdf, shifted| {
                n <= horizon && f(n, beta_gamma_from_cdfs(self.means[n], lambda, cdf, shifted))
            }),
            GammaSource::Gauss(precisions) => {
                for n in 0..=horizon {
                    if !f(n, gamma_gauss(self.means[n], precisions[n], lambda)) {
                        break;
                    }
                }
            }
        }
    }

    // Largest candidate value of φ, or the first non-negative one when `early`.
    fn scan(&self, horizon: usize, lambda: f64, variant: IndexVariant, early: bool) -> f64 {
        let t = horizon as f64;
        let mut best = f64::NEG_INFINITY;
        let mut gamma0 = 0.0;
        let mut prev = 0.0;
        let mut min_gamma = f64::INFINITY;
        let mut sum = 0.0;
        self.for_each_gamma(horizon, lambda, |n, g| {
            if n == 0 {
                gamma0 = g;
                prev = g;
                min_gamma = g;
                return true;
            }
            let mu_prev = self.means[n - 1];
            let cand = match variant {
                IndexVariant::Standard => {
                    sum += mu_prev - prev;
                    min_gamma = min_gamma.min(g);
                    t * gamma0 + (t - n as f64) * (lambda - min_gamma) + sum - t * lambda
                }
                IndexVariant::Star => {
                    sum += mu_prev - lambda - (g - gamma0);
                    sum
                }
            };
            prev = g;
            if cand > best {
                best = cand;
            }
            !(early && cand >= 0.0)
        });
        best
    }

    /// `φ(λ)` over horizon `T`.
    pub fn phi(&self, horizon: usize, lambda: f64, variant: IndexVariant) -> f64 {
        self.scan(horizon, lambda, variant, false)
    }

    /// `φ(λ) ≥ 0`, stopping at the first non-negative candidate.
    pub fn worth_trying(&self, horizon: usize, lambda: f64, variant: IndexVariant) -> bool {
        self.scan(horizon, lambda, variant, true) >= 0.0
    }
}

/// Free-function form of [`ArmTrajectory::phi`] / [`ArmTrajectory::worth_trying`].
pub fn worth_trying(
    trajectory: &ArmTrajectory,
    horizon: usize,
    lambda: f64,
    variant: IndexVariant,
) -> (bool, f64) {
    let phi = trajectory.phi(horizon, lambda, variant);
    (phi >= 0.0, phi)
}

/// Index of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub lambda_star: f64,
    pub iterations: u32,
}

/// Indices of all arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub entries: Vec<IndexEntry>,
}

impl IndexResult {
    /// Arm with the largest index (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        let values: Vec<f64> = self.entries.iter().map(|e| e.lambda_star).collect();
        special::argmax_first(&values)
    }
}

fn check_horizon(traj: &ArmTrajectory, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(IrsError::InvalidInput("horizon must be at least 1".into()));
    }
    if traj.max_horizon() < horizon {
        return Err(IrsError::InvalidInput(format!(
            "trajectory supports horizon {}, {horizon} requested",
            traj.max_horizon()
        )));
    }
    Ok(())
}

/// Bisection state of one arm.
#[derive(Debug, Clone, Copy)]
struct Search {
    lo: f64,
    hi: f64,
    iterations: u32,
}

impl Search {
    fn start(traj: &ArmTrajectory, horizon: usize, variant: IndexVariant) -> Result<Self> {
        if horizon == 1 && variant == IndexVariant::Standard {
            // φ(λ) = μ_0 - λ, so the boundary is the current mean.
            let m = traj.means[0];
            return Ok(Self {
                lo: m,
                hi: m,
                iterations: 0,
            });
        }
        let (mut lo, mut hi) = traj.bracket();
        let ok = |lo: f64, hi: f64| {
            traj.worth_trying(horizon, lo, variant) && !traj.worth_trying(horizon, hi, variant)
        };
        if !ok(lo, hi) {
            let width = hi - lo;
            lo -= width;
            hi += width;
            if !ok(lo, hi) {
                return Err(IrsError::Numerical(format!(
                    "index bracket [{lo}, {hi}] does not contain the worth-trying boundary"
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            iterations: 0,
        })
    }

    fn done(&self) -> bool {
        self.hi - self.lo < INDEX_TOLERANCE || self.iterations >= INDEX_MAX_ITERATIONS
    }

    fn step(&mut self, traj: &ArmTrajectory, horizon: usize, variant: IndexVariant) {
        let mid = 0.5 * (self.lo + self.hi);
        if traj.worth_trying(horizon, mid, variant) {
            self.lo = mid;
        } else {
            self.hi = mid;
        }
        self.iterations += 1;
    }

    fn entry(&self) -> IndexEntry {
        IndexEntry {
            lambda_star: 0.5 * (self.lo + self.hi),
            iterations: self.iterations,
        }
    }
}

/// Index of one arm by bisection on the worth-trying boundary.
pub fn compute_index(
    trajectory: &ArmTrajectory,
    horizon: usize,
    variant: IndexVariant,
) -> Result<IndexEntry> {
    check_horizon(trajectory, horizon)?;
    let mut s = Search::start(trajectory, horizon, variant)?;
    while !s.done() {
        s.step(trajectory, horizon, variant);
    }
    Ok(s.entry())
}

/// Indices of every arm, each searched to full tolerance.
pub fn compute_indices(
    trajectories: &[ArmTrajectory],
    horizon: usize,
    variant: IndexVariant,
) -> Result<IndexResult> {
    let entries = trajectories
        .iter()
        .map(|t| compute_index(t, horizon, variant))
        .collect::<Result<_>>()?;
    Ok(IndexResult { entries })
}

/// Arm with the largest index. Searches advance in lockstep and an arm is
/// dropped once its upper bracket falls below another arm's lower bracket,
/// which cannot change the winner.
pub fn best_index_arm(
    trajectories: &[ArmTrajectory],
    horizon: usize,
    variant: IndexVariant,
) -> Result<usize> {
    if trajectories.is_empty() {
        return Err(IrsError::InvalidInput("no arms".into()));
    }
    for t in trajectories {
        check_horizon(t, horizon)?;
    }
    let mut searches: Vec<Option<Search>> = trajectories
        .iter()
        .map(|t| Search::start(t, horizon, variant).map(Some))
        .collect::<Result<_>>()?;
    loop {
        let floor = searches
            .iter()
            .flatten()
            .map(|s| s.lo)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut active = 0;
        for s in searches.iter_mut() {
            if s.is_some_and(|s| s.hi < floor) {
                *s = None;
            }
            if s.is_some_and(|s| !s.done()) {
                active += 1;
            }
        }
        if active == 0 {
            break;
        }
        for (s, traj) in searches.iter_mut().zip(trajectories) {
            if let Some(s) = s.as_mut().filter(|s| !s.done()) {
                s.step(traj, horizon, variant);
            }
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (arm, s) in searches.iter().enumerate() {
        if let Some(s) = s {
            let v = s.entry().lambda_star;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((arm, v));
            }
        }
    }
    Ok(best.expect("at least one arm survives").0)
}

/// Sample one outcome of `horizon` rewards per arm, build the belief
/// trajectories and return the arm with the largest index.
pub fn irs_index_decide<R: Rng + ?Sized>(
    belief: &BeliefVector,
    horizon: usize,
    rng: &mut R,
    variant: IndexVariant,
) -> Result<usize> {
    let outcome = bayes::sample_outcome(belief, horizon, rng)?;
    let trajectories = belief
        .arms()
        .iter()
        .zip(&outcome.rewards)
        .map(|(p, row)| ArmTrajectory::from_rewards(p, row))
        .collect::<Result<Vec<_>>>()?;
    best_index_arm(&trajectories, horizon, variant)
}

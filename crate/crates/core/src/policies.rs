//! Sequential policies: every inner-problem solver wrapped as a decision
//! rule, the Bayes-UCB baseline and the exact Bellman solution for small
//! Beta-Bernoulli instances.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, ArmPrior, BeliefVector, MeanTrajectory, ModelFamily, Outcome};
use crate::error::{IrsError, Result};
use crate::index::{self, IndexVariant};
use crate::inner::{self, PenaltyKind, DEFAULT_VEMAX_BUDGET};
use crate::lattice::{self, CompositionIndexer};
use crate::special::{self, CompensatedSum};

/// Default cap on the number of belief states the exact DP may visit.
pub const DEFAULT_DP_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "ts")]
    Ts,
    #[serde(rename = "irs-fh")]
    IrsFh,
    #[serde(rename = "irs-vzero")]
    IrsVZero,
    #[serde(rename = "irs-vemax")]
    IrsVEMax,
    #[serde(rename = "irs-index")]
    IrsIndex,
    #[serde(rename = "irs-index-star")]
    IrsIndexStar,
    #[serde(rename = "bayes-ucb")]
    BayesUcb,
    #[serde(rename = "opt")]
    OptDp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Ts,
        PolicyKind::IrsFh,
        PolicyKind::IrsVZero,
        PolicyKind::IrsVEMax,
        PolicyKind::IrsIndex,
        PolicyKind::IrsIndexStar,
        PolicyKind::BayesUcb,
        PolicyKind::OptDp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ts => "ts",
            PolicyKind::IrsFh => "irs-fh",
            PolicyKind::IrsVZero => "irs-vzero",
            PolicyKind::IrsVEMax => "irs-vemax",
            PolicyKind::IrsIndex => "irs-index",
            PolicyKind::IrsIndexStar => "irs-index-star",
            PolicyKind::BayesUcb => "bayes-ucb",
            PolicyKind::OptDp => "opt",
        }
    }

    /// Penalty whose inner problem this policy solves, if any.
    pub fn penalty(self) -> Option<PenaltyKind> {
        match self {
            PolicyKind::Ts => Some(PenaltyKind::Ts),
            PolicyKind::IrsFh => Some(PenaltyKind::IrsFh),
            PolicyKind::IrsVZero => Some(PenaltyKind::IrsVZero),
            PolicyKind::IrsVEMax => Some(PenaltyKind::IrsVEMax),
            _ => None,
        }
    }

    /// Policies that sample an outcome and solve an inner problem each epoch.
    pub fn is_irs(self) -> bool {
        !matches!(self, PolicyKind::BayesUcb | PolicyKind::OptDp)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = IrsError;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| IrsError::InvalidInput(format!("unknown policy '{s}'")))
    }
}

/// One simulated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// `Σ_t θ_{a_t}` under the episode's true parameters.
    pub realized_mean_payoff: f64,
}

/// A policy ready to act; holds the DP table for [`PolicyKind::OptDp`].
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    vemax_budget: u128,
    dp: Option<Arc<DpSolution>>,
}

impl Policy {
    /// Without a precomputed DP, `OptDp` re-solves from the current belief.
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            vemax_budget: DEFAULT_VEMAX_BUDGET,
            dp: None,
        }
    }

    /// Policy for episodes of `horizon` periods started from `prior`.
    pub fn prepared(kind: PolicyKind, horizon: usize, prior: &BeliefVector) -> Result<Self> {
        let mut p = Self::new(kind);
        if kind == PolicyKind::OptDp {
            p.dp = Some(Arc::new(opt_dp(horizon, prior)?));
        }
        Ok(p)
    }

    pub fn with_dp(kind: PolicyKind, dp: Arc<DpSolution>) -> Self {
        Self {
            dp: Some(dp),
            ..Self::new(kind)
        }
    }

    pub fn with_vemax_budget(mut self, budget: u128) -> Self {
        self.vemax_budget = budget;
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Action at epoch `epoch` (1-based) with `remaining` periods left.
    pub fn decide<R: Rng + ?Sized>(
        &self,
        epoch: usize,
        remaining: usize,
        belief: &BeliefVector,
        rng: &mut R,
    ) -> Result<usize> {
        if remaining == 0 {
            return Err(IrsError::InvalidInput("no periods remaining".into()));
        }
        match self.kind {
            PolicyKind::Ts => Ok(ts_decide(belief, rng)),
            PolicyKind::IrsFh => Ok(fh_decide(belief, remaining, rng)),
            PolicyKind::IrsVZero => vzero_decide(belief, remaining, rng),
            PolicyKind::IrsVEMax => {
                let outcome = bayes::sample_outcome(belief, remaining.max(2) - 1, rng)?;
                Ok(inner::solve_vemax_with_budget(&outcome, remaining, belief, self.vemax_budget)?
                    .first_action)
            }
            PolicyKind::IrsIndex => {
                index::irs_index_decide(belief, remaining, rng, IndexVariant::Standard)
            }
            PolicyKind::IrsIndexStar => {
                index::irs_index_decide(belief, remaining, rng, IndexVariant::Star)
            }
            PolicyKind::BayesUcb => bayes_ucb_decide(belief, epoch),
            PolicyKind::OptDp => match &self.dp {
                Some(dp) => dp.action_at(belief, remaining),
                None => Ok(opt_dp(remaining, belief)?.root_action()),
            },
        }
    }
}

/// Single decision of `policy` with `remaining` periods left, treating the
/// call as the first epoch (relevant to Bayes-UCB only).
pub fn decide<R: Rng + ?Sized>(
    policy: PolicyKind,
    remaining: usize,
    belief: &BeliefVector,
    rng: &mut R,
) -> Result<usize> {
    Policy::new(policy).decide(1, remaining, belief, rng)
}

fn ts_decide<R: Rng + ?Sized>(belief: &BeliefVector, rng: &mut R) -> usize {
    let theta: Vec<f64> = belief.arms().iter().map(|p| p.sample_theta(rng)).collect();
    special::argmax_first(&theta)
}

fn fh_decide<R: Rng + ?Sized>(belief: &BeliefVector, remaining: usize, rng: &mut R) -> usize {
    let means: Vec<f64> = belief
        .arms()
        .iter()
        .map(|p| bayes::sample_fh_mean(p, remaining - 1, rng))
        .collect();
    special::argmax_first(&means)
}

fn vzero_decide<R: Rng + ?Sized>(
    belief: &BeliefVector,
    remaining: usize,
    rng: &mut R,
) -> Result<usize> {
    let n = remaining - 1;
    let mu = belief
        .arms()
        .iter()
        .map(|p| sample_mean_row(p, n, rng))
        .collect();
    Ok(inner::solve_vzero(&MeanTrajectory { mu }, remaining)?.first_action)
}

// Posterior means after 0..=n simulated observations of one arm.
fn sample_mean_row<R: Rng + ?Sized>(prior: &ArmPrior, n: usize, rng: &mut R) -> Vec<f64> {
    let theta = prior.sample_theta(rng);
    let mut row = Vec::with_capacity(n + 1);
    row.push(prior.mean());
    let mut total = CompensatedSum::new();
    for i in 1..=n {
        total.add(prior.sample_reward(theta, rng));
        row.push(prior.after(i, total.value()).mean());
    }
    row
}

/// Arm with the highest posterior quantile at level `1 - 1/t`.
pub fn bayes_ucb_decide(belief: &BeliefVector, t: usize) -> Result<usize> {
    if t == 0 {
        return Err(IrsError::InvalidInput("epoch index starts at 1".into()));
    }
    let q = (1.0 - 1.0 / t as f64).clamp(0.5, 1.0 - 1e-12);
    let quantiles: Vec<f64> = belief.arms().iter().map(|p| p.theta_quantile(q)).collect();
    Ok(special::argmax_first(&quantiles))
}

/// Play `policy` for `horizon` periods against `nature`.
pub fn run_episode<R: Rng + ?Sized>(
    policy: &Policy,
    horizon: usize,
    prior: &BeliefVector,
    nature: &Outcome,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    if nature.arms() != prior.len() {
        return Err(IrsError::InvalidInput(format!(
            "nature has {} arms, belief has {}",
            nature.arms(),
            prior.len()
        )));
    }
    if nature.horizon() < horizon {
        return Err(IrsError::InvalidInput(format!(
            "nature holds {} rewards per arm, horizon is {horizon}",
            nature.horizon()
        )));
    }
    let mut belief = prior.clone();
    let mut pulls = vec![0usize; prior.len()];
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    for epoch in 1..=horizon {
        let arm = policy.decide(epoch, horizon - epoch + 1, &belief, rng)?;
        let reward = nature.rewards[arm][pulls[arm]];
        pulls[arm] += 1;
        belief.update_in_place(arm, reward)?;
        actions.push(arm);
        rewards.push(reward);
    }
    let mut payoff = CompensatedSum::new();
    for (n, theta) in pulls.iter().zip(&nature.theta) {
        payoff.add(*n as f64 * theta);
    }
    Ok(EpisodeRecord {
        actions,
        rewards,
        realized_mean_payoff: payoff.value(),
    })
}

/// Exact Bellman solution over Beta-Bernoulli count states.
///
/// A state is `(s_1, f_1, .., s_K, f_K)`, the successes and failures seen on
/// each arm since the root belief; states at depth `d` form one lattice layer.
#[derive(Debug, Clone)]
pub struct DpSolution {
    horizon: usize,
    prior: Vec<(f64, f64)>,
    value: f64,
    indexer: CompositionIndexer,
    offsets: Vec<usize>,
    actions: Vec<u8>,
}

impl DpSolution {
    /// `V*(T, y)` at the root.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.actions.len()
    }

    pub fn root_action(&self) -> usize {
        self.actions[0] as usize
    }

    /// Optimal action at count state `counts` (length `2K`).
    pub fn action_for_counts(&self, counts: &[u32]) -> Result<usize> {
        let depth: usize = counts.iter().map(|&c| c as usize).sum();
        if counts.len() != 2 * self.prior.len() || depth >= self.horizon {
            return Err(IrsError::InvalidInput(
                "count state outside the solved lattice".into(),
            ));
        }
        Ok(self.actions[self.offsets[depth] + self.indexer.rank(counts)] as usize)
    }

    /// Optimal action at `belief` reached from the root with `remaining` periods left.
    pub fn action_at(&self, belief: &BeliefVector, remaining: usize) -> Result<usize> {
        if belief.len() != self.prior.len() {
            return Err(IrsError::InvalidInput("belief arity differs from the DP".into()));
        }
        let mut counts = Vec::with_capacity(2 * self.prior.len());
        for (arm, &(a0, b0)) in belief.arms().iter().zip(&self.prior) {
            let ArmPrior::BetaBernoulli { alpha, beta } = *arm else {
                return Err(IrsError::ModelMismatch("exact DP needs Beta-Bernoulli arms".into()));
            };
            let (s, f) = (alpha - a0, beta - b0);
            if s < 0.0 || f < 0.0 || s.fract() != 0.0 || f.fract() != 0.0 {
                return Err(IrsError::InvalidInput(
                    "belief is not reachable from the DP root".into(),
                ));
            }
            counts.push(s as u32);
            counts.push(f as u32);
        }
        let depth: usize = counts.iter().map(|&c| c as usize).sum();
        if depth + remaining != self.horizon {
            return Err(IrsError::InvalidInput(format!(
                "belief at depth {depth} with {remaining} periods left does not match horizon {}",
                self.horizon
            )));
        }
        self.action_for_counts(&counts)
    }
}

/// Number of count states an exact DP of depth `T` over `K` arms visits.
pub fn dp_states(arms: usize, horizon: usize) -> u128 {
    lattice::binomial((horizon + 2 * arms) as u64, (2 * arms) as u64)
}

pub fn opt_dp(horizon: usize, prior: &BeliefVector) -> Result<DpSolution> {
    opt_dp_with_budget(horizon, prior, DEFAULT_DP_BUDGET)
}

/// Backward induction over all reachable count states.
pub fn opt_dp_with_budget(horizon: usize, prior: &BeliefVector, budget: u128) -> Result<DpSolution> {
    if horizon == 0 {
        return Err(IrsError::InvalidInput("horizon must be at least 1".into()));
    }
    if prior.family() != ModelFamily::BetaBernoulli {
        return Err(IrsError::ModelMismatch(
            "exact DP is available for Beta-Bernoulli arms only".into(),
        ));
    }
    let k = prior.len();
    let states = dp_states(k, horizon);
    if states > budget || k > usize::from(u8::MAX) {
        return Err(IrsError::InstanceTooLarge {
            what: "exact DP state space",
            required: states,
            budget,
        });
    }
    let params: Vec<(f64, f64)> = prior
        .arms()
        .iter()
        .map(|a| match *a {
            ArmPrior::BetaBernoulli { alpha, beta } => (alpha, beta),
            ArmPrior::GaussianKnownVar { .. } => unreachable!("family checked"),
        })
        .collect();
    let parts = 2 * k;
    // Only depths below T carry decisions.
    let indexer = CompositionIndexer::new(parts, horizon);
    let mut offsets = Vec::with_capacity(horizon + 1);
    offsets.push(0);
    for d in 0..horizon {
        offsets.push(offsets[d] + indexer.layer_size(d));
    }
    let mut actions = vec![0u8; offsets[horizon]];

    let mut next = vec![0.0f64; indexer.layer_size(horizon)];
    let mut succ = vec![0u32; parts];
    for d in (0..horizon).rev() {
        let mut cur = vec![0.0f64; indexer.layer_size(d)];
        let mut c = lattice::first_composition(parts, d as u32);
        let mut rank = 0;
        loop {
            let mut best = f64::NEG_INFINITY;
            let mut best_arm = 0;
            for (a, &(a0, b0)) in params.iter().enumerate() {
                let (s, f) = (c[2 * a] as f64, c[2 * a + 1] as f64);
                let p = (a0 + s) / (a0 + b0 + s + f);
                succ.copy_from_slice(&c);
                succ[2 * a] += 1;
                let win = next[indexer.rank(&succ)];
                succ[2 * a] -= 1;
                succ[2 * a + 1] += 1;
                let lose = next[indexer.rank(&succ)];
                let q = p * (1.0 + win) + (1.0 - p) * lose;
                if q > best {
                    best = q;
                    best_arm = a;
                }
            }
            cur[rank] = best;
            actions[offsets[d] + rank] = best_arm as u8;
            rank += 1;
            if !lattice::next_composition(&mut c) {
                break;
            }
        }
        next = cur;
    }
    Ok(DpSolution {
        horizon,
        prior: params,
        value: next[0],
        indexer,
        offsets,
        actions,
    })
}

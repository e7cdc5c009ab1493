//! Clairvoyant inner problems: given one sampled outcome, find the action plan
//! that maximizes rewards minus the penalty, and report its first action.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bayes::{self, ArmPrior, BeliefVector, MeanTrajectory, ModelFamily, Outcome};
use crate::error::{IrsError, Result};
use crate::lattice::{self, CompositionIndexer};
use crate::special::{self, CompensatedSum};

/// Default cap on `K * C(T + K, K)` lattice cell operations for V-EMax.
pub const DEFAULT_VEMAX_BUDGET: u128 = 50_000_000;

/// Penalty function defining an inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PenaltyKind {
    #[serde(rename = "ts")]
    Ts,
    #[serde(rename = "irs-fh")]
    IrsFh,
    #[serde(rename = "irs-vzero")]
    IrsVZero,
    #[serde(rename = "irs-vemax")]
    IrsVEMax,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::Ts,
        PenaltyKind::IrsFh,
        PenaltyKind::IrsVZero,
        PenaltyKind::IrsVEMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Ts => "ts",
            PenaltyKind::IrsFh => "irs-fh",
            PenaltyKind::IrsVZero => "irs-vzero",
            PenaltyKind::IrsVEMax => "irs-vemax",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = IrsError;

    fn from_str(s: &str) -> Result<Self> {
        PenaltyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| IrsError::InvalidInput(format!("unknown penalty '{s}'")))
    }
}

/// Pull counts per arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub counts: Vec<usize>,
}

impl Allocation {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plan {
    Allocation(Allocation),
    Sequence(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub first_action: usize,
    pub value: f64,
    pub plan: Plan,
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        Err(IrsError::InvalidInput("horizon must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_rewards(outcome: &Outcome, prior: &BeliefVector, needed: usize) -> Result<()> {
    if outcome.arms() != prior.len() {
        return Err(IrsError::InvalidInput(format!(
            "outcome has {} arms, belief has {}",
            outcome.arms(),
            prior.len()
        )));
    }
    if outcome.rewards.iter().any(|row| row.len() < needed) {
        return Err(IrsError::InvalidInput(format!(
            "outcome holds {} rewards per arm, {needed} needed",
            outcome.horizon()
        )));
    }
    Ok(())
}

fn single_arm_plan(arms: usize, arm: usize, horizon: usize) -> Plan {
    let mut counts = vec![0; arms];
    counts[arm] = horizon;
    Plan::Allocation(Allocation { counts })
}

/// Full information: pull the best true arm every period.
pub fn solve_ts(outcome: &Outcome, horizon: usize) -> Result<InnerSolution> {
    check_horizon(horizon)?;
    if outcome.theta.is_empty() {
        return Err(IrsError::InvalidInput("outcome has no arms".into()));
    }
    let best = special::argmax_first(&outcome.theta);
    Ok(InnerSolution {
        first_action: best,
        value: horizon as f64 * outcome.theta[best],
        plan: single_arm_plan(outcome.arms(), best, horizon),
    })
}

/// Pull the arm whose posterior mean after `T - 1` observations is highest.
pub fn solve_fh(outcome: &Outcome, horizon: usize, prior: &BeliefVector) -> Result<InnerSolution> {
    check_horizon(horizon)?;
    let n = horizon - 1;
    check_rewards(outcome, prior, n)?;
    let means: Vec<f64> = prior
        .arms()
        .iter()
        .zip(&outcome.rewards)
        .map(|(p, row)| {
            let total: CompensatedSum = row[..n].iter().copied().collect();
            p.after(n, total.value()).mean()
        })
        .collect();
    let best = special::argmax_first(&means);
    Ok(InnerSolution {
        first_action: best,
        value: horizon as f64 * means[best],
        plan: single_arm_plan(prior.len(), best, horizon),
    })
}

/// Best allocation of `T` pulls when the `n`-th pull of arm `a` earns
/// `mu[a][n - 1]`, by repeated sup-convolution.
pub fn solve_vzero(trajectory: &MeanTrajectory, horizon: usize) -> Result<InnerSolution> {
    check_horizon(horizon)?;
    let k = trajectory.arms();
    if k == 0 {
        return Err(IrsError::InvalidInput("trajectory has no arms".into()));
    }
    if trajectory.mu.iter().any(|row| row.len() < horizon) {
        return Err(IrsError::InvalidInput(format!(
            "trajectory rows need {horizon} entries"
        )));
    }
    let t = horizon;
    let prefix: Vec<Vec<f64>> = trajectory
        .mu
        .iter()
        .map(|row| {
            let mut acc = CompensatedSum::new();
            let mut s = Vec::with_capacity(t + 1);
            s.push(0.0);
            for &m in &row[..t] {
                acc.add(m);
                s.push(acc.value());
            }
            s
        })
        .collect();

    // best[j][n]: best value of n pulls spread over arms 0..=j. The last arm is
    // only ever needed at n = T.
    let mut best: Vec<Vec<f64>> = Vec::with_capacity(k);
    best.push(prefix[0].clone());
    let mut reversed = vec![0.0; t + 1];
    for s in prefix.iter().take(k.saturating_sub(1)).skip(1) {
        let prev = best.last().expect("non-empty");
        for (i, r) in reversed.iter_mut().enumerate() {
            *r = prev[t - i];
        }
        let next: Vec<f64> = (0..=t).map(|n| max_plus(&reversed[t - n..], &s[..=n])).collect();
        best.push(next);
    }
    let value = if k == 1 {
        prefix[0][t]
    } else {
        let prev = best.last().expect("non-empty");
        let s = &prefix[k - 1];
        (0..=t).map(|m| prev[t - m] + s[m]).fold(f64::NEG_INFINITY, f64::max)
    };

    // Backtrack: the smallest count for the later arm among ties.
    let mut counts = vec![0usize; k];
    let mut remaining = t;
    let mut target = value;
    for a in (1..k).rev() {
        let prev = &best[a - 1];
        let s = &prefix[a];
        let m = (0..=remaining)
            .find(|&m| prev[remaining - m] + s[m] == target)
            .ok_or_else(|| IrsError::Numerical("sup-convolution backtrack failed".into()))?;
        counts[a] = m;
        remaining -= m;
        target = prev[remaining];
    }
    counts[0] = remaining;

    let first_action = counts
        .iter()
        .enumerate()
        .fold(0, |b, (a, &c)| if c > counts[b] { a } else { b });
    Ok(InnerSolution {
        first_action,
        value,
        plan: Plan::Allocation(Allocation { counts }),
    })
}

// max_m (rev[m] + s[m]) with rev = prev reversed, four independent lanes.
#[inline]
fn max_plus(rev: &[f64], s: &[f64]) -> f64 {
    let len = s.len();
    let rev = &rev[..len];
    let mut lanes = [f64::NEG_INFINITY; 4];
    let mut chunks_r = rev.chunks_exact(4);
    let mut chunks_s = s.chunks_exact(4);
    for (r, q) in (&mut chunks_r).zip(&mut chunks_s) {
        for j in 0..4 {
            let v = r[j] + q[j];
            lanes[j] = if v > lanes[j] { v } else { lanes[j] };
        }
    }
    let mut best = lanes[0].max(lanes[1]).max(lanes[2].max(lanes[3]));
    for (r, q) in chunks_r.remainder().iter().zip(chunks_s.remainder()) {
        let v = r + q;
        if v > best {
            best = v;
        }
    }
    best
}

/// Lattice cell operations V-EMax needs at horizon `T` with `K` arms.
pub fn vemax_cells(arms: usize, horizon: usize) -> u128 {
    lattice::binomial((horizon + arms) as u64, arms as u64).saturating_mul(arms as u128)
}

/// V-EMax with the default budget.
pub fn solve_vemax(outcome: &Outcome, horizon: usize, prior: &BeliefVector) -> Result<InnerSolution> {
    solve_vemax_with_budget(outcome, horizon, prior, DEFAULT_VEMAX_BUDGET)
}

/// Expected best-arm mean at every node of the pull-count lattice.
struct EMaxOracle {
    beliefs: Vec<Vec<ArmPrior>>,
    // Beta: cdf[a][n][j] at the shared quadrature nodes.
    beta_cdf: Option<Vec<Vec<Vec<f64>>>>,
}

impl EMaxOracle {
    fn new(beliefs: Vec<Vec<ArmPrior>>, family: ModelFamily) -> Self {
        let beta_cdf = (family == ModelFamily::BetaBernoulli && beliefs.len() > 1).then(|| {
            let rule = bayes::unit_interval_rule();
            beliefs
                .iter()
                .map(|traj| {
                    let path = bayes::beta_path(traj);
                    let mut table = vec![vec![0.0; rule.len()]; traj.len()];
                    for (j, &(x, _)) in rule.iter().enumerate() {
                        path.walk(x, |n, cdf, _| {
                            table[n][j] = cdf;
                            true
                        });
                    }
                    table
                })
                .collect()
        });
        Self { beliefs, beta_cdf }
    }

    fn value(&self, counts: &[u32]) -> f64 {
        if self.beliefs.len() == 1 {
            return self.beliefs[0][counts[0] as usize].mean();
        }
        match &self.beta_cdf {
            Some(tables) => {
                let rule = bayes::unit_interval_rule();
                let mut acc = CompensatedSum::new();
                for (j, &(_, w)) in rule.iter().enumerate() {
                    let prod: f64 = tables
                        .iter()
                        .zip(counts)
                        .map(|(t, &n)| t[n as usize][j])
                        .product();
                    acc.add(w * (1.0 - prod));
                }
                acc.value()
            }
            None => {
                let params: Vec<(f64, f64)> = self
                    .beliefs
                    .iter()
                    .zip(counts)
                    .map(|(traj, &n)| {
                        let b = &traj[n as usize];
                        (b.mean(), b.theta_std())
                    })
                    .collect();
                bayes::gaussian_expected_max(&params)
            }
        }
    }
}

/// Exact dynamic program over the pull-count lattice for the V-EMax penalty.
pub fn solve_vemax_with_budget(
    outcome: &Outcome,
    horizon: usize,
    prior: &BeliefVector,
    budget: u128,
) -> Result<InnerSolution> {
    check_horizon(horizon)?;
    let t = horizon;
    let k = prior.len();
    check_rewards(outcome, prior, t - 1)?;
    let cells = vemax_cells(k, t);
    if cells > budget || k > usize::from(u8::MAX) {
        return Err(IrsError::InstanceTooLarge {
            what: "V-EMax lattice",
            required: cells,
            budget,
        });
    }

    let beliefs: Vec<Vec<ArmPrior>> = prior
        .arms()
        .iter()
        .zip(&outcome.rewards)
        .map(|(p, row)| bayes::belief_trajectory(p, &row[..t - 1]))
        .collect::<Result<_>>()?;
    let means: Vec<Vec<f64>> = beliefs
        .iter()
        .map(|traj| traj.iter().map(ArmPrior::mean).collect())
        .collect();
    let oracle = EMaxOracle::new(beliefs, prior.family());
    let idx = CompositionIndexer::new(k, t);

    let layer_gamma = |d: usize| -> Vec<f64> {
        // Layer T only ever enters with weight zero.
        if d == t {
            return vec![0.0; idx.layer_size(d)];
        }
        let mut out = Vec::with_capacity(idx.layer_size(d));
        let mut c = lattice::first_composition(k, d as u32);
        loop {
            out.push(oracle.value(&c));
            if !lattice::next_composition(&mut c) {
                break;
            }
        }
        out
    };

    let mut offsets = Vec::with_capacity(t + 2);
    offsets.push(0usize);
    for d in 0..=t {
        offsets.push(offsets[d] + idx.layer_size(d));
    }
    let mut action = vec![0u8; offsets[t + 1]];

    let mut gamma_prev = layer_gamma(0);
    let mut m_prev = vec![0.0];
    let mut pred = vec![0u32; k];
    for d in 1..=t {
        let gamma_cur = layer_gamma(d);
        let weight = (t - d) as f64;
        let mut m_cur = vec![f64::NEG_INFINITY; idx.layer_size(d)];
        let mut c = lattice::first_composition(k, d as u32);
        let mut rank = 0usize;
        loop {
            let mut best = f64::NEG_INFINITY;
            let mut best_arm = 0usize;
            for a in 0..k {
                if c[a] == 0 {
                    continue;
                }
                pred.copy_from_slice(&c);
                pred[a] -= 1;
                let p = idx.rank(&pred);
                let reward =
                    means[a][pred[a] as usize] + weight * (gamma_prev[p] - gamma_cur[rank]);
                let cand = m_prev[p] + reward;
                if cand > best {
                    best = cand;
                    best_arm = a;
                }
            }
            m_cur[rank] = best;
            action[offsets[d] + rank] = best_arm as u8;
            rank += 1;
            if !lattice::next_composition(&mut c) {
                break;
            }
        }
        gamma_prev = gamma_cur;
        m_prev = m_cur;
    }

    // Final face, scanned from the last lexicographic node so that ties favor
    // more pulls of lower-indexed arms.
    let mut best_rank = m_prev.len() - 1;
    for r in (0..m_prev.len()).rev() {
        if m_prev[r] > m_prev[best_rank] {
            best_rank = r;
        }
    }
    let value = m_prev[best_rank];
    if !value.is_finite() {
        return Err(IrsError::Numerical(format!("V-EMax value {value}")));
    }
    let mut node = {
        let mut c = lattice::first_composition(k, t as u32);
        for _ in 0..best_rank {
            lattice::next_composition(&mut c);
        }
        c
    };
    let mut sequence = vec![0usize; t];
    for d in (1..=t).rev() {
        let a = action[offsets[d] + idx.rank(&node)] as usize;
        sequence[d - 1] = a;
        node[a] -= 1;
    }
    Ok(InnerSolution {
        first_action: sequence[0],
        value,
        plan: Plan::Sequence(sequence),
    })
}

/// Dispatch to the solver for `penalty`.
pub fn solve(
    penalty: PenaltyKind,
    outcome: &Outcome,
    horizon: usize,
    prior: &BeliefVector,
) -> Result<InnerSolution> {
    solve_with_budget(penalty, outcome, horizon, prior, DEFAULT_VEMAX_BUDGET)
}

pub fn solve_with_budget(
    penalty: PenaltyKind,
    outcome: &Outcome,
    horizon: usize,
    prior: &BeliefVector,
    vemax_budget: u128,
) -> Result<InnerSolution> {
    match penalty {
        PenaltyKind::Ts => {
            check_rewards(outcome, prior, 0)?;
            solve_ts(outcome, horizon)
        }
        PenaltyKind::IrsFh => solve_fh(outcome, horizon, prior),
        PenaltyKind::IrsVZero => {
            check_horizon(horizon)?;
            check_rewards(outcome, prior, horizon - 1)?;
            let traj = MeanTrajectory::from_outcome(prior, outcome, horizon - 1)?;
            solve_vzero(&traj, horizon)
        }
        PenaltyKind::IrsVEMax => solve_vemax_with_budget(outcome, horizon, prior, vemax_budget),
    }
}

/// Penalized optimal value of one inner problem.
pub fn inner_value(
    penalty: PenaltyKind,
    outcome: &Outcome,
    horizon: usize,
    prior: &BeliefVector,
) -> Result<f64> {
    Ok(solve(penalty, outcome, horizon, prior)?.value)
}

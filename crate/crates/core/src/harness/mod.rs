//! Experiment engine: policy and penalty grids over a horizon grid, run with
//! common random numbers and aggregated into a regret table.
//!
//! Sample `i` draws its nature outcome once at the largest horizon from
//! `nature_stream(master, i)`. Every policy episode and every inner problem
//! for sample `i`, at every horizon, reads a prefix of that outcome.

pub mod config;
pub mod export;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ArmParam, ExperimentConfig, HorizonGrid, ModelSpec, OutputFormat};

use crate::bayes::{self, BeliefVector, Outcome};
use crate::bounds::{mean_and_stderr, nature_stream};
use crate::error::{IrsError, Result};
use crate::inner::{self, PenaltyKind};
use crate::policies::{self, Policy, PolicyKind};
use crate::rng::{role, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Policy,
    Bound,
    Benchmark,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::Policy => "policy",
            RowKind::Bound => "bound",
            RowKind::Benchmark => "benchmark",
        }
    }
}

/// Name of the benchmark row (`T · E[max_a θ_a]` by quadrature).
pub const BENCHMARK_NAME: &str = "benchmark";

/// One line of the regret table. Missing values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub kind: RowKind,
    pub name: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub regret: Option<f64>,
    pub regret_bound: Option<f64>,
    pub runtime_ms: Option<f64>,
}

/// A row that could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: RowKind,
    pub name: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegretTable {
    pub rows: Vec<RegretRow>,
    pub failures: Vec<Failure>,
}

impl RegretTable {
    pub fn row(&self, kind: RowKind, name: &str, horizon: usize) -> Option<&RegretRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.name == name && r.horizon == horizon)
    }
}

/// Result of [`run_experiment_detailed`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub table: RegretTable,
    /// `digests[i][j]`: digest of the nature outcome seen by cell `j` of sample `i`.
    pub digests: Vec<Vec<u64>>,
}

/// Rounds to 6 significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Policy(PolicyKind),
    Bound(PenaltyKind),
}

impl Job {
    fn kind(self) -> RowKind {
        match self {
            Job::Policy(_) => RowKind::Policy,
            Job::Bound(_) => RowKind::Bound,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Job::Policy(p) => p.name(),
            Job::Bound(z) => z.name(),
        }
    }
}

struct Cell {
    horizon: usize,
    job: Job,
    /// `None` for skipped or failed jobs.
    policy: Option<Result<Arc<Policy>, String>>,
}

struct CellOutput {
    benchmark: f64,
    value: Result<f64>,
    millis: f64,
    digest: u64,
}

fn policy_ordinal(kind: PolicyKind) -> u64 {
    PolicyKind::ALL.iter().position(|p| *p == kind).unwrap_or(0) as u64
}

/// Stream of one policy episode, keyed by sample, policy and horizon.
pub fn policy_stream(master: RngStream, sample: usize, kind: PolicyKind, horizon: usize) -> RngStream {
    master.derive_path(
        role::POLICY,
        &[sample as u64, policy_ordinal(kind), horizon as u64],
    )
}

fn plan_cells(config: &ExperimentConfig, prior: &BeliefVector, horizons: &[usize]) -> Vec<Cell> {
    let budget = config.vemax_budget as u128;
    let arms = prior.len();
    let mut cells = Vec::new();
    for &t in horizons {
        for &kind in &config.policies {
            let policy = if kind == PolicyKind::IrsVEMax && inner::vemax_cells(arms, t) > budget {
                Some(Err(skip_reason(arms, t, budget)))
            } else {
                Some(
                    Policy::prepared(kind, t, prior)
                        .map(|p| Arc::new(p.with_vemax_budget(budget)))
                        .map_err(|e| e.to_string()),
                )
            };
            cells.push(Cell {
                horizon: t,
                job: Job::Policy(kind),
                policy,
            });
        }
        for &z in &config.penalties {
            let policy = (z == PenaltyKind::IrsVEMax && inner::vemax_cells(arms, t) > budget)
                .then(|| Err(skip_reason(arms, t, budget)));
            cells.push(Cell {
                horizon: t,
                job: Job::Bound(z),
                policy,
            });
        }
    }
    cells
}

fn skip_reason(arms: usize, horizon: usize, budget: u128) -> String {
    format!(
        "skipped: V-EMax lattice needs {} cells, budget is {budget}",
        inner::vemax_cells(arms, horizon)
    )
}

fn run_cell(
    cell: &Cell,
    prior: &BeliefVector,
    master: RngStream,
    sample: usize,
    max_horizon: usize,
    vemax_budget: u128,
) -> Result<CellOutput> {
    let nature: Outcome = bayes::sample_outcome(prior, max_horizon, &mut nature_stream(master, sample).rng())?;
    let digest = nature.digest();
    let t = cell.horizon;
    let benchmark = t as f64 * nature.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = Instant::now();
    let value = match (cell.job, &cell.policy) {
        (Job::Policy(kind), Some(Ok(policy))) => {
            let mut rng = policy_stream(master, sample, kind, t).rng();
            policies::run_episode(policy, t, prior, &nature, &mut rng).map(|e| e.realized_mean_payoff)
        }
        (Job::Bound(z), None) => nature
            .truncated(t)
            .and_then(|o| inner::solve_with_budget(z, &o, t, prior, vemax_budget))
            .map(|s| s.value),
        _ => Err(IrsError::InvalidInput("cell is not runnable".into())),
    };
    Ok(CellOutput {
        benchmark,
        value,
        millis: start.elapsed().as_secs_f64() * 1e3,
        digest,
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the experiment grid and returns the regret table.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretTable> {
    Ok(run_experiment_detailed(config)?.table)
}

/// Like [`run_experiment`], also returning per-cell nature digests.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let prior = config.model.belief()?;
    let horizons = config.horizons.values()?;
    let master = RngStream::from_seed(config.seed);
    let Some(&max_horizon) = horizons.last() else {
        return Ok(ExperimentRun {
            table: RegretTable::default(),
            digests: vec![Vec::new(); config.samples],
        });
    };

    let cells = plan_cells(config, &prior, &horizons);
    let runnable: Vec<usize> = (0..cells.len())
        .filter(|&j| match cells[j].policy {
            Some(Ok(_)) => true,
            Some(Err(_)) => false,
            None => true,
        })
        .collect();
    let budget = config.vemax_budget as u128;
    let samples = config.samples;

    let compute = || -> Result<Vec<Vec<CellOutput>>> {
        let flat: Vec<CellOutput> = (0..samples * runnable.len())
            .into_par_iter()
            .map(|c| {
                let (i, r) = (c / runnable.len(), c % runnable.len());
                run_cell(&cells[runnable[r]], &prior, master, i, max_horizon, budget)
            })
            .collect::<Result<_>>()?;
        let mut per_sample = Vec::with_capacity(samples);
        let mut it = flat.into_iter();
        for _ in 0..samples {
            per_sample.push(it.by_ref().take(runnable.len()).collect());
        }
        Ok(per_sample)
    };
    let outputs = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| IrsError::Config(format!("cannot start {n} workers: {e}")))?
            .install(compute)?,
        None => compute()?,
    };

    let mut table = RegretTable::default();
    let mut slot = 0;
    let mut last_t = None;
    for (j, cell) in cells.iter().enumerate() {
        if last_t != Some(cell.horizon) {
            last_t = Some(cell.horizon);
            table.rows.push(RegretRow {
                kind: RowKind::Benchmark,
                name: BENCHMARK_NAME.to_string(),
                horizon: cell.horizon,
                value: Some(round_sig6(crate::bounds::regret_benchmark(cell.horizon, &prior)?)),
                stderr: Some(0.0),
                regret: None,
                regret_bound: None,
                runtime_ms: None,
            });
        }
        let mut row = RegretRow {
            kind: cell.job.kind(),
            name: cell.job.name().to_string(),
            horizon: cell.horizon,
            value: None,
            stderr: None,
            regret: None,
            regret_bound: None,
            runtime_ms: None,
        };
        let failure = |reason: String| Failure {
            kind: cell.job.kind(),
            name: cell.job.name().to_string(),
            horizon: cell.horizon,
            reason,
        };
        if let Some(Err(reason)) = &cell.policy {
            table.failures.push(failure(reason.clone()));
            table.rows.push(row);
            continue;
        }
        debug_assert_eq!(runnable[slot], j);
        let column: Vec<&CellOutput> = outputs.iter().map(|s| &s[slot]).collect();
        slot += 1;
        if let Some(err) = column.iter().find_map(|o| o.value.as_ref().err()) {
            table.failures.push(failure(err.to_string()));
            table.rows.push(row);
            continue;
        }
        let values: Vec<f64> = column.iter().map(|o| *o.value.as_ref().unwrap()).collect();
        let gaps: Vec<f64> = column
            .iter()
            .zip(&values)
            .map(|(o, v)| o.benchmark - v)
            .collect();
        let mean_value = values.iter().sum::<f64>() / samples as f64;
        let (mean_gap, gap_se) = mean_and_stderr(&gaps)?;
        match cell.job {
            Job::Policy(_) => {
                row.stderr = Some(round_sig6(gap_se));
                row.regret = Some(round_sig6(mean_gap));
            }
            Job::Bound(_) => {
                row.stderr = Some(round_sig6(mean_and_stderr(&values)?.1));
                row.regret_bound = Some(round_sig6(mean_gap));
            }
        }
        row.value = Some(round_sig6(mean_value));
        if config.record_runtime {
            let mut ms: Vec<f64> = column.iter().map(|o| o.millis).collect();
            row.runtime_ms = Some(round_sig6(median(&mut ms)));
        }
        table.rows.push(row);
    }

    let digests = outputs
        .iter()
        .map(|s| s.iter().map(|o| o.digest).collect())
        .collect();
    Ok(ExperimentRun { table, digests })
}

/// Empirical first-action distribution of `kind` from `prior` with `horizon`
/// periods left, over `draws` independent decisions.
pub fn first_action_frequencies(
    kind: PolicyKind,
    horizon: usize,
    prior: &BeliefVector,
    draws: usize,
    rng: RngStream,
) -> Result<Vec<f64>> {
    let policy = Policy::prepared(kind, horizon, prior)?;
    let actions: Vec<usize> = (0..draws)
        .into_par_iter()
        .map(|i| policy.decide(1, horizon, prior, &mut rng.derive(role::DECIDE, i as u64).rng()))
        .collect::<Result<_>>()?;
    let mut freq = vec![0.0; prior.len()];
    for a in actions {
        freq[a] += 1.0;
    }
    freq.iter_mut().for_each(|f| *f /= draws.max(1) as f64);
    Ok(freq)
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

//! Monte Carlo estimates of the information-relaxation upper bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, BeliefVector};
use crate::error::{IrsError, Result};
use crate::inner::{self, PenaltyKind};
use crate::rng::{role, RngStream};

/// Mean and standard error of `W^z` for one penalty and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub penalty: PenaltyKind,
}

/// Sample mean and standard error (sample std / √n) of at least two values.
pub fn mean_and_stderr(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(IrsError::InvalidInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Stream of the `i`-th nature outcome under a master stream.
pub fn nature_stream(master: RngStream, sample: usize) -> RngStream {
    master.derive(role::NATURE, sample as u64)
}

/// Inner-problem values over `samples` outcomes drawn from `rng`.
///
/// Outcome `i` comes from `nature_stream(rng, i)`, so the same outcomes are
/// shared by every penalty and (as prefixes) by every horizon.
pub fn inner_values(
    penalty: PenaltyKind,
    horizon: usize,
    prior: &BeliefVector,
    samples: usize,
    rng: RngStream,
) -> Result<Vec<f64>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let outcome = bayes::sample_outcome(prior, horizon, &mut nature_stream(rng, i).rng())?;
            inner::inner_value(penalty, &outcome, horizon, prior)
        })
        .collect()
}

/// Monte Carlo estimate of `W^z(T, y)`.
pub fn estimate_bound(
    penalty: PenaltyKind,
    horizon: usize,
    prior: &BeliefVector,
    samples: usize,
    rng: RngStream,
) -> Result<BoundEstimate> {
    if samples < 2 {
        return Err(IrsError::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let values = inner_values(penalty, horizon, prior, samples, rng)?;
    let (mean, stderr) = mean_and_stderr(&values)?;
    Ok(BoundEstimate {
        mean,
        stderr,
        samples,
        penalty,
    })
}

/// `T · E[max_a θ_a]` by quadrature.
pub fn regret_benchmark(horizon: usize, prior: &BeliefVector) -> Result<f64> {
    Ok(horizon as f64 * bayes::expected_max_mean(prior)?)
}

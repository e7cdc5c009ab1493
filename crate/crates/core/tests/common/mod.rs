//! Brute-force oracles shared by the integration tests and the acceptance
//! suite. Each one evaluates a quantity from its raw definition and shares
//! no code with the solver it checks.

#![allow(dead_code)]

use irs_core::bayes::{ArmPrior, BeliefVector, Outcome};
use irs_core::rng::RngStream;
use rand::Rng;

/// All ways to split `total` pulls over `parts` arms.
pub fn allocations(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in allocations(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All action sequences of length `len` over `arms` arms.
pub fn sequences(arms: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..arms).map(move |a| {
                    let mut s = s.clone();
                    s.push(a);
                    s
                })
            })
            .collect();
    }
    out
}

/// `max_n Σ_a Σ_{m < n_a} mu[a][m]` by enumerating every allocation.
pub fn vzero_enumerate(mu: &[Vec<f64>], horizon: usize) -> f64 {
    allocations(horizon, mu.len())
        .iter()
        .map(|n| {
            n.iter()
                .zip(mu)
                .map(|(&k, row)| row[..k].iter().sum::<f64>())
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random trajectory values on the grid `j / 64`, so every partial sum is exact.
pub fn dyadic_trajectory<R: Rng>(arms: usize, len: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..arms)
        .map(|_| (0..len).map(|_| rng.gen_range(0..=64) as f64 / 64.0).collect())
        .collect()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `Beta(a, b)` cdf for integer parameters as a polynomial:
/// `F(x) = Σ_{j=a}^{a+b-1} C(n, j) x^j (1-x)^{n-j}`, `n = a + b - 1`.
/// Returns the `(coefficient, j, n - j)` triples.
fn beta_cdf_terms(a: u64, b: u64) -> Vec<(f64, u64, u64)> {
    let n = a + b - 1;
    (a..=n).map(|j| (ln_choose(n, j).exp(), j, n - j)).collect()
}

/// `∫_0^1 x^p (1-x)^q dx = p! q! / (p+q+1)!`.
fn beta_integral(p: u64, q: u64) -> f64 {
    let ln = (1..=p).map(|i| (i as f64).ln()).sum::<f64>()
        + (1..=q).map(|i| (i as f64).ln()).sum::<f64>()
        - (1..=p + q + 1).map(|i| (i as f64).ln()).sum::<f64>();
    ln.exp()
}

/// `E[max(θ_1, θ_2)]` for independent Beta arms with integer parameters,
/// from `E[max] = 1 - ∫ F_1 F_2` with both cdfs expanded as polynomials.
pub fn beta2_expected_max_exact(a1: u64, b1: u64, a2: u64, b2: u64) -> f64 {
    let mut integral = 0.0;
    for (c1, p1, q1) in beta_cdf_terms(a1, b1) {
        for (c2, p2, q2) in beta_cdf_terms(a2, b2) {
            integral += c1 * c2 * beta_integral(p1 + p2, q1 + q2);
        }
    }
    1.0 - integral
}

/// Integer Beta parameters of an arm.
pub fn integer_beta(p: &ArmPrior) -> (u64, u64) {
    match *p {
        ArmPrior::BetaBernoulli { alpha, beta } => {
            assert!(alpha.fract() == 0.0 && beta.fract() == 0.0);
            (alpha as u64, beta as u64)
        }
        _ => panic!("Beta arm expected"),
    }
}

/// `W^TS(h, y) = h · E[max θ]` for two integer Beta arms.
fn w_ts(h: usize, y: &[(u64, u64)]) -> f64 {
    h as f64 * beta2_expected_max_exact(y[0].0, y[0].1, y[1].0, y[1].1)
}

/// Inner objective `Σ_t r_t - z_t` of one action sequence under the
/// V-EMax penalty, for two integer Beta arms. `r_t - z_t` equals
/// `E[r_t | F_{t-1}] - W^TS(T-t, y_t) + E[W^TS(T-t, y_t) | F_{t-1}]`,
/// and the conditional expectation runs over the predictive reward of the
/// pulled arm.
pub fn vemax_sequence_value(prior: &[(u64, u64)], outcome: &Outcome, actions: &[usize]) -> f64 {
    let horizon = actions.len();
    let mut y = prior.to_vec();
    let mut pulls = [0usize; 2];
    let mut total = 0.0;
    for (t, &a) in actions.iter().enumerate() {
        let t = t + 1;
        let (al, be) = y[a];
        let p = al as f64 / (al + be) as f64;
        let mut success = y.clone();
        success[a].0 += 1;
        let mut failure = y.clone();
        failure[a].1 += 1;
        let expected_w = p * w_ts(horizon - t, &success) + (1.0 - p) * w_ts(horizon - t, &failure);
        let r = outcome.rewards[a][pulls[a]];
        pulls[a] += 1;
        y = if r == 1.0 { success } else { failure };
        total += p - w_ts(horizon - t, &y) + expected_w;
    }
    total
}

/// Brute-force V-EMax inner value over all `2^T` sequences.
pub fn vemax_enumerate(prior: &BeliefVector, outcome: &Outcome, horizon: usize) -> f64 {
    let y: Vec<(u64, u64)> = prior.arms().iter().map(integer_beta).collect();
    assert_eq!(y.len(), 2);
    sequences(2, horizon)
        .iter()
        .map(|s| vemax_sequence_value(&y, outcome, s))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Single-arm worth-trying problem by enumeration over `{0,1}^T`:
/// `max_a Σ_t μ_{n_t - 1} 1{a_t = 1} + λ 1{a_t = 0} - (T - t)(Γ_{n_t} - Γ_{n_{t-1}})`.
pub fn index_enumerate(means: &[f64], gamma: &[f64], lambda: f64, horizon: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for s in sequences(2, horizon) {
        let mut n = 0usize;
        let mut v = 0.0;
        for (t, &a) in s.iter().enumerate() {
            let t = t + 1;
            if a == 1 {
                v += means[n];
                v -= (horizon - t) as f64 * (gamma[n + 1] - gamma[n]);
                n += 1;
            } else {
                v += lambda;
            }
        }
        best = best.max(v);
    }
    best
}

/// `E[max(θ, λ)]` for `θ ~ Beta(a, b)` by adaptive Simpson on
/// `λ + ∫_λ^1 (1 - F(x)) dx`.
pub fn gamma_beta_quadrature(a: f64, b: f64, lambda: f64) -> f64 {
    use statrs::distribution::{Beta, ContinuousCDF};
    let d = Beta::new(a, b).unwrap();
    let lo = lambda.clamp(0.0, 1.0);
    let tail = adaptive_simpson(&|x| 1.0 - d.cdf(x), lo, 1.0, 1e-13, 40);
    lambda.max(0.0) + tail
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        eps: f64,
        whole: f64,
        m: f64,
        fm: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1)
            + rec(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, eps, whole, m, fm, depth)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Random integer Beta prior with parameters in `1..=max`.
pub fn random_integer_beta<R: Rng>(rng: &mut R, max: u32) -> ArmPrior {
    ArmPrior::beta(rng.gen_range(1..=max) as f64, rng.gen_range(1..=max) as f64).unwrap()
}

pub fn stream(seed: u64) -> RngStream {
    RngStream::from_seed(seed)
}

/// Outcome of an oracle comparison loop.
#[derive(Debug, Default)]
pub struct OracleReport {
    pub cases: usize,
    pub mismatches: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// V-Zero solver against allocation enumeration on dyadic trajectories,
/// `K ≤ 3`, `T ≤ 6`. Values must agree bit for bit.
pub fn vzero_oracle_suite(cases: usize, seed: u64) -> OracleReport {
    use irs_core::bayes::MeanTrajectory;
    use irs_core::inner::{solve_vzero, Plan};
    let mut rng = stream(seed).rng();
    let mut report = OracleReport::default();
    for case in 0..cases {
        let k = 1 + case % 3;
        let t = rng.gen_range(1..=6);
        let mu = dyadic_trajectory(k, t, &mut rng);
        let expected = vzero_enumerate(&mu, t);
        let sol = solve_vzero(&MeanTrajectory { mu: mu.clone() }, t).unwrap();
        let Plan::Allocation(alloc) = &sol.plan else {
            report.mismatches.push(format!("case {case}: V-Zero returned a sequence"));
            continue;
        };
        let realized: f64 = alloc
            .counts
            .iter()
            .zip(&mu)
            .map(|(&n, row)| row[..n].iter().sum::<f64>())
            .sum();
        let first = (0..k).fold(0, |b, a| if alloc.counts[a] > alloc.counts[b] { a } else { b });
        if sol.value != expected || realized != expected || alloc.total() != t || sol.first_action != first {
            report.mismatches.push(format!(
                "case {case}: K={k} T={t} solver {} plan {:?} oracle {expected}",
                sol.value, alloc.counts
            ));
        }
        report.cases += 1;
    }
    report
}

/// V-EMax solver against sequence enumeration of the raw penalized
/// objective, `K = 2`, `T ≤ 5`, integer Beta priors, tolerance `1e-9`.
pub fn vemax_oracle_suite(cases: usize, seed: u64) -> OracleReport {
    use irs_core::bayes::sample_outcome;
    use irs_core::inner::{solve_vemax, Plan};
    let mut rng = stream(seed).rng();
    let mut report = OracleReport::default();
    for case in 0..cases {
        let t = 1 + case % 5;
        let prior = BeliefVector::new(vec![
            random_integer_beta(&mut rng, 3),
            random_integer_beta(&mut rng, 3),
        ])
        .unwrap();
        let outcome = sample_outcome(&prior, t, &mut rng).unwrap();
        let expected = vemax_enumerate(&prior, &outcome, t);
        let sol = solve_vemax(&outcome, t, &prior).unwrap();
        let y: Vec<(u64, u64)> = prior.arms().iter().map(integer_beta).collect();
        let plan_value = match &sol.plan {
            Plan::Sequence(s) if s.len() == t && s[0] == sol.first_action => {
                vemax_sequence_value(&y, &outcome, s)
            }
            other => {
                report.mismatches.push(format!("case {case}: bad plan {other:?}"));
                continue;
            }
        };
        if (sol.value - expected).abs() > 1e-9 || (plan_value - expected).abs() > 1e-9 {
            report.mismatches.push(format!(
                "case {case}: T={t} solver {} plan value {plan_value} oracle {expected}",
                sol.value
            ));
        }
        report.cases += 1;
    }
    report
}

/// Reformulated worth-trying value against enumeration over `{0,1}^T`,
/// `T ≤ 6`, Beta and Gaussian arms. Enumeration includes the never-pull
/// sequence, so `max - Tλ = max(φ, 0)`.
pub fn index_oracle_suite(cases: usize, seed: u64) -> OracleReport {
    use irs_core::bayes::sample_outcome;
    use irs_core::index::{ArmTrajectory, IndexVariant};
    let mut rng = stream(seed).rng();
    let mut report = OracleReport::default();
    for case in 0..cases {
        let t = 1 + case % 6;
        let prior = if case % 2 == 0 {
            ArmPrior::beta(rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0)).unwrap()
        } else {
            ArmPrior::gaussian(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0), rng.gen_range(0.1..4.0))
                .unwrap()
        };
        let belief = BeliefVector::new(vec![prior]).unwrap();
        let outcome = sample_outcome(&belief, t, &mut rng).unwrap();
        let traj = ArmTrajectory::from_rewards(&prior, &outcome.rewards[0]).unwrap();
        let lambda = prior.mean() + rng.gen_range(-0.5..0.5) * prior.theta_std();
        let gamma = traj.gamma_table(t, lambda).values;
        let brute = index_enumerate(traj.means(), &gamma, lambda, t) - t as f64 * lambda;
        let phi = traj.phi(t, lambda, IndexVariant::Standard);
        let scale = 1.0 + t as f64 * (lambda.abs() + gamma.iter().fold(0.0_f64, |m, g| m.max(g.abs())));
        if (brute - phi.max(0.0)).abs() > 1e-13 * scale
            || traj.worth_trying(t, lambda, IndexVariant::Standard) != (phi >= 0.0)
        {
            report.mismatches.push(format!(
                "case {case}: T={t} λ={lambda} enumeration {brute} φ {phi}"
            ));
        }
        report.cases += 1;
    }
    report
}

//! Special functions, quadrature rules and small numeric helpers.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use statrs::function::{beta as sbeta, erf, gamma};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    gamma::ln_gamma(a) + gamma::ln_gamma(b) - gamma::ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`, i.e. the CDF of `Beta(a, b)` at `x`.
#[inline]
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        sbeta::beta_reg(a, b, x).clamp(0.0, 1.0)
    }
}

/// Quantile of `Beta(a, b)` by bisection on the CDF.
pub fn beta_quantile(a: f64, b: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_cdf(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Index of the first maximum. Panics on an empty slice.
#[inline]
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        if n == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![2.0],
            };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// 256-node rule used for Beta-family integrals on `[0, 1]`.
pub fn gauss_legendre_256() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(256))
}

/// Short rule used per panel in composite integration.
pub fn gauss_legendre_panel() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// `I_x(a_n, b_n)` along a path where each step adds one to `a` (success) or
/// to `b` (failure). Uses `I_x(a+1, b) = I_x(a, b) - t/a` and
/// `I_x(a, b+1) = I_x(a, b) + t/b` with `t = x^a (1-x)^b / B(a, b)`, so only
/// the starting point needs a continued-fraction evaluation.
#[derive(Debug, Clone)]
pub struct BetaPath {
    a0: f64,
    b0: f64,
    // (success, ln of the step's multiplier on t excluding the x factor)
    steps: Vec<(bool, f64)>,
}

impl BetaPath {
    pub fn new(a0: f64, b0: f64, successes: &[bool]) -> Self {
        let (mut a, mut b) = (a0, b0);
        let steps = successes
            .iter()
            .map(|&s| {
                let ratio = if s { (a + b) / a } else { (a + b) / b };
                if s {
                    a += 1.0;
                } else {
                    b += 1.0;
                }
                (s, ratio.ln())
            })
            .collect();
        Self { a0, b0, steps }
    }

    /// Number of beliefs on the path (steps + 1).
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Calls `f(n, I_x(a_n, b_n), I_x(a_n + 1, b_n))` for each point on the
    /// path in order, stopping early once `f` returns `false`.
    pub fn walk(&self, x: f64, mut f: impl FnMut(usize, f64, f64) -> bool) {
        if x <= 0.0 || x >= 1.0 {
            let v = if x <= 0.0 { 0.0 } else { 1.0 };
            for n in 0..self.len() {
                if !f(n, v, v) {
                    return;
                }
            }
            return;
        }
        let (lx, l1x) = (x.ln(), (-x).ln_1p());
        let (mut a, mut b) = (self.a0, self.b0);
        let mut cdf = sbeta::beta_reg(a, b, x);
        let mut log_t = a * lx + b * l1x - ln_beta(a, b);
        for n in 0..self.len() {
            let t = log_t.exp();
            let shifted = cdf - t / a;
            if !f(n, cdf.clamp(0.0, 1.0), shifted.clamp(0.0, 1.0)) {
                return;
            }
            let Some(&(success, ln_ratio)) = self.steps.get(n) else {
                break;
            };
            if success {
                cdf = shifted;
                log_t += lx + ln_ratio;
                a += 1.0;
            } else {
                cdf += t / b;
                log_t += l1x + ln_ratio;
                b += 1.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for n in [1usize, 2, 5, 10, 64, 256] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n} wsum={wsum}");
            let deg = 2 * n - 1;
            // ∫_0^1 x^deg dx
            let approx: f64 = rule.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn legendre_nodes_sorted_and_inside() {
        let rule = gauss_legendre_256();
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn normal_helpers() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-14);
        assert!((normal_pdf(0.0) - INV_SQRT_2PI).abs() < 1e-16);
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn beta_cdf_matches_closed_forms() {
        // Beta(1,1) is uniform; Beta(2,1) has CDF x^2; Beta(1,3) has 1-(1-x)^3.
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.999] {
            assert!((beta_cdf(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((beta_cdf(2.0, 1.0, x) - x * x).abs() < 1e-14);
            assert!((beta_cdf(1.0, 3.0, x) - (1.0 - (1.0 - x).powi(3))).abs() < 1e-14);
        }
        assert_eq!(beta_cdf(2.0, 2.0, 0.0), 0.0);
        assert_eq!(beta_cdf(2.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn beta_quantile_inverts_cdf() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 5.0), (100.0, 100.0), (0.5, 0.5)] {
            for &q in &[0.01, 0.3, 0.5, 0.9, 0.999_999] {
                let x = beta_quantile(a, b, q);
                let d = 1e-12;
                assert!(beta_cdf(a, b, x - d) <= q + 1e-13, "a={a} b={b} q={q}");
                assert!(beta_cdf(a, b, x + d) >= q - 1e-13, "a={a} b={b} q={q}");
            }
        }
    }

    #[test]
    fn beta_path_matches_direct_evaluation() {
        let steps: Vec<bool> = (0..300).map(|i| (i * 37 + i / 7) % 5 < 2).collect();
        for &(a0, b0) in &[(1.0, 1.0), (0.5, 3.0), (20.0, 7.5)] {
            let path = BetaPath::new(a0, b0, &steps);
            for &x in &[1e-6, 0.05, 0.3, 0.5, 0.61, 0.97, 1.0 - 1e-9] {
                let (mut a, mut b) = (a0, b0);
                path.walk(x, |n, cdf, shifted| {
                    assert!((cdf - beta_cdf(a, b, x)).abs() < 1e-10, "n={n} x={x}");
                    assert!((shifted - beta_cdf(a + 1.0, b, x)).abs() < 1e-10, "n={n} x={x}");
                    if n < steps.len() {
                        if steps[n] {
                            a += 1.0;
                        } else {
                            b += 1.0;
                        }
                    }
                    true
                });
            }
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        let s: CompensatedSum = xs.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax_first(&[0.5, 0.5]), 0);
        assert_eq!(argmax_first(&[0.1, 0.7, 0.7]), 1);
    }
}

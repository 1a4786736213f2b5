//! Exact latency distributions for direct and accelerated single-node access.
//!
//! With per-node latencies `X_1..X_n`, a direct read of data node `t` takes
//! `Y1 = X_t`. The accelerated strategies finish at
//! `Y2 = min(X_t, k-th smallest of {X_i : i != t})`, whose CDF is
//!
//! ```text
//! F_Y2(y) = 1 - (1 - F_t(y)) * (1 - B(y)),
//! B(y)    = sum_{i=k}^{n-1} C(n-1, i) F(y)^i (1 - F(y))^(n-1-i)
//! ```
//!
//! where `F` is the common CDF of the other nodes. Closed-form expectations
//! exist for uniform and shifted-exponential latencies; everything else goes
//! through survival-function quadrature.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::latency::Distribution;
use crate::quad::{integrate_piecewise, NumericError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("need 1 <= k <= n - 1, got n={n} k={k}")]
    Params { n: usize, k: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Absolute error target per quadrature panel.
pub const PANEL_TOLERANCE: f64 = 1e-10;

/// Above this, binomial coefficients come from log-gamma.
const EXACT_BINOMIAL_MAX_N: usize = 50;

/// `C(n, r)` as f64: exact integer arithmetic for `n <= 50`, log-gamma above.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    if n <= EXACT_BINOMIAL_MAX_N {
        let mut acc: u128 = 1;
        for i in 0..r {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as f64
    } else {
        (ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0))
            .exp()
            .round()
    }
}

fn check_nk(n: usize, k: usize) -> Result<(), AnalyticsError> {
    if k < 1 || k + 1 > n {
        return Err(AnalyticsError::Params { n, k });
    }
    Ok(())
}

/// P(k-th smallest of `n - 1` i.i.d. draws <= y) given `F(y) = p`.
pub fn order_stat_cdf(n: usize, k: usize, p: f64) -> Result<f64, AnalyticsError> {
    check_nk(n, k)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalyticsError::Domain(p));
    }
    Ok(binomial_tail(n - 1, k, p))
}

/// P(Bin(trials, p) >= k).
fn binomial_tail(trials: usize, k: usize, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let sum: f64 = (k..=trials)
        .map(|i| binomial(trials, i) * p.powi(i as i32) * q.powi((trials - i) as i32))
        .sum();
    sum.min(1.0)
}

/// Latency distributions of one access request.
///
/// `target` is the law of the requested node, `others` the common law of the
/// remaining `n - 1` nodes. Under i.i.d. latencies both are the same and the
/// result does not depend on which data node is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessLatencyDist {
    n: usize,
    k: usize,
    target: Distribution,
    others: Distribution,
}

impl AccessLatencyDist {
    pub fn new(n: usize, k: usize, target: Distribution, others: Distribution) -> Result<Self, AnalyticsError> {
        check_nk(n, k)?;
        Ok(Self { n, k, target, others })
    }

    pub fn iid(n: usize, k: usize, model: Distribution) -> Result<Self, AnalyticsError> {
        Self::new(n, k, model, model)
    }

    pub fn cdf_y1(&self, y: f64) -> f64 {
        self.target.cdf(y)
    }

    pub fn pdf_y1(&self, y: f64) -> f64 {
        self.target.pdf(y)
    }

    fn order_cdf(&self, y: f64) -> f64 {
        binomial_tail(self.n - 1, self.k, self.others.cdf(y))
    }

    /// Density of the k-th order statistic of the `n - 1` other nodes.
    fn order_pdf(&self, y: f64) -> f64 {
        let f = self.others.pdf(y);
        if f == 0.0 {
            return 0.0;
        }
        let p = self.others.cdf(y);
        let (n, k) = (self.n, self.k);
        (n - 1) as f64
            * binomial(n - 2, k - 1)
            * p.powi(k as i32 - 1)
            * (1.0 - p).powi((n - 1 - k) as i32)
            * f
    }

    pub fn cdf_y2(&self, y: f64) -> f64 {
        1.0 - (1.0 - self.target.cdf(y)) * (1.0 - self.order_cdf(y))
    }

    pub fn survival_y2(&self, y: f64) -> f64 {
        (1.0 - self.target.cdf(y)) * (1.0 - self.order_cdf(y))
    }

    /// Derivative of the product form of [`Self::cdf_y2`].
    pub fn pdf_y2(&self, y: f64) -> f64 {
        self.target.pdf(y) * (1.0 - self.order_cdf(y)) + (1.0 - self.target.cdf(y)) * self.order_pdf(y)
    }

    /// The CDF written as `F_t + (1 - F_t) * sum(...)`, term by term.
    pub fn cdf_y2_expanded(&self, y: f64) -> f64 {
        let ft = self.target.cdf(y);
        let p = self.others.cdf(y);
        let sum: f64 = (self.k..self.n)
            .map(|i| binomial(self.n - 1, i) * p.powi(i as i32) * (1.0 - p).powi((self.n - 1 - i) as i32))
            .sum();
        ft + (1.0 - ft) * sum
    }

    /// The density differentiated term by term inside the binomial sum.
    pub fn pdf_y2_expanded(&self, y: f64) -> f64 {
        let (ft, fpt) = (self.target.cdf(y), self.target.pdf(y));
        let (p, fp) = (self.others.cdf(y), self.others.pdf(y));
        let n1 = self.n - 1;
        let tail: f64 = (self.k..=n1)
            .map(|i| binomial(n1, i) * p.powi(i as i32) * (1.0 - p).powi((n1 - i) as i32))
            .sum();
        let dtail: f64 = (self.k..=n1)
            .map(|i| {
                let c = binomial(n1, i);
                let up = c * i as f64 * fp * p.powi(i as i32 - 1) * (1.0 - p).powi((n1 - i) as i32);
                // the (n-1-i) factor vanishes at i = n-1, where (1-p)^-1 would appear
                let down = if i == n1 {
                    0.0
                } else {
                    c * (n1 - i) as f64 * fp * p.powi(i as i32) * (1.0 - p).powi((n1 - i - 1) as i32)
                };
                up - down
            })
            .sum();
        fpt - fpt * tail + (1.0 - ft) * dtail
    }

    /// Points where the survival function may bend or jump.
    fn breakpoints(&self) -> (f64, Vec<f64>) {
        let lower = self.target.lower().min(self.others.lower()).max(0.0);
        let upper = self.target.effective_upper().min(self.others.effective_upper());
        let mut pts = vec![lower, upper];
        for d in [self.target, self.others] {
            for x in [d.lower(), d.effective_upper()] {
                if x > lower && x < upper {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        (lower, pts)
    }

    /// `E[Y2] = lower + integral of the survival function` above the point
    /// where it first drops below 1.
    pub fn expected_y2_numeric(&self) -> Result<f64, AnalyticsError> {
        let (lower, pts) = self.breakpoints();
        let upper = *pts.last().expect("nonempty");
        if upper <= lower {
            return Ok(upper.max(0.0));
        }
        let area = integrate_piecewise(|y| self.survival_y2(y), &pts, PANEL_TOLERANCE)?;
        Ok(lower + area)
    }

    /// Quadrature of `pdf_y2` over its support; should be 1 when the target
    /// has a density.
    pub fn pdf_y2_mass(&self) -> Result<f64, AnalyticsError> {
        let (_, pts) = self.breakpoints();
        Ok(integrate_piecewise(|y| self.pdf_y2(y), &pts, PANEL_TOLERANCE)?)
    }
}

/// `E[Y2]` for `X_i ~ U[0, T]`: `T/2 - (n-k)(n-k+1) T / (2 n (n+1))`.
///
/// `k = n` is accepted as the no-parity limit and returns `T/2`.
pub fn expected_y2_uniform(n: usize, k: usize, upper: f64) -> f64 {
    assert!(n >= 1 && k <= n, "need k <= n");
    let (n, r) = (n as f64, (n - k) as f64);
    upper / 2.0 - r * (r + 1.0) * upper / (2.0 * n * (n + 1.0))
}

/// Expected reduction `(n-k)(n-k+1) / (n(n+1))` for uniform latencies.
pub fn gamma_uniform(n: usize, k: usize) -> f64 {
    assert!(n >= 1 && k <= n, "need k <= n");
    let (n, r) = (n as f64, (n - k) as f64);
    r * (r + 1.0) / (n * (n + 1.0))
}

/// Large-n limit `(1 - c)^2` of [`gamma_uniform`] at code rate `c = k/n`.
pub fn gamma_uniform_asymptotic(rate: f64) -> f64 {
    (1.0 - rate) * (1.0 - rate)
}

/// `E[Y2] = s + k / (lambda n)` for shifted-exponential latencies.
pub fn expected_y2_shifted_exp(n: usize, k: usize, rate: f64, shift: f64) -> f64 {
    assert!(n >= 1 && k <= n, "need k <= n");
    shift + k as f64 / (rate * n as f64)
}

/// Expected reduction `(n-k) / (n (s lambda + 1))` for shifted-exponential
/// latencies; `(n-k)/n` at `s = 0`.
pub fn gamma_shifted_exp(n: usize, k: usize, rate: f64, shift: f64) -> f64 {
    assert!(n >= 1 && k <= n, "need k <= n");
    (n - k) as f64 / (n as f64 * (shift * rate + 1.0))
}

/// `(1 - c) / (s lambda + 1)`, which equals [`gamma_shifted_exp`] for every n.
pub fn gamma_shifted_exp_asymptotic(rate_c: f64, rate: f64, shift: f64) -> f64 {
    (1.0 - rate_c) / (shift * rate + 1.0)
}

/// `E[min(X_t, k-th smallest of n-1 draws from others)]` by quadrature.
pub fn expected_numeric(
    n: usize,
    k: usize,
    others: Distribution,
    target: Distribution,
) -> Result<f64, AnalyticsError> {
    AccessLatencyDist::new(n, k, target, others)?.expected_y2_numeric()
}

/// Expected latencies and reduction ratio for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSummary {
    pub n: usize,
    pub k: usize,
    pub model: String,
    pub e_y1: f64,
    pub e_y2: f64,
    pub gamma: f64,
    pub gamma_asymptotic: Option<f64>,
    pub c: f64,
}

impl AnalyticSummary {
    fn from_expectations(n: usize, k: usize, model: String, e_y1: f64, e_y2: f64) -> Self {
        let gamma = if e_y1 > 0.0 { (e_y1 - e_y2) / e_y1 } else { 0.0 };
        Self { n, k, model, e_y1, e_y2, gamma, gamma_asymptotic: None, c: k as f64 / n as f64 }
    }
}

/// Summary for i.i.d. latencies: closed forms for uniform and
/// shifted-exponential, quadrature otherwise.
pub fn analytic_summary(n: usize, k: usize, model: Distribution) -> Result<AnalyticSummary, AnalyticsError> {
    check_nk(n, k)?;
    let c = k as f64 / n as f64;
    let label = model.to_string();
    let summary = match model {
        Distribution::Uniform { upper } => AnalyticSummary {
            n,
            k,
            model: label,
            e_y1: upper / 2.0,
            e_y2: expected_y2_uniform(n, k, upper),
            gamma: gamma_uniform(n, k),
            gamma_asymptotic: Some(gamma_uniform_asymptotic(c)),
            c,
        },
        Distribution::ShiftedExp { rate, shift } => AnalyticSummary {
            n,
            k,
            model: label,
            e_y1: model.mean(),
            e_y2: expected_y2_shifted_exp(n, k, rate, shift),
            gamma: gamma_shifted_exp(n, k, rate, shift),
            gamma_asymptotic: Some(gamma_shifted_exp_asymptotic(c, rate, shift)),
            c,
        },
        Distribution::Constant { value } => {
            let mut s = AnalyticSummary::from_expectations(n, k, label, value, value);
            s.gamma_asymptotic = Some(0.0);
            s
        }
    };
    Ok(summary)
}

/// The (3, 2) configuration with node 2 fixed at `T` and nodes 1, 3 uniform
/// on `[0, T]`: `E[Y1] = T`, `E[Y2] = 2T/3`, reduction 1/3.
pub fn worst_case_uniform(upper: f64) -> AnalyticSummary {
    AnalyticSummary {
        n: 3,
        k: 2,
        model: format!("adv:node=2,v={upper},bg=uniform:T={upper}"),
        e_y1: upper,
        e_y2: 2.0 * upper / 3.0,
        gamma: 1.0 / 3.0,
        gamma_asymptotic: None,
        c: 2.0 / 3.0,
    }
}

/// The (3, 2) configuration with node 2 fixed at `constant` and nodes 1, 3
/// drawn from `Shifted-Exp(rate, shift)`; `E[Y2]` by quadrature.
pub fn worst_case_shifted_exp(rate: f64, shift: f64, constant: f64) -> Result<AnalyticSummary, AnalyticsError> {
    let others = Distribution::ShiftedExp { rate, shift };
    let target = Distribution::Constant { value: constant };
    for d in [others, target] {
        d.validate()
            .map_err(|_| AnalyticsError::Domain(if d == target { constant } else { rate }))?;
    }
    let e_y2 = expected_numeric(3, 2, others, target)?;
    Ok(AnalyticSummary::from_expectations(
        3,
        2,
        format!("adv:node=2,v={constant},bg={others}"),
        constant,
        e_y2,
    ))
}

/// One row of a worst-case sweep over shifted-exponential backgrounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRow {
    pub lambda: f64,
    pub s: f64,
    pub v_t: f64,
    pub e_y1: f64,
    pub e_y2: f64,
    pub gamma: f64,
}

/// Evaluate [`worst_case_shifted_exp`] on the cartesian product of inputs.
pub fn worst_case_sweep(rates: &[f64], shifts: &[f64], constants: &[f64]) -> Result<Vec<WorstCaseRow>, AnalyticsError> {
    let mut rows = Vec::with_capacity(rates.len() * shifts.len() * constants.len());
    for &lambda in rates {
        for &s in shifts {
            for &v_t in constants {
                let summary = worst_case_shifted_exp(lambda, s, v_t)?;
                rows.push(WorstCaseRow { lambda, s, v_t, e_y1: summary.e_y1, e_y2: summary.e_y2, gamma: summary.gamma });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIGS: [(usize, usize); 5] = [(3, 2), (4, 2), (5, 3), (10, 6), (14, 10)];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn binomial_exact_and_large() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(49, 24), 63_205_303_218_876.0);
        assert_eq!(binomial(3, 4), 0.0);
        // log-gamma route against the exact product
        let exact = 100_891_344_545_564_193_334_812_497_256.0f64; // C(100, 50)
        assert!(rel(binomial(100, 50), exact) < 1e-10);
        assert!(rel(binomial(60, 3), 34_220.0) < 1e-12);
    }

    #[test]
    fn order_stat_examples() {
        assert_eq!(order_stat_cdf(3, 2, 1.0).unwrap(), 1.0);
        assert_eq!(order_stat_cdf(3, 2, 0.0).unwrap(), 0.0);
        assert!((order_stat_cdf(3, 2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(order_stat_cdf(3, 2, 1.5), Err(AnalyticsError::Domain(_))));
        assert!(matches!(order_stat_cdf(3, 3, 0.5), Err(AnalyticsError::Params { .. })));
    }

    #[test]
    fn order_stat_matches_enumeration() {
        // Enumerate all 2^(n-1) below/above patterns.
        for &(n, k) in &CONFIGS {
            for &p in &[0.1f64, 0.37, 0.5, 0.9] {
                let others = n - 1;
                let mut total = 0.0;
                for mask in 0u32..(1 << others) {
                    let below = mask.count_ones() as usize;
                    if below >= k {
                        total += p.powi(below as i32) * (1.0 - p).powi((others - below) as i32);
                    }
                }
                assert!((order_stat_cdf(n, k, p).unwrap() - total).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cdf_y2_examples() {
        let d = AccessLatencyDist::iid(3, 2, Distribution::Uniform { upper: 1.0 }).unwrap();
        assert!((d.cdf_y2(0.5) - 0.625).abs() < 1e-15);
        assert_eq!(d.cdf_y2(1.0), 1.0);
        assert_eq!(d.cdf_y2(-0.1), 0.0);
    }

    #[test]
    fn product_and_expanded_forms_agree() {
        for &(n, k) in &CONFIGS {
            for model in [
                Distribution::Uniform { upper: 100.0 },
                Distribution::ShiftedExp { rate: 0.02, shift: 1.0 },
            ] {
                let d = AccessLatencyDist::iid(n, k, model).unwrap();
                for i in 0..=400 {
                    let y = model.effective_upper() * i as f64 / 400.0 * 0.3;
                    assert!((d.cdf_y2(y) - d.cdf_y2_expanded(y)).abs() < 1e-12);
                    let (a, b) = (d.pdf_y2(y), d.pdf_y2_expanded(y));
                    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{n},{k} {model} y={y}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn pdf_matches_finite_difference() {
        for &(n, k) in &[(3, 2), (5, 3), (10, 6)] {
            for model in [
                Distribution::Uniform { upper: 100.0 },
                Distribution::ShiftedExp { rate: 0.02, shift: 1.0 },
            ] {
                let d = AccessLatencyDist::iid(n, k, model).unwrap();
                let (lo, hi) = (model.lower(), model.lower() + (model.effective_upper() - model.lower()).min(300.0));
                for i in 1..=200 {
                    let y = lo + (hi - lo) * i as f64 / 201.0;
                    let h = 1e-4;
                    let fd = (d.cdf_y2(y + h) - d.cdf_y2(y - h)) / (2.0 * h);
                    assert!((fd - d.pdf_y2(y)).abs() < 1e-6, "{n},{k} {model} at {y}");
                }
            }
        }
    }

    #[test]
    fn stochastic_dominance() {
        for &(n, k) in &CONFIGS {
            let model = Distribution::Uniform { upper: 10.0 };
            let d = AccessLatencyDist::iid(n, k, model).unwrap();
            let mut prev = 0.0;
            for i in 1..1000 {
                let y = 10.0 * i as f64 / 1000.0;
                let (f2, f1) = (d.cdf_y2(y), d.cdf_y1(y));
                assert!(f2 > f1, "strict inside support");
                assert!(f2 >= prev);
                prev = f2;
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for &(n, k) in &CONFIGS {
            for model in [
                Distribution::Uniform { upper: 100.0 },
                Distribution::ShiftedExp { rate: 0.02, shift: 1.0 },
            ] {
                let mass = AccessLatencyDist::iid(n, k, model).unwrap().pdf_y2_mass().unwrap();
                assert!((mass - 1.0).abs() < 1e-8, "{n},{k} {model}: {mass}");
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(expected_y2_uniform(4, 4, 100.0), 50.0);
        assert!((expected_y2_uniform(3, 2, 100.0) - 125.0 / 3.0).abs() < 1e-12);
        assert!((expected_y2_uniform(10, 6, 100.0) - 450.0 / 11.0).abs() < 1e-12);
        assert_eq!(gamma_uniform(5, 5), 0.0);
        assert!((gamma_uniform(10, 6) - 20.0 / 110.0).abs() < 1e-15);
        assert!((gamma_uniform_asymptotic(0.6) - 0.16).abs() < 1e-15);

        assert!((expected_y2_shifted_exp(2, 1, 0.5, 3.0) - (3.0 + 1.0)).abs() < 1e-15);
        assert!((expected_y2_shifted_exp(10, 6, 0.02, 1.0) - 31.0).abs() < 1e-12);
        assert!((expected_y2_shifted_exp(3, 2, 1.0, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((gamma_shifted_exp(10, 6, 0.02, 1.0) - 20.0 / 51.0).abs() < 1e-15);
        assert_eq!(gamma_shifted_exp(7, 3, 0.3, 0.0), 4.0 / 7.0);
        assert_eq!(gamma_shifted_exp(7, 7, 0.3, 2.0), 0.0);
    }

    #[test]
    fn min_of_two_exponentials_by_quadrature() {
        // E[min(X_t, max(X_a, X_b))] for unit exponentials, integrated directly
        let survival = |y: f64| (-y).exp() * (1.0 - (1.0 - (-y).exp()).powi(2));
        let brute = crate::quad::adaptive_simpson(survival, 0.0, 60.0, 1e-13).unwrap();
        assert!((brute - 2.0 / 3.0).abs() < 1e-10);
        assert!((expected_y2_shifted_exp(3, 2, 1.0, 0.0) - brute).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for &(n, k) in &CONFIGS {
            let u = Distribution::Uniform { upper: 100.0 };
            let num = expected_numeric(n, k, u, u).unwrap();
            assert!(rel(num, expected_y2_uniform(n, k, 100.0)) < 1e-6);

            for (rate, shift) in [(0.02, 1.0), (1.0, 0.0), (0.5, 3.0)] {
                let se = Distribution::ShiftedExp { rate, shift };
                let num = expected_numeric(n, k, se, se).unwrap();
                assert!(rel(num, expected_y2_shifted_exp(n, k, rate, shift)) < 1e-6, "{n},{k} {se}");
            }
        }
    }

    #[test]
    fn gamma_consistent_with_expectations() {
        for &(n, k) in &CONFIGS {
            let e1 = 50.0;
            let e2 = expected_y2_uniform(n, k, 100.0);
            assert!((gamma_uniform(n, k) - (e1 - e2) / e1).abs() < 1e-12);

            let (rate, shift) = (0.02, 1.0);
            let e1 = shift + 1.0 / rate;
            let e2 = expected_y2_shifted_exp(n, k, rate, shift);
            assert!((gamma_shifted_exp(n, k, rate, shift) - (e1 - e2) / e1).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_case_uniform_values() {
        let s = worst_case_uniform(100.0);
        assert_eq!((s.e_y1, s.gamma), (100.0, 1.0 / 3.0));
        assert!((s.e_y2 - 200.0 / 3.0).abs() < 1e-12);
        let one = worst_case_uniform(1.0);
        assert_eq!(one.gamma, 1.0 / 3.0);
        assert!((one.e_y2 - 2.0 / 3.0).abs() < 1e-15);

        for upper in [1.0, 100.0] {
            let num = expected_numeric(
                3,
                2,
                Distribution::Uniform { upper },
                Distribution::Constant { value: upper },
            )
            .unwrap();
            assert!(rel(num, 2.0 * upper / 3.0) < 1e-8);
        }
    }

    #[test]
    fn worst_case_shifted_exp_limits() {
        // constant node at or below the shift is never beaten
        let s = worst_case_shifted_exp(0.02, 5.0, 5.0).unwrap();
        assert!(s.gamma.abs() < 1e-12);
        let s = worst_case_shifted_exp(0.02, 5.0, 3.0).unwrap();
        assert!(s.gamma.abs() < 1e-12);

        // fast background: others finish right at s
        let s = worst_case_shifted_exp(1e4, 10.0, 100.0).unwrap();
        assert!((s.gamma - 0.9).abs() < 1e-3, "{}", s.gamma);

        // s = 0, closed form: integral_0^v 2e^{-ly} - e^{-2ly} dy
        let (l, v): (f64, f64) = (1.0 / 50.0, 100.0);
        let exact = 2.0 / l * (1.0 - (-l * v).exp()) - 1.0 / (2.0 * l) * (1.0 - (-2.0 * l * v).exp());
        let s = worst_case_shifted_exp(l, 0.0, v).unwrap();
        assert!(rel(s.e_y2, exact) < 1e-8);
    }

    #[test]
    fn sweep_covers_grid() {
        let rows = worst_case_sweep(&[0.02, 0.04], &[0.0, 1.0], &[50.0, 100.0]).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| (0.0..1.0).contains(&r.gamma) && r.e_y2 <= r.e_y1));
    }

    #[test]
    fn summary_invariants() {
        for model in [
            Distribution::Uniform { upper: 100.0 },
            Distribution::ShiftedExp { rate: 0.02, shift: 1.0 },
            Distribution::Constant { value: 7.0 },
        ] {
            let s = analytic_summary(10, 6, model).unwrap();
            assert!(s.e_y2 <= s.e_y1 && (0.0..1.0).contains(&s.gamma));
        }
        let s = analytic_summary(10, 6, Distribution::Uniform { upper: 100.0 }).unwrap();
        assert!((s.gamma_asymptotic.unwrap() - 0.16).abs() < 1e-15);
    }
}

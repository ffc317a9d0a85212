//! Monte Carlo accumulators and small order-statistic helpers.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Running count, sum and sum of squares. Merging is associative, so
/// per-replica accumulators can be combined in replica order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments<S> {
    pub count: u64,
    pub sum: S,
    pub sum_sq: S,
}

impl<S: Scalar> Moments<S> {
    pub fn new() -> Self {
        Moments { count: 0, sum: S::zero(), sum_sq: S::zero() }
    }

    pub fn from_values(values: &[S]) -> Self {
        let mut m = Self::new();
        for &v in values {
            m.push(v);
        }
        m
    }

    pub fn push(&mut self, x: S) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> S {
        if self.count == 0 {
            return S::nan();
        }
        self.sum / S::of(self.count as f64)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> S {
        if self.count < 2 {
            return S::zero();
        }
        let n = S::of(self.count as f64);
        let m = self.sum / n;
        let v = (self.sum_sq - n * m * m) / (n - S::one());
        v.max(S::zero())
    }

    pub fn std_error(&self) -> S {
        if self.count == 0 {
            return S::nan();
        }
        (self.variance() / S::of(self.count as f64)).sqrt()
    }

    pub fn estimate(&self, bias_bound: S) -> Estimate<S> {
        Estimate { value: self.mean(), se: self.std_error(), bias_bound, n: self.count }
    }
}

/// Point estimate with standard error and a deterministic bias bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<S> {
    pub value: S,
    pub se: S,
    pub bias_bound: S,
    pub n: u64,
}

impl<S: Scalar> Estimate<S> {
    pub fn exact(value: S) -> Self {
        Estimate { value, se: S::zero(), bias_bound: S::zero(), n: 0 }
    }

    /// `|value - target| <= k * se + bias_bound`.
    pub fn agrees_with(&self, target: S, k: S) -> bool {
        (self.value - target).abs() <= k * self.se + self.bias_bound
    }
}

/// Two-sample z-test: `|a - b| <= k * sqrt(se_a^2 + se_b^2) + bias_a + bias_b`.
pub fn two_sample_agree<S: Scalar>(a: &Estimate<S>, b: &Estimate<S>, k: S) -> bool {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    (a.value - b.value).abs() <= k * se + a.bias_bound + b.bias_bound
}

/// Empirical quantile and a distribution-free confidence interval from
/// binomial order statistics (normal approximation to the rank).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileCi {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Quantile of `sorted` (ascending, finite or +inf). `z` is the normal
/// quantile of the two-sided interval, e.g. 1.96.
pub fn quantile_ci(sorted: &[f64], q: f64, z: f64) -> Option<QuantileCi> {
    let n = sorted.len();
    if n == 0 || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let rank = |r: f64| -> usize { (r.floor().max(0.0) as usize).min(n - 1) };
    let nf = n as f64;
    let est = rank((q * nf).ceil() - 1.0);
    let half = z * (nf * q * (1.0 - q)).sqrt();
    let lo = rank((nf * q - half).floor() - 1.0);
    let hi = rank((nf * q + half).ceil());
    Some(QuantileCi { estimate: sorted[est], lo: sorted[lo], hi: sorted[hi], n })
}

/// Delete-a-group jackknife standard error of a statistic of grouped data.
pub fn jackknife_se(groups: usize, stat_without: impl Fn(usize) -> f64) -> f64 {
    if groups < 2 {
        return f64::NAN;
    }
    let vals: Vec<f64> = (0..groups).map(stat_without).collect();
    let g = groups as f64;
    let mean = vals.iter().sum::<f64>() / g;
    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((g - 1.0) / g * ss).sqrt()
}

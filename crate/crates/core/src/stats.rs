//! Empirical CDFs and Kolmogorov–Smirnov distances.

use crate::error::{Error, Result};

/// Right-continuous empirical CDF of a finite sample.
///
/// Samples censored at a time cap can be registered as "beyond every
/// observed value": they count toward the sample size but never toward
/// `F̂(x)`.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
    total: usize,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        Self::with_censored(values, 0)
    }

    pub fn with_censored(values: &[f64], censored: usize) -> Result<Self> {
        if values.is_empty() && censored == 0 {
            return Err(Error::EmptySample);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf {
            total: sorted.len() + censored,
            sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `F̂(x) = #{xᵢ ≤ x} / m`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.total as f64
    }

    /// `F̂(x⁻) = #{xᵢ < x} / m`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v < x);
        k as f64 / self.total as f64
    }

    /// Empirical `p`-quantile (lower).
    pub fn quantile(&self, p: f64) -> f64 {
        if self.sorted.is_empty() {
            return f64::INFINITY;
        }
        let idx = ((p * self.total as f64).ceil() as usize).max(1) - 1;
        self.sorted.get(idx).copied().unwrap_or(f64::INFINITY)
    }
}

pub fn ecdf(values: &[f64]) -> Result<Ecdf> {
    Ecdf::new(values)
}

/// One-sample KS distance `sup |F̂ − F|`, checking both sides of every jump.
/// With censored runs the sup is over the observed range.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    ks_distance_ecdf(&Ecdf::new(values)?, cdf)
}

pub fn ks_distance_ecdf<F: Fn(f64) -> f64>(ecdf: &Ecdf, cdf: F) -> Result<f64> {
    let m = ecdf.total as f64;
    let mut d: f64 = 0.0;
    let xs = &ecdf.sorted;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        // left side against F(x⁻), which equals F(x) for continuous F
        let below = i as f64 / m;
        let at = j as f64 / m;
        d = d.max((at - cdf(x)).abs()).max((below - cdf(x.next_down())).abs());
        i = j;
    }
    // Censored runs only say "later than the horizon", so the sup stops at
    // the last observed value instead of comparing the unobserved tail.
    if xs.is_empty() {
        d = d.max(1.0 - cdf(f64::MAX));
    }
    Ok(d)
}

/// Two-sample KS distance `sup |F̂₁ − F̂₂|`.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (xa, xb) = (&a.sorted, &b.sorted);
    let (ma, mb) = (a.total as f64, b.total as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / ma - j as f64 / mb).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample KS critical value `c(α)/√m`.
pub fn ks_critical(m: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (m as f64).sqrt()
}

/// Mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

//! Small numerical kernels shared by the exact solver and the limit laws.

/// `log(Σ exp(xᵢ))` with the usual max shift. Returns `-∞` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

/// `log(eᵃ + eᵇ)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(1 − eˣ)` for `x ≤ 0`, accurate on both ends.
#[inline]
pub fn log1m_exp(x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Running `log Σ exp` accumulator, used to build prefix sums in index order.
///
/// Terms are summed with Neumaier compensation relative to the largest term
/// seen so far; the partial sum is rescaled only when a new maximum arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    shift: f64,
    sum: NeumaierSum,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        LogAccumulator {
            shift: f64::NEG_INFINITY,
            sum: NeumaierSum::default(),
        }
    }
}

impl LogAccumulator {
    #[inline]
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.shift {
            self.sum.add((log_term - self.shift).exp());
        } else {
            let scale = (self.shift - log_term).exp();
            self.sum.scale(scale);
            self.sum.add(1.0);
            self.shift = log_term;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.shift + self.sum.value().ln()
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    #[inline]
    fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.comp *= factor;
    }
}

/// `x / (eˣ − 1)`, equal to 1 at `x = 0` and accurate for tiny `|x|`.
#[inline]
pub fn x_over_expm1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x / x.exp_m1()
    }
}

/// Find `x` in `[lo, hi]` with `f(x) = target` for nondecreasing `f`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_when_safe() {
        let xs = [0.1, -2.0, 1.5, 0.0];
        let naive: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_huge_arguments() {
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log1m_exp_both_branches() {
        for &x in &[-1e-10, -0.1, -0.5, -1.0] {
            let naive = (1.0 - f64::exp(x)).ln();
            let got = log1m_exp(x);
            assert!((got - naive).abs() <= 1e-6 * naive.abs().max(1e-300), "{x}");
        }
        assert!((log1m_exp(-1e-12) - (1e-12f64).ln()).abs() < 1e-9);
        // far tail: log(1 − eˣ) = −eˣ − e²ˣ/2 − …
        let x = -30.0f64;
        let series = -x.exp() - (2.0 * x).exp() / 2.0;
        assert!((log1m_exp(x) - series).abs() <= 1e-15 * series.abs());
    }

    #[test]
    fn accumulator_matches_batch_lse() {
        let xs: Vec<f64> = (0..500).map(|k| -0.3 * k as f64 + (k as f64).sin()).collect();
        let mut up = LogAccumulator::default();
        let mut down = LogAccumulator::default();
        for (&a, &b) in xs.iter().zip(xs.iter().rev()) {
            up.push(a);
            down.push(b);
        }
        let batch = log_sum_exp(&xs);
        assert!((up.value() - batch).abs() < 1e-13);
        assert!((down.value() - batch).abs() < 1e-13);
        assert_eq!(LogAccumulator::default().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn x_over_expm1_is_continuous_at_zero() {
        assert_eq!(x_over_expm1(0.0), 1.0);
        assert!((x_over_expm1(1e-9) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}

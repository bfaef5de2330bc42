//! Exact finite-n quantities of the logistic chain.
//!
//! Everything is expressed through the scale-function increments
//! `ν(j,k) = ∏_{i=j+1}^{k} q₋(i)/q₊(i)`, stored as a prefix table of
//! `log ν(0,k)`. The products span `e^{±nV*}`, so all sums are carried out in
//! log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BDRateSpec, ModelParams, RateKind};
use crate::numerics::{log1m_exp, log_add_exp, LogAccumulator, NeumaierSum};

/// Which absorption event an h-transform conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Reach `X*` before 0.
    Up,
    /// Reach 0 before `X*`.
    Down,
}

/// Prefix table of `log ν(0,k)` for `k = 0..n−1`, plus the hitting
/// probabilities of `{0, X*}` when `r > 1`.
#[derive(Debug, Clone)]
pub struct LogNuTable {
    pub params: ModelParams,
    pub log_nu_prefix: Vec<f64>,
    /// `log h₊(j)` for `j = 0..=X*` (empty unless `r > 1` and `X* ≥ 1`).
    log_h_plus: Vec<f64>,
    /// `log h₋(j)` for `j = 0..=X*`.
    log_h_minus: Vec<f64>,
}

/// Large-deviation estimate of `ν(na, nb)` from the potential `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialEstimate {
    pub a: f64,
    pub b: f64,
    pub log_nu_upper: f64,
    pub log_nu_central: f64,
    pub log_error_bound: f64,
}

/// Bundle of the exact supercritical quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactResults {
    pub h_plus: Vec<f64>,
    pub h_minus: Vec<f64>,
    pub log_p_star: f64,
    pub log_l_star: f64,
    pub log_e_star_o: f64,
    /// `log E[τ | X₀ = j]` for `j = 0..=n` (`-∞` at `j = 0`).
    pub mean_extinction: Vec<f64>,
}

impl LogNuTable {
    pub fn build(params: &ModelParams) -> Result<Self> {
        build_log_nu(params)
    }

    pub fn n(&self) -> u64 {
        self.params.n
    }

    #[inline]
    fn q_plus(&self, j: u64) -> f64 {
        self.params.up_rate(j)
    }

    #[inline]
    fn q_minus(&self, j: u64) -> f64 {
        self.params.down_rate(j)
    }

    /// `log ν(j,k)` for `0 ≤ j,k ≤ n−1`, using `ν(k,j) = 1/ν(j,k)`.
    #[inline]
    pub fn log_nu(&self, j: u64, k: u64) -> f64 {
        self.log_nu_prefix[k as usize] - self.log_nu_prefix[j as usize]
    }

    fn x_star_at_least(&self, needed: u64) -> Result<u64> {
        let xs = self.params.require_x_star()?;
        if xs < needed {
            return Err(Error::WindowTooSmall {
                x_star: xs,
                needed,
            });
        }
        Ok(xs)
    }

    /// `log h₊(j)`; equals 0 for `j ≥ X*`.
    pub fn log_h_plus(&self, j: u64) -> Result<f64> {
        let xs = self.x_star_at_least(1)?;
        Ok(if j >= xs {
            0.0
        } else {
            self.log_h_plus[j as usize]
        })
    }

    /// `log h₋(j)`; equals `-∞` for `j ≥ X*`.
    pub fn log_h_minus(&self, j: u64) -> Result<f64> {
        let xs = self.x_star_at_least(1)?;
        Ok(if j >= xs {
            f64::NEG_INFINITY
        } else {
            self.log_h_minus[j as usize]
        })
    }

    fn log_h(&self, target: Target, j: u64) -> f64 {
        let xs = self.params.big_x_star.unwrap_or(0);
        match target {
            Target::Up if j >= xs => 0.0,
            Target::Down if j >= xs => f64::NEG_INFINITY,
            Target::Up => self.log_h_plus[j as usize],
            Target::Down => self.log_h_minus[j as usize],
        }
    }

    /// Log of the conditioned rates at `0 < j < X*`, `(log q₊ʰ(j), log q₋ʰ(j))`.
    fn log_conditioned_rates(&self, target: Target, j: u64) -> (f64, f64) {
        let lh = self.log_h(target, j);
        let up = self.q_plus(j).ln() + self.log_h(target, j + 1) - lh;
        let down = self.q_minus(j).ln() + self.log_h(target, j - 1) - lh;
        (up, down)
    }

    /// Rate table of the h-transformed chain on `0..=X*`, with `X*` (for
    /// [`Target::Up`]) and 0 absorbing.
    pub fn conditioned_spec(&self, target: Target) -> Result<BDRateSpec> {
        let xs = self.x_star_at_least(1)?;
        let mut table = vec![(0.0, 0.0); xs as usize + 1];
        for j in 1..xs {
            let (lu, ld) = self.log_conditioned_rates(target, j);
            table[j as usize] = (lu.exp(), ld.exp());
        }
        let kind = match target {
            Target::Up => RateKind::ConditionedUp,
            Target::Down => RateKind::ConditionedDown,
        };
        Ok(BDRateSpec::from_table(kind, self.params.r, table))
    }

    /// `log S₋(j)` for every `j = 1..=n`, from the first-step recursion
    /// `q₋(j) S₋(j) = 1 + q₊(j) S₋(j+1)` swept downward from `S₋(n) = 1/n`.
    /// Index 0 holds `-∞`.
    pub fn log_crossing_down_all(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![f64::NEG_INFINITY; n as usize + 1];
        out[n as usize] = -(n as f64).ln();
        for j in (1..n).rev() {
            let up = self.q_plus(j);
            let carry = if up > 0.0 {
                up.ln() + out[j as usize + 1]
            } else {
                f64::NEG_INFINITY
            };
            out[j as usize] = log_add_exp(0.0, carry) - self.q_minus(j).ln();
        }
        out
    }

    /// `log E[τ | X₀ = j]` for all `j`, telescoping the crossing times.
    pub fn log_mean_extinction_all(&self) -> Vec<f64> {
        let s = self.log_crossing_down_all();
        let mut out = vec![f64::NEG_INFINITY; s.len()];
        let mut acc = LogAccumulator::default();
        for j in 1..s.len() {
            acc.push(s[j]);
            out[j] = acc.value();
        }
        out
    }
}

/// Build the `log ν(0,k)` prefix table.
pub fn build_log_nu(params: &ModelParams) -> Result<LogNuTable> {
    if params.r <= 0.0 {
        return Err(Error::InvalidParameter(
            "r must be positive to form death/birth ratios".into(),
        ));
    }
    let n = params.n;
    let nf = n as f64;
    let log_r = params.r.ln();
    let mut prefix = Vec::with_capacity(n as usize);
    prefix.push(0.0);
    let mut acc = NeumaierSum::default();
    for i in 1..n {
        // log(q₋(i)/q₊(i)) = −log r − log(1 − i/n)
        acc.add(-log_r - (-(i as f64) / nf).ln_1p());
        prefix.push(acc.value());
    }

    let mut table = LogNuTable {
        params: *params,
        log_nu_prefix: prefix,
        log_h_plus: Vec::new(),
        log_h_minus: Vec::new(),
    };

    if let Some(xs) = params.big_x_star.filter(|&x| x >= 1) {
        let xs = xs as usize;
        let p = &table.log_nu_prefix;
        // lower[j] = log Σ_{k<j} ν(k), upper[j] = log Σ_{j≤k<X*} ν(k)
        let mut lower = vec![f64::NEG_INFINITY; xs + 1];
        let mut acc = LogAccumulator::default();
        for j in 0..xs {
            acc.push(p[j]);
            lower[j + 1] = acc.value();
        }
        let mut upper = vec![f64::NEG_INFINITY; xs + 1];
        let mut acc = LogAccumulator::default();
        for j in (0..xs).rev() {
            acc.push(p[j]);
            upper[j] = acc.value();
        }
        let total = lower[xs];
        table.log_h_plus = lower.iter().map(|&l| l - total).collect();
        table.log_h_minus = upper.iter().map(|&u| u - total).collect();
        table.log_h_plus[xs] = 0.0;
        table.log_h_minus[xs] = f64::NEG_INFINITY;
    }
    Ok(table)
}

/// `V(x) = x(log r − 1) − (1−x) log(1−x)` for `0 ≤ x < 1`.
pub fn potential_v(params: &ModelParams, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "potential defined on [0,1), got {x}"
        )));
    }
    Ok(potential_raw(params.r, x))
}

fn potential_raw(r: f64, x: f64) -> f64 {
    let entropy = if x >= 1.0 {
        0.0
    } else {
        (1.0 - x) * (-x).ln_1p()
    };
    x * (r.ln() - 1.0) - entropy
}

/// Upper bound, central estimate and trapezoid error bound for
/// `log ν(na, nb)`; `a` and `b` are rounded to the `1/n` grid.
pub fn nu_estimate(params: &ModelParams, a: f64, b: f64) -> Result<PotentialEstimate> {
    let n = params.n as f64;
    let ja = (a * n).round();
    let jb = (b * n).round();
    let (a, b) = (ja / n, jb / n);
    if !(a >= 0.0 && a < b) {
        return Err(Error::InvalidParameter(format!(
            "need 0 ≤ a < b on the grid, got a={a}, b={b}"
        )));
    }
    if b >= 1.0 {
        return Err(Error::InvalidParameter("b must be below 1".into()));
    }
    let r = params.r;
    let v = |x| potential_raw(r, x);
    let upper = -n * (v(b + 1.0 / n) - v(a + 1.0 / n));
    let central = 0.5 * ((1.0 - a) / (1.0 - b)).ln() - n * (v(b) - v(a));
    let bound = 1.0 / (12.0 * n * (1.0 - b).powi(2) * (b - a));
    Ok(PotentialEstimate {
        a,
        b,
        log_nu_upper: upper,
        log_nu_central: central,
        log_error_bound: bound,
    })
}

/// `(h₊(j), h₋(j))` for `j = 0..=n`.
pub fn hitting_probs(table: &LogNuTable) -> Result<(Vec<f64>, Vec<f64>)> {
    table.x_star_at_least(1)?;
    let n = table.n();
    let mut hp = Vec::with_capacity(n as usize + 1);
    let mut hm = Vec::with_capacity(n as usize + 1);
    for j in 0..=n {
        let lp = table.log_h(Target::Up, j);
        let lm = table.log_h(Target::Down, j);
        hp.push(lp.exp());
        hm.push(lm.exp());
    }
    Ok((hp, hm))
}

/// Transition rates of the chain conditioned on `target`, at `0 < j < X*`.
pub fn conditioned_rates(table: &LogNuTable, target: Target, j: u64) -> Result<(f64, f64)> {
    let xs = table.x_star_at_least(1)?;
    if j == 0 || j >= xs {
        return Err(Error::StateOutOfRange {
            state: j,
            max: xs.saturating_sub(1),
        });
    }
    if table.log_h(target, j) == f64::NEG_INFINITY {
        return Err(Error::NullConditioning { state: j });
    }
    let (lu, ld) = table.log_conditioned_rates(target, j);
    Ok((lu.exp(), ld.exp()))
}

/// Expected time for the up-conditioned chain to step from `j` to `j+1`,
/// `1 ≤ j < X*`, from the closed-form ν sum.
pub fn crossing_up_star(table: &LogNuTable, j: u64) -> Result<f64> {
    Ok(log_crossing_up_star(table, j)?.exp())
}

pub fn log_crossing_up_star(table: &LogNuTable, j: u64) -> Result<f64> {
    let xs = table.x_star_at_least(2)?;
    if j == 0 || j >= xs {
        return Err(Error::StateOutOfRange {
            state: j,
            max: xs - 1,
        });
    }
    let lh_j = table.log_h(Target::Up, j);
    let mut acc = LogAccumulator::default();
    for i in 1..=j {
        let term = table.log_nu(i, j - 1) + 2.0 * (table.log_h(Target::Up, i) - lh_j)
            - table.q_plus(i).ln();
        acc.push(term);
    }
    let (log_up_star, _) = table.log_conditioned_rates(Target::Up, j);
    Ok(table.q_minus(j).ln() - log_up_star + acc.value())
}

/// Expected time for the unconditioned chain to step from `j` to `j−1`,
/// `1 ≤ j ≤ n`, from the closed-form ν sum.
pub fn crossing_down(table: &LogNuTable, j: u64) -> Result<f64> {
    Ok(log_crossing_down(table, j)?.exp())
}

pub fn log_crossing_down(table: &LogNuTable, j: u64) -> Result<f64> {
    let n = table.n();
    if j == 0 || j > n {
        return Err(Error::StateOutOfRange { state: j, max: n });
    }
    if j == n {
        return Ok(-table.q_minus(n).ln());
    }
    let mut acc = LogAccumulator::default();
    for i in j..=n {
        acc.push(table.log_nu(i - 1, j) - table.q_minus(i).ln());
    }
    Ok(table.q_plus(j).ln() - table.q_minus(j).ln() + acc.value())
}

/// Expected time for the down-conditioned chain to step from `j` to `j−1`,
/// `1 ≤ j < X*`.
pub fn crossing_down_conditioned(table: &LogNuTable, j: u64) -> Result<f64> {
    Ok(log_crossing_down_conditioned(table, j)?.exp())
}

pub fn log_crossing_down_conditioned(table: &LogNuTable, j: u64) -> Result<f64> {
    let xs = table.x_star_at_least(2)?;
    if j == 0 || j >= xs {
        return Err(Error::StateOutOfRange {
            state: j,
            max: xs - 1,
        });
    }
    let (lq_up, lq_down) = table.log_conditioned_rates(Target::Down, j);
    if j == xs - 1 {
        return Ok(-lq_down);
    }
    let lh = |k| table.log_h(Target::Down, k);
    // ν⁰(a,b) = ν(a,b) h₋(a)h₋(a+1) / (h₋(b)h₋(b+1))
    let log_nu0 = |a: u64, b: u64| table.log_nu(a, b) + lh(a) + lh(a + 1) - lh(b) - lh(b + 1);
    let mut acc = LogAccumulator::default();
    for i in j..xs {
        let (_, lq_down_i) = table.log_conditioned_rates(Target::Down, i);
        acc.push(log_nu0(i - 1, j) - lq_down_i);
    }
    Ok(lq_up - lq_down + acc.value())
}

/// `log p*`, the probability that the chain started at `X*` hits 0 before
/// returning to `X*`.
pub fn p_star_exact(table: &LogNuTable) -> Result<f64> {
    let xs = table.x_star_at_least(2)?;
    let q = table.q_plus(xs) + table.q_minus(xs);
    Ok(table.q_minus(xs).ln() - q.ln() + table.log_h(Target::Down, xs - 1))
}

/// Expected length of one excursion cycle from `X*` back to `X*`.
pub fn l_star_exact(table: &LogNuTable) -> Result<f64> {
    Ok(log_l_star(table)?.exp())
}

pub fn log_l_star(table: &LogNuTable) -> Result<f64> {
    let xs = table.x_star_at_least(2)?;
    let n = table.n();
    if xs >= n {
        return Err(Error::WindowTooSmall { x_star: xs, needed: 2 });
    }
    let up = table.q_plus(xs);
    let down = table.q_minus(xs);
    let mut acc = LogAccumulator::default();
    acc.push(0.0);
    acc.push(down.ln() + log_crossing_up_star(table, xs - 1)?);
    if up > 0.0 {
        acc.push(up.ln() + log_crossing_down(table, xs + 1)?);
    }
    Ok(acc.value() - (up + down).ln())
}

/// `log E*ᵒ = log L* + log(1/p* − 1)`, the expected sojourn near `X*`.
pub fn sojourn_expectation(table: &LogNuTable) -> Result<f64> {
    let log_p = p_star_exact(table)?;
    let log_l = log_l_star(table)?;
    Ok(log_l + log1m_exp(log_p) - log_p)
}

/// `E[τ | X₀ = j]`. Overflows to `+∞` for deeply metastable instances; use
/// [`log_mean_extinction_exact`] there.
pub fn mean_extinction_exact(table: &LogNuTable, j: u64) -> Result<f64> {
    Ok(log_mean_extinction_exact(table, j)?.exp())
}

pub fn log_mean_extinction_exact(table: &LogNuTable, j: u64) -> Result<f64> {
    let n = table.n();
    if j > n {
        return Err(Error::StateOutOfRange { state: j, max: n });
    }
    if j == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let s = table.log_crossing_down_all();
    let mut acc = LogAccumulator::default();
    for &v in &s[1..=j as usize] {
        acc.push(v);
    }
    Ok(acc.value())
}

impl ExactResults {
    pub fn compute(table: &LogNuTable) -> Result<Self> {
        let (h_plus, h_minus) = hitting_probs(table)?;
        let log_p_star = p_star_exact(table)?;
        let log_l_star = log_l_star(table)?;
        let log_e_star_o = sojourn_expectation(table)?;
        Ok(ExactResults {
            h_plus,
            h_minus,
            log_p_star,
            log_l_star,
            log_e_star_o,
            mean_extinction: table.log_mean_extinction_all(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    fn table(n: u64, r: f64) -> LogNuTable {
        build_log_nu(&make_params(n, r).unwrap()).unwrap()
    }

    #[test]
    fn single_factor_and_reciprocal() {
        let t = table(10, 2.0);
        let expected = (1.0f64 / (2.0 * 0.9)).ln();
        assert!((t.log_nu(0, 1) - expected).abs() < 1e-15);
        assert!((t.log_nu(0, 1) + 0.5878).abs() < 1e-4);
        assert_eq!(t.log_nu(3, 3), 0.0);
        assert!((t.log_nu(1, 0).exp() - 1.8).abs() < 1e-14);
        assert_eq!(t.log_nu_prefix.len(), 10);
        assert_eq!(t.log_nu_prefix[0], 0.0);
    }

    #[test]
    fn rejects_zero_rate() {
        assert!(build_log_nu(&make_params(10, 0.0).unwrap()).is_err());
    }

    #[test]
    fn prefix_is_v_shaped_around_x_star() {
        let t = table(500, 1.7);
        let xs = t.params.big_x_star.unwrap() as usize;
        let p = &t.log_nu_prefix;
        for k in 1..xs {
            assert!(p[k] < p[k - 1], "not decreasing at {k}");
        }
        for k in (xs + 1)..p.len() {
            assert!(p[k] > p[k - 1], "not increasing at {k}");
        }
    }

    #[test]
    fn potential_examples() {
        let p = make_params(1000, 1.5).unwrap();
        assert_eq!(potential_v(&p, 0.0).unwrap(), 0.0);
        let vs = potential_v(&p, 1.0 / 3.0).unwrap();
        assert!((vs - p.v_star.unwrap()).abs() < 1e-12 * vs);
        let p2 = make_params(10, 2.0).unwrap();
        let v = potential_v(&p2, 0.5).unwrap();
        assert!((v - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!(potential_v(&p2, 1.0).is_err());
    }

    #[test]
    fn v_star_matches_potential_at_x_star() {
        for &r in &[1.01, 1.5, 2.0, 4.0, 9.0] {
            let p = make_params(100, r).unwrap();
            let v = potential_v(&p, p.x_star.unwrap()).unwrap();
            let vs = p.v_star.unwrap();
            assert!((v - vs).abs() <= 1e-12 * vs.abs(), "r={r}");
        }
    }

    #[test]
    fn potential_estimate_brackets_exact_value() {
        let p = make_params(200, 0.8).unwrap();
        let t = build_log_nu(&p).unwrap();
        let est = nu_estimate(&p, 0.0, 0.25).unwrap();
        let exact = t.log_nu(0, 50);
        assert!((exact - est.log_nu_central).abs() <= est.log_error_bound);
        assert!(exact <= est.log_nu_upper);
    }

    #[test]
    fn potential_estimate_narrow_band() {
        let p = make_params(300, 1.3).unwrap();
        let t = build_log_nu(&p).unwrap();
        let b = 0.5;
        let est = nu_estimate(&p, b - 1.0 / 300.0, b).unwrap();
        assert!(t.log_nu(149, 150) <= est.log_nu_upper + 1e-12);
    }

    #[test]
    fn potential_estimate_near_x_star() {
        let p = make_params(1000, 1.5).unwrap();
        let t = build_log_nu(&p).unwrap();
        let xs = p.big_x_star.unwrap();
        let est = nu_estimate(&p, 0.0, (xs - 1) as f64 / 1000.0).unwrap();
        let exact = t.log_nu(0, xs - 1);
        assert!((exact - est.log_nu_central).abs() <= est.log_error_bound);
        let asymptotic = 0.5 * 1.5f64.ln() - 1000.0 * p.v_star.unwrap();
        assert!((est.log_nu_central - asymptotic).abs() < 0.01);
    }

    #[test]
    fn potential_estimate_rejects_bad_bands() {
        let p = make_params(100, 1.5).unwrap();
        assert!(nu_estimate(&p, 0.5, 0.5).is_err());
        assert!(nu_estimate(&p, 0.6, 0.5).is_err());
        assert!(nu_estimate(&p, 0.2, 1.0).is_err());
    }

    #[test]
    fn hitting_probability_examples() {
        let t = table(10, 2.0);
        let (hp, hm) = hitting_probs(&t).unwrap();
        assert_eq!(hp[0], 0.0);
        assert_eq!(hp[5], 1.0);
        // Σ_{k=0}^{4} ν(k) from hand products of 1/(2(1−i/10)).
        let mut nu = 1.0;
        let mut total = 1.0;
        for i in 1..5 {
            nu *= 1.0 / (2.0 * (1.0 - i as f64 / 10.0));
            total += nu;
        }
        assert!((total - 2.3575).abs() < 1e-3);
        assert!((hp[1] - 1.0 / total).abs() < 1e-13);
        assert!((hp[1] - 0.4242).abs() < 1e-4);
        assert!((hm[1] - 0.5758).abs() < 1e-4);
        for j in 0..=10 {
            assert!((hp[j] + hm[j] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hitting_probs_need_x_star() {
        let t = table(50, 0.9);
        assert!(matches!(
            hitting_probs(&t),
            Err(Error::NotSupercritical { .. })
        ));
        let t = table(5, 1.1);
        assert!(matches!(hitting_probs(&t), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn down_conditioning_tilts_rates() {
        let t = table(40, 1.6);
        let xs = t.params.big_x_star.unwrap();
        for j in 1..xs {
            let (up, down) = conditioned_rates(&t, Target::Down, j).unwrap();
            assert!(up < t.q_plus(j));
            assert!(down > t.q_minus(j));
            let (up_star, down_star) = conditioned_rates(&t, Target::Up, j).unwrap();
            assert!(up_star > t.q_plus(j));
            assert!(down_star < t.q_minus(j));
        }
    }

    #[test]
    fn up_conditioned_rate_at_one() {
        let t = table(10, 2.0);
        let (hp, _) = hitting_probs(&t).unwrap();
        let (up, down) = conditioned_rates(&t, Target::Up, 1).unwrap();
        assert!((up - 2.0 * 0.9 * hp[2] / hp[1]).abs() < 1e-12);
        assert_eq!(down, 0.0);
        assert!(conditioned_rates(&t, Target::Up, 0).is_err());
        assert!(conditioned_rates(&t, Target::Up, 5).is_err());
    }

    #[test]
    fn crossing_up_star_base_case() {
        for &(n, r) in &[(10u64, 2.0), (100, 1.3), (1000, 1.5)] {
            let t = table(n, r);
            let (up, _) = conditioned_rates(&t, Target::Up, 1).unwrap();
            let s = crossing_up_star(&t, 1).unwrap();
            assert!((up * s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn crossing_times_exceed_one_holding_time() {
        let t = table(60, 1.8);
        let xs = t.params.big_x_star.unwrap();
        for j in 1..xs {
            let (u, d) = conditioned_rates(&t, Target::Up, j).unwrap();
            assert!(crossing_up_star(&t, j).unwrap() >= 1.0 / (u + d) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn crossing_down_boundary_and_pure_death_limit() {
        let t = table(10, 2.0);
        assert!((crossing_down(&t, 10).unwrap() - 0.1).abs() < 1e-15);
        assert!(crossing_down(&t, 0).is_err());
        let tiny = table(20, 1e-12);
        for j in 1..=20u64 {
            let s = crossing_down(&tiny, j).unwrap();
            assert!((s - 1.0 / j as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn crossing_down_closed_form_matches_recursion() {
        for &(n, r) in &[(10u64, 2.0), (300, 0.7), (500, 1.5)] {
            let t = table(n, r);
            let rec = t.log_crossing_down_all();
            for j in 1..=n {
                let closed = log_crossing_down(&t, j).unwrap();
                assert!((closed - rec[j as usize]).abs() < 1e-10, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn conditioned_crossing_boundary() {
        let t = table(10, 2.0);
        let (_, down) = conditioned_rates(&t, Target::Down, 4).unwrap();
        let s = crossing_down_conditioned(&t, 4).unwrap();
        assert!((s - 1.0 / down).abs() < 1e-15);
    }

    #[test]
    fn conditioned_crossing_dominated_by_unconditioned_ratio() {
        let t = table(80, 1.5);
        let xs = t.params.big_x_star.unwrap();
        for j in 1..xs {
            let (u0, d0) = conditioned_rates(&t, Target::Down, j).unwrap();
            assert!(u0 / d0 <= t.q_plus(j) / t.q_minus(j));
        }
    }

    #[test]
    fn p_star_small_example() {
        let t = table(10, 2.0);
        let (_, hm) = hitting_probs(&t).unwrap();
        let p = p_star_exact(&t).unwrap().exp();
        assert!((p - 0.5 * hm[4]).abs() < 1e-14);
        assert!(p <= 0.5 * hm[4] + 1e-15);
        assert!(p_star_exact(&t).unwrap() < 0.0);
    }

    #[test]
    fn l_star_at_least_one_holding_time() {
        let t = table(10, 2.0);
        let l = l_star_exact(&t).unwrap();
        assert!(l >= 1.0 / 10.0);
        let s_up = crossing_up_star(&t, 4).unwrap();
        let s_dn = crossing_down(&t, 6).unwrap();
        let expected = (1.0 + 5.0 * s_up + 5.0 * s_dn) / 10.0;
        assert!((l - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn sojourn_algebra() {
        let t = table(60, 1.8);
        let log_p = p_star_exact(&t).unwrap();
        let log_l = log_l_star(&t).unwrap();
        let log_e = sojourn_expectation(&t).unwrap();
        let direct = log_l.exp() * (1.0 / log_p.exp() - 1.0);
        assert!((log_e.exp() - direct).abs() < 1e-10 * direct);
        assert!(log_e > log_l);
    }

    #[test]
    fn mean_extinction_examples() {
        let t = table(100, 0.8);
        assert_eq!(mean_extinction_exact(&t, 0).unwrap(), 0.0);
        let tiny = table(10, 1e-12);
        let m = mean_extinction_exact(&tiny, 4).unwrap();
        assert!((m - 25.0 / 12.0).abs() < 1e-9);
        assert!(mean_extinction_exact(&t, 101).is_err());
        let all = t.log_mean_extinction_all();
        assert!((all[10] - log_mean_extinction_exact(&t, 10).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_window_is_typed() {
        // n = 12, r = 1.1: X* = 1
        let t = table(12, 1.1);
        assert!(matches!(
            p_star_exact(&t),
            Err(Error::WindowTooSmall { x_star: 1, .. })
        ));
        assert!(l_star_exact(&t).is_err());
        assert!(crossing_up_star(&t, 1).is_err());
    }

    #[test]
    fn exact_results_bundle() {
        let t = table(60, 1.8);
        let res = ExactResults::compute(&t).unwrap();
        assert_eq!(res.h_plus.len(), 61);
        assert!(res.h_plus.windows(2).all(|w| w[1] >= w[0]));
        assert!(res.h_plus.iter().all(|&h| (0.0..=1.0).contains(&h)));
        assert_eq!(res.mean_extinction[0], f64::NEG_INFINITY);
    }

    proptest::proptest! {
        #[test]
        fn nu_chain_rule(n in 5u64..400, r in 0.2f64..4.0, a in 0usize..1000, b in 0usize..1000, c in 0usize..1000) {
            let t = table(n, r);
            let m = t.log_nu_prefix.len();
            let (j, k, l) = ((a % m) as u64, (b % m) as u64, (c % m) as u64);
            let lhs = t.log_nu(j, k) + t.log_nu(k, l);
            let rhs = t.log_nu(j, l);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            proptest::prop_assert_eq!(t.log_nu(j, j), 0.0);
        }

        #[test]
        fn h_sum_to_one(n in 10u64..2000, r in 1.05f64..5.0) {
            let t = table(n, r);
            if let Ok((hp, hm)) = hitting_probs(&t) {
                for j in 0..hp.len() {
                    proptest::prop_assert!((hp[j] + hm[j] - 1.0).abs() < 1e-12);
                }
                proptest::prop_assert!(hp.windows(2).all(|w| w[1] >= w[0]));
            }
        }

        #[test]
        fn potential_sandwich(r in 0.3f64..3.0, ai in 0u32..20, bi in 1u32..20, which in 0usize..3) {
            let n = [100u64, 400, 1600][which];
            let p = make_params(n, r).unwrap();
            let t = build_log_nu(&p).unwrap();
            let (a, b) = (ai.min(bi - 1) as f64 / 21.0, bi as f64 / 21.0);
            let est = nu_estimate(&p, a, b).unwrap();
            let (ja, jb) = ((est.a * n as f64).round() as u64, (est.b * n as f64).round() as u64);
            let exact = t.log_nu(ja, jb);
            proptest::prop_assert!(exact <= est.log_nu_upper + 1e-9);
            proptest::prop_assert!((exact - est.log_nu_central).abs() <= est.log_error_bound + 1e-9);
        }
    }
}

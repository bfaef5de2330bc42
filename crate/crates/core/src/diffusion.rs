//! Euler–Maruyama integration of the limiting diffusions.
//!
//! * critical window: `dY = Y(c − Y) dt + √(2Y) dB`,
//! * Feller: `dY = −aY dt + √(2Y) dB`, whose zero-hitting time has law `H_a`,
//! * Ornstein–Uhlenbeck fluctuations around `X*`, checked against the chain
//!   itself by [`ou_fluctuation_check`].
//!
//! A step that lands at or below 0 absorbs; the reported hitting time is the
//! left endpoint of that step, so `T` is biased low by at most `dt`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::TabulatedCdf;
use crate::model::{BDRateSpec, ModelParams};
use crate::rng::{stream, StreamRng};
use crate::stats::{ks_two_sample, mean_se, Ecdf};

pub const DEFAULT_DT_CRITICAL: f64 = 1e-4;
pub const DEFAULT_DT_FELLER: f64 = 1e-4;
pub const DEFAULT_T_CAP: f64 = 1e3;
/// Starting value standing in for an entrance from `+∞`.
pub const DEFAULT_Y_PROXY: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiffusionKind {
    CriticalLogistic { c: f64 },
    Feller { a: f64 },
    /// `dW = −rate·W dt + √diff dB`
    Ou { rate: f64, diff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    /// Initial value; `f64::INFINITY` marks an entrance from infinity.
    pub y0: f64,
    pub dt: f64,
    pub t_cap: f64,
}

impl DiffusionSpec {
    pub fn critical(c: f64, y0: f64) -> Self {
        DiffusionSpec {
            kind: DiffusionKind::CriticalLogistic { c },
            y0,
            dt: DEFAULT_DT_CRITICAL,
            t_cap: DEFAULT_T_CAP,
        }
    }

    pub fn feller(a: f64, y0: f64) -> Self {
        DiffusionSpec {
            kind: DiffusionKind::Feller { a },
            y0,
            dt: DEFAULT_DT_FELLER,
            t_cap: DEFAULT_T_CAP,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_cap(mut self, t_cap: f64) -> Self {
        self.t_cap = t_cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt and t_cap must be > 0, got dt={} t_cap={}",
                self.dt, self.t_cap
            )));
        }
        if self.y0.is_nan() || self.y0 < 0.0 {
            return Err(Error::InvalidParameter(format!("y0 must be ≥ 0, got {}", self.y0)));
        }
        if self.y0.is_infinite() {
            return Err(Error::InvalidParameter(
                "infinite start: replace it with infinite_entrance_start first".into(),
            ));
        }
        match self.kind {
            DiffusionKind::Feller { a } if a < 0.0 => {
                Err(Error::InvalidParameter(format!("Feller a must be ≥ 0, got {a}")))
            }
            DiffusionKind::Ou { .. } => Err(Error::InvalidParameter(
                "the OU process has no absorbing boundary".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Hitting time of 0 with a caller-owned stream; `None` when censored.
pub fn hitting_time_with(spec: &DiffusionSpec, rng: &mut StreamRng) -> Option<f64> {
    let (c, quad) = match spec.kind {
        DiffusionKind::CriticalLogistic { c } => (c, 1.0),
        DiffusionKind::Feller { a } => (-a, 0.0),
        DiffusionKind::Ou { .. } => unreachable!("validated"),
    };
    let dt = spec.dt;
    let sq = (2.0 * dt).sqrt();
    let steps = (spec.t_cap / dt).ceil() as u64;
    let mut y = spec.y0;
    if y <= 0.0 {
        return Some(0.0);
    }
    for k in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        y += y * (c - quad * y) * dt + sq * y.sqrt() * z;
        if y <= 0.0 {
            return Some(k as f64 * dt);
        }
    }
    None
}

/// Hitting times at step `dt` and `dt/2` along one Brownian path: the coarse
/// increment is the sum of two fine ones. Used to measure discretization
/// error without Monte Carlo noise between the two samples.
pub fn refinement_pair(spec: &DiffusionSpec, rng: &mut StreamRng) -> (Option<f64>, Option<f64>) {
    let (c, quad) = match spec.kind {
        DiffusionKind::CriticalLogistic { c } => (c, 1.0),
        DiffusionKind::Feller { a } => (-a, 0.0),
        DiffusionKind::Ou { .. } => unreachable!("validated"),
    };
    let dt = spec.dt;
    let h = dt / 2.0;
    let sh = h.sqrt();
    let steps = (spec.t_cap / dt).ceil() as u64;
    let (mut yc, mut yf) = (spec.y0, spec.y0);
    let (mut tc, mut tf) = (None, None);
    if spec.y0 <= 0.0 {
        return (Some(0.0), Some(0.0));
    }
    for k in 0..steps {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        for (j, z) in [z1, z2].into_iter().enumerate() {
            if tf.is_none() {
                yf += yf * (c - quad * yf) * h + (2.0 * yf).sqrt() * sh * z;
                if yf <= 0.0 {
                    tf = Some((2 * k + j as u64) as f64 * h);
                }
            }
        }
        if tc.is_none() {
            let dw = sh * (z1 + z2);
            yc += yc * (c - quad * yc) * dt + (2.0 * yc).sqrt() * dw;
            if yc <= 0.0 {
                tc = Some(k as f64 * dt);
            }
        }
        if tc.is_some() && tf.is_some() {
            break;
        }
    }
    (tc, tf)
}

/// KS distance between the hitting-time laws at `dt` and `dt/2`, from
/// `replicates` coupled pairs.
pub fn refinement_ks(spec: &DiffusionSpec, replicates: usize, master_seed: u64) -> Result<f64> {
    spec.validate()?;
    let pairs: Vec<(Option<f64>, Option<f64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| refinement_pair(spec, &mut stream(master_seed, i)))
        .collect();
    let split = |pick: fn(&(Option<f64>, Option<f64>)) -> Option<f64>| -> Result<Ecdf> {
        let v: Vec<f64> = pairs.iter().filter_map(pick).collect();
        Ecdf::with_censored(&v, replicates - v.len())
    };
    ks_two_sample(&split(|p| p.0)?, &split(|p| p.1)?)
}

/// First time the diffusion reaches 0, or `None` if it survives to `t_cap`.
pub fn simulate_hitting_time(spec: &DiffusionSpec, seed: u64) -> Result<Option<f64>> {
    spec.validate()?;
    let mut rng = stream(seed, 0);
    Ok(hitting_time_with(spec, &mut rng))
}

/// Hitting times of `replicates` independent runs (replicate `i` uses
/// stream `i` of `master_seed`) and the number censored.
pub fn sample_hitting_times(
    spec: &DiffusionSpec,
    replicates: usize,
    master_seed: u64,
) -> Result<(Vec<f64>, usize)> {
    spec.validate()?;
    let raw: Vec<Option<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| hitting_time_with(spec, &mut stream(master_seed, i)))
        .collect();
    let censored = raw.iter().filter(|v| v.is_none()).count();
    Ok((raw.into_iter().flatten().collect(), censored))
}

/// Replace an infinite start by a large finite one.
///
/// From `+∞` the critical diffusion comes down to any level `w` in a time
/// that vanishes as `w → ∞`, so the hitting-time law from `y_start_proxy`
/// converges to the one from infinity.
pub fn infinite_entrance_start(spec: &DiffusionSpec, y_start_proxy: f64) -> Result<DiffusionSpec> {
    let c = match spec.kind {
        DiffusionKind::CriticalLogistic { c } => c,
        _ => {
            return Err(Error::InvalidParameter(
                "infinite entrance only applies to the critical diffusion".into(),
            ))
        }
    };
    if !(y_start_proxy > 0.0) || !y_start_proxy.is_finite() {
        return Err(Error::InvalidParameter(format!("bad proxy {y_start_proxy}")));
    }
    if c > 0.0 && y_start_proxy < 10.0 * c.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "proxy {y_start_proxy} too small for c = {c}; need ≥ {}",
            10.0 * c.max(1.0)
        )));
    }
    Ok(DiffusionSpec {
        y0: y_start_proxy,
        ..*spec
    })
}

/// Empirical CDF of the hitting time on a grid over `[0, q₀.₉₉₅]`.
///
/// The table ends with a point at the largest observed time carrying the
/// uncensored fraction.
pub fn hitting_cdf_numeric(
    spec: &DiffusionSpec,
    replicates: usize,
    master_seed: u64,
) -> Result<TabulatedCdf> {
    if replicates < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 replicates, got {replicates}"
        )));
    }
    let (mut t, censored) = sample_hitting_times(spec, replicates, master_seed)?;
    if censored * 100 > replicates {
        return Err(Error::ExcessiveCensoring {
            censored,
            total: replicates,
        });
    }
    t.sort_by(f64::total_cmp);
    let total = replicates as f64;
    let q = t[((0.995 * total).ceil() as usize).min(t.len()) - 1];
    const POINTS: usize = 1000;
    let mut grid = Vec::with_capacity(POINTS + 2);
    let mut values = Vec::with_capacity(POINTS + 2);
    for k in 0..=POINTS {
        let x = q * k as f64 / POINTS as f64;
        grid.push(x);
        values.push(t.partition_point(|&v| v <= x) as f64 / total);
    }
    let last = *t.last().unwrap();
    if last > q {
        grid.push(last);
        values.push(t.len() as f64 / total);
    }
    Ok(TabulatedCdf { grid, values })
}

/// Result of [`ou_fluctuation_check`]; every estimate carries its standard
/// error across replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuReport {
    pub variance: f64,
    pub variance_se: f64,
    pub target_variance: f64,
    pub autocorr_lag1: f64,
    pub autocorr_se: f64,
    pub target_autocorr: f64,
    /// Largest `|mean W_s| / SE` over the window.
    pub max_mean_z: f64,
}

/// Rescaled time discarded before the stationary window.
const OU_BURN_IN: f64 = 3.0;
const OU_GRID: f64 = 0.05;

/// Simulate the chain from `X*` and compare `W_s = (X_{s/δ} − n x*)/√n`
/// with its OU limit over rescaled times `[3, horizon]`.
pub fn ou_fluctuation_check(
    params: &ModelParams,
    horizon: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<OuReport> {
    let xs = params.require_x_star()?;
    let v_star = params.v_star.unwrap();
    if (params.n as f64) * v_star < 4.0 {
        return Err(Error::RegimeViolation {
            case: "ou".into(),
            reason: format!("nV* = {:.2} < 4, no stationary window", params.n as f64 * v_star),
        });
    }
    if horizon < OU_BURN_IN + 2.0 || replicates < 2 {
        return Err(Error::InvalidParameter(
            "horizon must exceed the burn-in by 2 and replicates ≥ 2".into(),
        ));
    }
    let spec = BDRateSpec::logistic(params);
    let delta = params.delta;
    let centre = params.n as f64 * params.x_star.unwrap();
    let root_n = (params.n as f64).sqrt();
    let points = (horizon / OU_GRID).floor() as usize + 1;
    let grid: Vec<f64> = (0..points).map(|k| k as f64 * OU_GRID / delta).collect();
    let lag = (1.0 / OU_GRID).round() as usize;
    let start = (OU_BURN_IN / OU_GRID).round() as usize;

    let runs: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, i);
            states_on_grid(&spec, xs, &mut rng, &grid)
                .into_iter()
                .map(|x| (x as f64 - centre) / root_n)
                .collect()
        })
        .collect();

    let mut var_est = Vec::with_capacity(replicates);
    let mut cov_est = Vec::with_capacity(replicates);
    for w in &runs {
        let win = &w[start..];
        var_est.push(win.iter().map(|v| v * v).sum::<f64>() / win.len() as f64);
        let pairs = win.len() - lag;
        cov_est.push((0..pairs).map(|k| win[k] * win[k + lag]).sum::<f64>() / pairs as f64);
    }
    let (variance, variance_se) = mean_se(&var_est);
    let (cov, cov_se) = mean_se(&cov_est);
    let mut max_mean_z: f64 = 0.0;
    for k in start..points {
        let col: Vec<f64> = runs.iter().map(|w| w[k]).collect();
        let (m, se) = mean_se(&col);
        if se > 0.0 {
            max_mean_z = max_mean_z.max(m.abs() / se);
        }
    }
    Ok(OuReport {
        variance,
        variance_se,
        target_variance: 1.0 / params.r,
        autocorr_lag1: cov / variance,
        autocorr_se: cov_se / variance,
        target_autocorr: (-1.0f64).exp(),
        max_mean_z,
    })
}

/// Chain states at the given increasing times.
fn states_on_grid(spec: &BDRateSpec, x0: u64, rng: &mut StreamRng, grid: &[f64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut x = x0;
    let mut t = 0.0;
    let mut next = 0;
    loop {
        let (up, down) = spec.rates_unchecked(x);
        let q = up + down;
        let t_jump = if q > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / q
        } else {
            f64::INFINITY
        };
        while next < grid.len() && grid[next] < t_jump {
            out.push(x);
            next += 1;
        }
        if next == grid.len() {
            return out;
        }
        t = t_jump;
        if rng.random::<f64>() * q < up {
            x += 1;
        } else {
            x -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::h_a_cdf;
    use crate::model::make_params;
    use crate::stats::ks_distance_ecdf;

    fn ecdf_of(spec: &DiffusionSpec, m: usize, seed: u64) -> Ecdf {
        let (t, cens) = sample_hitting_times(spec, m, seed).unwrap();
        Ecdf::with_censored(&t, cens).unwrap()
    }

    #[test]
    fn zero_start() {
        assert_eq!(simulate_hitting_time(&DiffusionSpec::critical(0.0, 0.0), 1).unwrap(), Some(0.0));
    }

    #[test]
    fn invalid_specs() {
        let ou = DiffusionSpec {
            kind: DiffusionKind::Ou { rate: 1.0, diff: 1.0 },
            y0: 0.0,
            dt: 1e-3,
            t_cap: 1.0,
        };
        assert!(simulate_hitting_time(&ou, 1).is_err());
        assert!(simulate_hitting_time(&DiffusionSpec::critical(0.0, f64::INFINITY), 1).is_err());
        assert!(simulate_hitting_time(&DiffusionSpec::critical(0.0, 1.0).with_dt(0.0), 1).is_err());
        assert!(hitting_cdf_numeric(&DiffusionSpec::critical(0.0, 1.0), 999, 1).is_err());
    }

    #[test]
    fn proxy_guard() {
        let s = DiffusionSpec::critical(5.0, f64::INFINITY);
        assert!(infinite_entrance_start(&s, 40.0).is_err());
        assert_eq!(infinite_entrance_start(&s, 60.0).unwrap().y0, 60.0);
        assert!(infinite_entrance_start(&DiffusionSpec::feller(1.0, 1.0), 100.0).is_err());
    }

    #[test]
    fn feller_matches_h_a() {
        for a in [0.0, 1.0, 3.0] {
            let spec = DiffusionSpec::feller(a, 1.0).with_t_cap(50.0);
            let e = ecdf_of(&spec, 20_000, 8);
            let ks = ks_distance_ecdf(&e, |w| h_a_cdf(a, w)).unwrap();
            assert!(ks <= 0.02, "a={a}: ks {ks}");
        }
    }

    #[test]
    fn critical_rarely_censored() {
        let (_, cens) = sample_hitting_times(&DiffusionSpec::critical(0.0, 1.0).with_dt(1e-3), 10_000, 3).unwrap();
        assert!(cens <= 10);
    }

    #[test]
    fn median_increases_with_c() {
        let lo = ecdf_of(&DiffusionSpec::critical(-3.0, 1.0).with_dt(1e-3), 10_000, 4);
        let hi = ecdf_of(&DiffusionSpec::critical(3.0, 1.0).with_dt(1e-3), 10_000, 4);
        assert!(hi.quantile(0.5) > lo.quantile(0.5));
    }

    #[test]
    fn dt_refinement() {
        let ks = refinement_ks(&DiffusionSpec::critical(0.0, 1.0), 10_000, 5).unwrap();
        assert!(ks <= 0.01, "critical ks {ks}");
        let ks = refinement_ks(&DiffusionSpec::feller(1.0, 1.0).with_t_cap(50.0), 10_000, 5).unwrap();
        assert!(ks <= 0.01, "feller ks {ks}");
    }

    #[test]
    fn monotone_in_start_under_common_numbers() {
        for seed in 0..200 {
            let t1 = simulate_hitting_time(&DiffusionSpec::critical(0.0, 0.5).with_dt(1e-3), seed).unwrap();
            let t2 = simulate_hitting_time(&DiffusionSpec::critical(0.0, 2.0).with_dt(1e-3), seed).unwrap();
            assert!(t1.unwrap() <= t2.unwrap_or(f64::INFINITY), "seed {seed}");
        }
    }

    #[test]
    fn proxy_stability() {
        let base = DiffusionSpec::critical(0.0, f64::INFINITY).with_dt(1e-3);
        let e: Vec<Ecdf> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&p| ecdf_of(&infinite_entrance_start(&base, p).unwrap(), 10_000, 6))
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                let ks = ks_two_sample(&e[i], &e[j]).unwrap();
                assert!(ks <= 0.02, "{i},{j}: {ks}");
            }
        }
        let means: Vec<f64> = e.iter().map(|x| mean_se(x.sorted()).0).collect();
        assert!(means[0] <= means[1] && means[1] <= means[2]);
    }

    #[test]
    fn tabulated_cdf_axioms() {
        let tab = hitting_cdf_numeric(&DiffusionSpec::critical(0.0, 1.0).with_dt(1e-3), 2000, 7).unwrap();
        assert_eq!(tab.grid[0], 0.0);
        assert!(tab.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(tab.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(tab.grid.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ou_check_small() {
        let p = make_params(10_000, 1.5).unwrap();
        let rep = ou_fluctuation_check(&p, 20.0, 64, 9).unwrap();
        assert!((rep.variance - 1.0 / 1.5).abs() / (1.0 / 1.5) < 0.1, "{rep:?}");
        assert!((rep.autocorr_lag1 - (-1.0f64).exp()).abs() < 0.1, "{rep:?}");
        assert!(ou_fluctuation_check(&make_params(30, 1.2).unwrap(), 20.0, 4, 1).is_err());
    }
}

//! The logistic chain, its branching-process linearization and the phase
//! trichotomy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|γ|` the instance is treated as exactly critical and
/// downstream code switches to the `γ → 0` limit forms.
pub const CRITICAL_EXACT_EPS: f64 = 1e-12;

/// One `(n, r)` instance of the logistic process plus its derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u64,
    pub r: f64,
    /// `r − 1`
    pub delta: f64,
    /// `1 − r`
    pub gamma: f64,
    /// `√n (r − 1)`
    pub c: f64,
    /// `1 − 1/r`, only for `r > 1`.
    pub x_star: Option<f64>,
    /// `⌊n x*⌋`, only for `r > 1`.
    pub big_x_star: Option<u64>,
    /// `log r + 1/r − 1`, only for `r > 1`.
    pub v_star: Option<f64>,
    pub critical_exact: bool,
}

impl ModelParams {
    pub fn new(n: u64, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "r must be finite and nonnegative, got {r}"
            )));
        }
        let delta = r - 1.0;
        let gamma = -delta;
        let c = (n as f64).sqrt() * delta;
        let (x_star, big_x_star, v_star) = if r > 1.0 {
            let xs = 1.0 - 1.0 / r;
            let big = (n as f64 * xs).floor() as u64;
            (Some(xs), Some(big.min(n)), Some(r.ln() + 1.0 / r - 1.0))
        } else {
            (None, None, None)
        };
        Ok(ModelParams {
            n,
            r,
            delta,
            gamma,
            c,
            x_star,
            big_x_star,
            v_star,
            critical_exact: gamma.abs() < CRITICAL_EXACT_EPS,
        })
    }

    /// `X*`, or a typed error when `r ≤ 1`.
    pub fn require_x_star(&self) -> Result<u64> {
        self.big_x_star
            .ok_or(Error::NotSupercritical { r: self.r })
    }

    #[inline]
    pub fn up_rate(&self, j: u64) -> f64 {
        let jf = j as f64;
        self.r * jf * (1.0 - jf / self.n as f64)
    }

    #[inline]
    pub fn down_rate(&self, j: u64) -> f64 {
        j as f64
    }
}

/// Convenience alias matching the operation name used throughout the docs.
pub fn make_params(n: u64, r: f64) -> Result<ModelParams> {
    ModelParams::new(n, r)
}

/// Which birth–death chain a [`BDRateSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    Logistic,
    Bbp,
    ConditionedUp,
    ConditionedDown,
    PureDeath,
}

/// Transition rates of a nearest-neighbour chain with 0 absorbing.
///
/// The conditioned kinds carry a precomputed rate table on `0..=X*`; build
/// them with [`crate::exact::LogNuTable::conditioned_spec`].
#[derive(Debug, Clone)]
pub struct BDRateSpec {
    pub kind: RateKind,
    pub r: f64,
    /// Largest admissible state; `u64::MAX` for the branching process.
    pub state_space_max: u64,
    pub(crate) table: Option<Arc<Vec<(f64, f64)>>>,
}

impl BDRateSpec {
    pub fn logistic(params: &ModelParams) -> Self {
        BDRateSpec {
            kind: RateKind::Logistic,
            r: params.r,
            state_space_max: params.n,
            table: None,
        }
    }

    pub fn bbp(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!("bbp rate {r}")));
        }
        Ok(BDRateSpec {
            kind: RateKind::Bbp,
            r,
            state_space_max: u64::MAX,
            table: None,
        })
    }

    pub fn pure_death(max_state: u64) -> Self {
        BDRateSpec {
            kind: RateKind::PureDeath,
            r: 0.0,
            state_space_max: max_state,
            table: None,
        }
    }

    pub(crate) fn from_table(kind: RateKind, r: f64, table: Vec<(f64, f64)>) -> Self {
        BDRateSpec {
            kind,
            r,
            state_space_max: table.len() as u64 - 1,
            table: Some(Arc::new(table)),
        }
    }

    /// `(q₊(j), q₋(j))` with range checking.
    pub fn rates(&self, j: u64) -> Result<(f64, f64)> {
        if j > self.state_space_max {
            return Err(Error::StateOutOfRange {
                state: j,
                max: self.state_space_max,
            });
        }
        Ok(self.rates_unchecked(j))
    }

    #[inline]
    pub(crate) fn rates_unchecked(&self, j: u64) -> (f64, f64) {
        if j == 0 {
            return (0.0, 0.0);
        }
        let jf = j as f64;
        match self.kind {
            RateKind::Logistic => {
                let n = self.state_space_max as f64;
                (self.r * jf * (1.0 - jf / n), jf)
            }
            RateKind::Bbp => (self.r * jf, jf),
            RateKind::PureDeath => (0.0, jf),
            RateKind::ConditionedUp | RateKind::ConditionedDown => {
                self.table.as_ref().expect("conditioned spec without table")[j as usize]
            }
        }
    }
}

/// Free-function form of [`BDRateSpec::rates`].
pub fn rates(spec: &BDRateSpec, j: u64) -> Result<(f64, f64)> {
    spec.rates(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub c_value: f64,
}

/// Finite-n phase proxy: compare `c = √n (r−1)` against `±cutoff`.
pub fn classify_phase(params: &ModelParams, cutoff: f64) -> Phase {
    debug_assert!(cutoff > 0.0);
    let c = params.c;
    let kind = if c >= cutoff {
        PhaseKind::Supercritical
    } else if c <= -cutoff {
        PhaseKind::Subcritical
    } else {
        PhaseKind::Critical
    };
    Phase { kind, c_value: c }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_one_is_critical_without_star_quantities() {
        let p = make_params(100, 1.0).unwrap();
        assert_eq!(p.delta, 0.0);
        assert_eq!(p.c, 0.0);
        assert!(p.x_star.is_none() && p.big_x_star.is_none() && p.v_star.is_none());
        assert!(p.critical_exact);
        assert!(matches!(
            p.require_x_star(),
            Err(Error::NotSupercritical { .. })
        ));
    }

    #[test]
    fn star_quantities_for_r_two() {
        let p = make_params(10, 2.0).unwrap();
        assert_eq!(p.x_star, Some(0.5));
        assert_eq!(p.big_x_star, Some(5));
    }

    #[test]
    fn v_star_value() {
        let p = make_params(1000, 1.5).unwrap();
        let expected = 1.5f64.ln() + 2.0 / 3.0 - 1.0;
        assert!((p.v_star.unwrap() - expected).abs() < 1e-15);
        assert!((p.v_star.unwrap() - 0.0721318).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_params(0, 1.0).is_err());
        assert!(make_params(10, -0.1).is_err());
        assert!(make_params(10, f64::NAN).is_err());
        assert!(make_params(10, f64::INFINITY).is_err());
    }

    #[test]
    fn delta_gamma_c_identities() {
        for &(n, r) in &[(7u64, 0.3), (1000, 1.7), (12345, 1.0001)] {
            let p = make_params(n, r).unwrap();
            assert_eq!(p.delta, -p.gamma);
            assert_eq!(p.c, (n as f64).sqrt() * p.delta);
        }
    }

    #[test]
    fn logistic_rates_examples() {
        let p = make_params(10, 2.0).unwrap();
        let spec = BDRateSpec::logistic(&p);
        assert_eq!(spec.rates(5).unwrap(), (5.0, 5.0));
        assert_eq!(spec.rates(0).unwrap(), (0.0, 0.0));
        assert_eq!(spec.rates(10).unwrap(), (0.0, 10.0));
        assert!(matches!(
            spec.rates(11),
            Err(Error::StateOutOfRange { state: 11, max: 10 })
        ));
        let bbp = BDRateSpec::bbp(2.0).unwrap();
        assert_eq!(bbp.rates(3).unwrap(), (6.0, 3.0));
        assert_eq!(bbp.rates(0).unwrap(), (0.0, 0.0));
        assert_eq!(BDRateSpec::pure_death(10).rates(4).unwrap(), (0.0, 4.0));
    }

    #[test]
    fn phase_examples() {
        let crit = classify_phase(&make_params(100, 1.0).unwrap(), 3.0);
        assert_eq!(crit.kind, PhaseKind::Critical);
        assert_eq!(crit.c_value, 0.0);
        let sup = classify_phase(&make_params(10_000, 1.2).unwrap(), 3.0);
        assert_eq!(sup.kind, PhaseKind::Supercritical);
        assert!((sup.c_value - 20.0).abs() < 1e-9);
        let sub = classify_phase(&make_params(10_000, 0.9).unwrap(), 3.0);
        assert_eq!(sub.kind, PhaseKind::Subcritical);
        assert!((sub.c_value + 10.0).abs() < 1e-9);
    }

    #[test]
    fn up_rate_at_x_star_balances_down_rate() {
        for &(n, r) in &[(10u64, 2.0), (1000, 1.5), (777, 3.3)] {
            let p = make_params(n, r).unwrap();
            let xs = p.big_x_star.unwrap();
            let spec = BDRateSpec::logistic(&p);
            let (up, down) = spec.rates(xs).unwrap();
            assert!((up - down).abs() <= r);
        }
    }

    proptest::proptest! {
        #[test]
        fn logistic_rates_are_a_parabola(n in 2u64..500, r in 0.0f64..5.0) {
            let p = make_params(n, r).unwrap();
            let spec = BDRateSpec::logistic(&p);
            let ups: Vec<f64> = (0..=n).map(|j| spec.rates(j).unwrap().0).collect();
            for (j, &u) in ups.iter().enumerate() {
                proptest::prop_assert!(u.is_finite() && u >= 0.0);
                let d = spec.rates(j as u64).unwrap().1;
                proptest::prop_assert!(d >= 0.0);
            }
            let argmax = ups
                .iter()
                .enumerate()
                .fold((0usize, f64::MIN), |acc, (j, &u)| if u > acc.1 { (j, u) } else { acc })
                .0;
            if r > 0.0 {
                proptest::prop_assert!((argmax as f64 - n as f64 / 2.0).abs() <= 1.0);
            }
        }

        #[test]
        fn make_params_is_deterministic(n in 1u64..1_000_000, r in 0.0f64..10.0) {
            let a = make_params(n, r).unwrap();
            let b = make_params(n, r).unwrap();
            proptest::prop_assert_eq!(a.c.to_bits(), b.c.to_bits());
            proptest::prop_assert_eq!(a.v_star.map(f64::to_bits), b.v_star.map(f64::to_bits));
            if r > 1.0 {
                let xs = a.x_star.unwrap();
                proptest::prop_assert!(xs > 0.0 && xs < 1.0);
                proptest::prop_assert!(a.big_x_star.unwrap() <= n);
                proptest::prop_assert!(a.v_star.unwrap() > 0.0);
            }
        }
    }
}

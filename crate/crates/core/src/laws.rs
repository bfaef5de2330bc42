//! Closed-form rescaled limit laws of the extinction time and the dispatcher
//! that picks one for a finite instance.
//!
//! A [`LimitLaw`] states `P((τ − shift)/scale ≤ w) ≈ F(w)`.

use serde::{Deserialize, Serialize};

use crate::diffusion::{self, DiffusionSpec};
use crate::error::{Error, Result};
use crate::exact::build_log_nu;
use crate::model::{classify_phase, ModelParams, PhaseKind};
use crate::numerics::{bisect, x_over_expm1};
use crate::rng::DEFAULT_SEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    NonnegativeReals,
    AllReals,
}

/// Piecewise-linear CDF through `(grid[i], values[i])`, constant past the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCdf {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedCdf {
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x < g[0] {
            return 0.0;
        }
        let k = g.partition_point(|&v| v <= x);
        if k >= g.len() {
            return *self.values.last().unwrap();
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        if x1 <= x0 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// The distribution function `F` of a [`LimitLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LawCdf {
    /// Extinction-time CDF of the branching process with birth rate `r`,
    /// started from `z0`.
    Bbp { r: f64, z0: u64 },
    /// `H_a`, the Feller-diffusion hitting-time law.
    Ha { a: f64 },
    /// Standard Gumbel.
    Gumbel,
    /// Unit exponential.
    Exponential,
    Tabulated(TabulatedCdf),
    /// Weighted mixture of laws, each evaluated in raw time (the enclosing
    /// law then has unit scale and zero shift).
    Mixture(Vec<(f64, LimitLaw)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub scale_s: f64,
    /// `log scale_s`, kept separately because metastable scales overflow.
    pub log_scale_s: f64,
    pub shift_t: f64,
    pub cdf: LawCdf,
    pub case_tag: String,
    pub support: Support,
}

impl LimitLaw {
    pub fn new(scale: f64, shift: f64, cdf: LawCdf, tag: impl Into<String>) -> Self {
        let support = match cdf {
            LawCdf::Gumbel => Support::AllReals,
            _ => Support::NonnegativeReals,
        };
        LimitLaw {
            scale_s: scale,
            log_scale_s: scale.ln(),
            shift_t: shift,
            cdf,
            case_tag: tag.into(),
            support,
        }
    }

    fn with_log_scale(log_scale: f64, cdf: LawCdf, tag: impl Into<String>) -> Self {
        let mut law = LimitLaw::new(log_scale.exp(), 0.0, cdf, tag);
        law.log_scale_s = log_scale;
        law
    }

    /// `F(w)` in rescaled units.
    pub fn cdf(&self, w: f64) -> f64 {
        if w == f64::INFINITY {
            return 1.0;
        }
        match &self.cdf {
            LawCdf::Bbp { r, z0 } => {
                if w <= 0.0 {
                    0.0
                } else {
                    bbp_extinction_cdf(*r, *z0, w).unwrap_or(0.0)
                }
            }
            LawCdf::Ha { a } => h_a_cdf(*a, w.max(0.0)),
            LawCdf::Gumbel => gumbel_cdf(w),
            LawCdf::Exponential => {
                if w <= 0.0 {
                    0.0
                } else {
                    -(-w).exp_m1()
                }
            }
            LawCdf::Tabulated(t) => t.eval(w),
            LawCdf::Mixture(parts) => parts.iter().map(|(p, law)| p * law.raw_cdf(w)).sum(),
        }
    }

    /// Rescale a raw extinction time: `(τ − shift)/scale`.
    #[inline]
    pub fn rescale(&self, tau: f64) -> f64 {
        if tau.is_infinite() {
            return tau;
        }
        (tau - self.shift_t) / self.scale_s
    }

    /// Inverse of [`LimitLaw::rescale`].
    #[inline]
    pub fn unscale(&self, w: f64) -> f64 {
        w * self.scale_s + self.shift_t
    }

    /// Predicted `P(τ ≤ tau)`.
    pub fn raw_cdf(&self, tau: f64) -> f64 {
        self.cdf(self.rescale(tau))
    }

    /// Numeric `p`-quantile of `F` in rescaled units.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = match self.support {
            Support::AllReals => (-1.0, 1.0),
            Support::NonnegativeReals => (0.0, 1.0),
        };
        while self.cdf(hi) < p && hi < 1e300 {
            hi *= 2.0;
        }
        if self.support == Support::AllReals {
            while self.cdf(lo) > p && lo > -1e300 {
                lo *= 2.0;
            }
        }
        bisect(|w| self.cdf(w), p, lo, hi)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// `P(τ ≤ t)` for the branching process with birth rate `r` and `z0`
/// initial individuals: `ρ_t^{z0}` with `ρ_t⁻¹ = 1 + γ/(e^{γt} − 1)`,
/// `γ = 1 − r`, and `ρ_t = t/(1+t)` at `γ = 0`.
pub fn bbp_extinction_cdf(r: f64, z0: u64, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::InvalidParameter(format!("time must be ≥ 0, got {t}")));
    }
    if z0 == 0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t.is_infinite() {
        // ρ_∞ = min(1, 1/r)
        return Ok(if r <= 1.0 { 1.0 } else { r.powf(-(z0 as f64)) });
    }
    let gamma = 1.0 - r;
    // γ/(e^{γt} − 1) = x_over_expm1(γt)/t
    let u = x_over_expm1(gamma * t) / t;
    Ok((-(z0 as f64) * u.ln_1p()).exp())
}

/// `P(H_a ≤ w)`: `e^{−1/w}` at `a = 0`, `e^{−a/(e^{aw} − 1)}` otherwise.
pub fn h_a_cdf(a: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w.is_infinite() {
        return 1.0;
    }
    (-x_over_expm1(a * w) / w).exp()
}

pub fn gumbel_cdf(w: f64) -> f64 {
    (-(-w).exp()).exp()
}

/// Centering of the subcritical Gumbel law, `g(x) = log(γ²n) − log(r + γn/x)`.
pub fn subcritical_shift_g(params: &ModelParams, x0: u64) -> Result<f64> {
    let gamma = params.gamma;
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "subcritical shift needs γ > 0, got {gamma}"
        )));
    }
    if x0 == 0 {
        return Err(Error::InvalidParameter("X₀ must be positive".into()));
    }
    let n = params.n as f64;
    Ok((gamma * gamma * n).ln() - (params.r + gamma * n / x0 as f64).ln())
}

/// `P(τ ≤ t | rapid extinction)` from `x0`, in raw time.
///
/// For `δ < small_delta` this is `H_a` with `a = δ X₀` and time in units of
/// `X₀`; otherwise it is the branching-process law with birth rate `1/r`
/// run at speed `r`.
pub fn rapid_extinction_cdf(params: &ModelParams, x0: u64, t: f64, small_delta: f64) -> Result<f64> {
    let delta = params.delta;
    if delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rapid extinction law needs δ > 0, got {delta}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be ≥ 0, got {t}")));
    }
    if x0 == 0 {
        return Ok(1.0);
    }
    Ok(rapid_law(params, x0, small_delta).raw_cdf(t))
}

fn rapid_law(params: &ModelParams, x0: u64, small_delta: f64) -> LimitLaw {
    let delta = params.delta;
    if delta < small_delta {
        LimitLaw::new(
            x0 as f64,
            0.0,
            LawCdf::Ha {
                a: delta * x0 as f64,
            },
            "Thm5-1a",
        )
    } else {
        LimitLaw::new(
            1.0 / params.r,
            0.0,
            LawCdf::Bbp {
                r: 1.0 / params.r,
                z0: x0,
            },
            "Thm5-1b",
        )
    }
}

/// `log E*` from `E* ∼ √(2π/n) (r/δ²) e^{nV*}`.
pub fn e_star_asymptotic(params: &ModelParams) -> Result<f64> {
    let v_star = params.v_star.ok_or(Error::NotSupercritical { r: params.r })?;
    let n = params.n as f64;
    Ok(0.5 * (2.0 * std::f64::consts::PI / n).ln() + params.r.ln() - 2.0 * params.delta.ln()
        + n * v_star)
}

/// `log p*` from `p* ∼ (δ/2√r) e^{−nV*}`.
pub fn p_star_asymptotic(params: &ModelParams) -> Result<f64> {
    let v_star = params.v_star.ok_or(Error::NotSupercritical { r: params.r })?;
    Ok(params.delta.ln() - (2.0 * params.r.sqrt()).ln() - params.n as f64 * v_star)
}

/// `log L*` from `L* ∼ (1/(√n δ)) √(πr/2)`.
pub fn l_star_asymptotic(params: &ModelParams) -> Result<f64> {
    if params.r <= 1.0 {
        return Err(Error::NotSupercritical { r: params.r });
    }
    Ok(-((params.n as f64).sqrt() * params.delta).ln()
        + 0.5 * (std::f64::consts::PI * params.r / 2.0).ln())
}

/// Finite-n proxies for the limit conditions of the case tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchPolicy {
    /// `|c|` at or beyond which the instance leaves the critical window.
    pub phase_cutoff: f64,
    /// `γX₀` (or `δX₀`) at or beyond which it counts as unbounded.
    pub gamma_x0_cutoff: f64,
    /// `δ` below which the supercritical rapid-extinction law uses the small-δ form.
    pub small_delta: f64,
    /// `X₀` below which the initial value counts as constant.
    pub x0_constant: u64,
    /// `X₀/√n` below which a critical instance counts as `X₀ = o(√n)`.
    pub critical_small_ratio: f64,
    /// Parameters of the diffusion sample backing the critical-window law.
    pub diffusion_replicates: usize,
    pub diffusion_dt: f64,
    pub diffusion_seed: u64,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        DispatchPolicy {
            phase_cutoff: 3.0,
            gamma_x0_cutoff: 5.0,
            small_delta: 0.1,
            x0_constant: 10,
            critical_small_ratio: 0.1,
            diffusion_replicates: 10_000,
            diffusion_dt: diffusion::DEFAULT_DT_CRITICAL,
            diffusion_seed: DEFAULT_SEED,
        }
    }
}

/// Select the limit law that applies to `(params, x0)`.
pub fn predict_law(params: &ModelParams, x0: u64, policy: &DispatchPolicy) -> Result<LimitLaw> {
    if x0 == 0 || x0 > params.n {
        return Err(Error::StateOutOfRange {
            state: x0,
            max: params.n,
        });
    }
    let phase = classify_phase(params, policy.phase_cutoff);
    let x0f = x0 as f64;
    let nf = params.n as f64;
    match phase.kind {
        PhaseKind::Subcritical => {
            let gamma = params.gamma;
            let a = gamma * x0f;
            if x0 < policy.x0_constant {
                Ok(LimitLaw::new(
                    1.0,
                    0.0,
                    LawCdf::Bbp { r: params.r, z0: x0 },
                    "Thm2-sub-(a)",
                ))
            } else if a < policy.gamma_x0_cutoff {
                Ok(LimitLaw::new(x0f, 0.0, LawCdf::Ha { a }, "Thm2-sub-(b)"))
            } else {
                let margin = x0f * a.ln() / (gamma * nf / 10.0);
                if margin < 1.0 {
                    Ok(LimitLaw::new(
                        1.0 / gamma,
                        a.ln() / gamma,
                        LawCdf::Gumbel,
                        format!("Thm2-sub-(c)[margin={margin:.3}]"),
                    ))
                } else {
                    let g = subcritical_shift_g(params, x0)?;
                    Ok(LimitLaw::new(1.0 / gamma, g / gamma, LawCdf::Gumbel, "Thm3"))
                }
            }
        }
        PhaseKind::Critical => {
            if x0 < policy.x0_constant {
                Ok(LimitLaw::new(
                    1.0,
                    0.0,
                    LawCdf::Bbp { r: 1.0, z0: x0 },
                    "Thm2-crit-(a)",
                ))
            } else if x0f / nf.sqrt() < policy.critical_small_ratio {
                Ok(LimitLaw::new(x0f, 0.0, LawCdf::Ha { a: 0.0 }, "Thm2-crit-(b)"))
            } else {
                let spec = DiffusionSpec::critical(phase.c_value, x0f / nf.sqrt())
                    .with_dt(policy.diffusion_dt);
                let tab = diffusion::hitting_cdf_numeric(
                    &spec,
                    policy.diffusion_replicates,
                    policy.diffusion_seed,
                )?;
                Ok(LimitLaw::new(nf.sqrt(), 0.0, LawCdf::Tabulated(tab), "Thm4"))
            }
        }
        PhaseKind::Supercritical => supercritical_law(params, x0, policy),
    }
}

fn supercritical_law(params: &ModelParams, x0: u64, policy: &DispatchPolicy) -> Result<LimitLaw> {
    let delta = params.delta;
    let a = delta * x0 as f64;
    let table = build_log_nu(params)?;
    let xs = params.big_x_star.unwrap_or(0);
    let (log_e_star, h_minus) = if xs >= 1 {
        (
            table.log_mean_extinction_all()[xs as usize],
            table.log_h_minus(x0)?.exp(),
        )
    } else {
        let rapid_weight = if delta < policy.small_delta {
            (-a).exp()
        } else {
            params.r.powf(-(x0 as f64))
        };
        (e_star_asymptotic(params)?, rapid_weight)
    };
    let metastable = LimitLaw::with_log_scale(log_e_star, LawCdf::Exponential, "Thm5-2");
    if a >= policy.gamma_x0_cutoff || h_minus == 0.0 {
        return Ok(metastable);
    }
    let rapid = rapid_law(params, x0, policy.small_delta);
    let tag = rapid.case_tag.clone();
    Ok(LimitLaw::new(
        1.0,
        0.0,
        LawCdf::Mixture(vec![(h_minus, rapid), (1.0 - h_minus, metastable)]),
        tag,
    ))
}

/// Probability that the chain from `x0` hits 0 before `X*`, exact when the
/// window exists.
pub fn rapid_extinction_probability(params: &ModelParams, x0: u64) -> Result<f64> {
    let table = build_log_nu(params)?;
    Ok(table.log_h_minus(x0)?.exp())
}

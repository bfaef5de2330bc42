//! Case-by-case validation: sample extinction times along a sequence
//! of instances, rescale them with the predicted law and measure the KS
//! distance to the limit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffusion::{self, DiffusionSpec};
use crate::error::{Error, Result};
use crate::exact::{build_log_nu, sojourn_expectation};
use crate::laws::{LawCdf, LimitLaw};
use crate::model::{classify_phase, make_params, BDRateSpec, PhaseKind};
use crate::rng::derive_seed;
use crate::sim::{self, Conditioning, ExtinctionSamples};
use crate::stats::{ks_critical, ks_distance_ecdf, ks_two_sample, mean_se, Ecdf};

/// Censored fraction above which a report is inconclusive.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;
/// Time cap for unconditioned logistic runs.
const LOGISTIC_T_CAP: f64 = 1e6;
/// Time cap for the branching process. At `r = 1` the expected number of
/// events grows linearly with the cap while `P(τ > t) ≈ Z₀/t`, so 500 keeps
/// censoring near 0.6% for `Z₀ = 3` and runs short.
const BBP_T_CAP: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Limit-law cases with a validation preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    /// Critical branching process, `(1 + 1/t)^{−Z₀}`.
    Thm1_1a,
    /// Subcritical branching process at fixed `r < 1`.
    Thm1_1b,
    /// Logistic chain, fixed `r < 1`, constant `X₀`.
    Thm2Sub,
    /// Logistic chain at `r = 1`, constant `X₀`.
    Thm2Crit,
    /// Subcritical Gumbel limit.
    Thm3,
    /// Critical window, `X₀ ∝ √n`, against the diffusion hitting time.
    Thm4,
    /// Rapid extinction with `δ → 0`, law `H_a`.
    Thm5_1a,
    /// Rapid extinction with fixed `δ`.
    Thm5_1b,
    /// Exponential extinction from the metastable state.
    Thm5_2,
}

impl CaseId {
    pub const ALL: [CaseId; 9] = [
        CaseId::Thm1_1a,
        CaseId::Thm1_1b,
        CaseId::Thm2Sub,
        CaseId::Thm2Crit,
        CaseId::Thm3,
        CaseId::Thm4,
        CaseId::Thm5_1a,
        CaseId::Thm5_1b,
        CaseId::Thm5_2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Thm1_1a => "thm1-1a",
            CaseId::Thm1_1b => "thm1-1b",
            CaseId::Thm2Sub => "thm2-sub",
            CaseId::Thm2Crit => "thm2-crit",
            CaseId::Thm3 => "thm3",
            CaseId::Thm4 => "thm4",
            CaseId::Thm5_1a => "thm5-1a",
            CaseId::Thm5_1b => "thm5-1b",
            CaseId::Thm5_2 => "thm5-2",
        }
    }

    fn is_bbp(self) -> bool {
        matches!(self, CaseId::Thm1_1a | CaseId::Thm1_1b)
    }

    /// Laws that hold exactly at finite size, so only Monte Carlo error
    /// remains.
    pub fn is_exact(self) -> bool {
        self.is_bbp()
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// One `(n, r, X₀)` point of a sequence. For the branching-process cases
/// `n` is ignored and reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: u64,
    pub r: f64,
    pub x0: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub n: u64,
    pub r: f64,
    pub x0: u64,
    pub replicates: usize,
    pub ks: f64,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub case: String,
    pub instances: Vec<InstanceResult>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Pass iff the last instance meets `tolerance` and its KS is no larger
/// than the previous one; inconclusive when any instance censored more
/// than 1% of its runs.
pub fn verdict_for(instances: &[InstanceResult], tolerance: f64) -> Verdict {
    if instances
        .iter()
        .any(|i| i.censored as f64 > MAX_CENSORED_FRACTION * i.replicates as f64)
    {
        return Verdict::Inconclusive;
    }
    let Some(last) = instances.last() else {
        return Verdict::Inconclusive;
    };
    let trend = match instances.len() {
        0 | 1 => true,
        k => last.ks <= instances[k - 2].ks,
    };
    if last.ks <= tolerance && trend {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn ceil_pow(n: u64, p: f64) -> u64 {
    let v = (n as f64).powf(p);
    // n^p lands a hair above an integer for exact powers of ten
    let rounded = v.round();
    if (v - rounded).abs() <= 1e-9 * v {
        rounded as u64
    } else {
        v.ceil() as u64
    }
}

/// Built-in sequence for a case.
pub fn preset_sequence(case: CaseId) -> Vec<Instance> {
    match case {
        CaseId::Thm1_1a => vec![Instance { n: 0, r: 1.0, x0: 3 }],
        CaseId::Thm1_1b => vec![Instance { n: 0, r: 0.5, x0: 3 }],
        CaseId::Thm2Sub => [1_000, 10_000]
            .map(|n| Instance { n, r: 0.5, x0: 3 })
            .to_vec(),
        CaseId::Thm2Crit => [1_000, 10_000]
            .map(|n| Instance { n, r: 1.0, x0: 3 })
            .to_vec(),
        CaseId::Thm3 => [10_000u64, 100_000]
            .map(|n| Instance {
                n,
                r: 1.0 - (n as f64).powf(-0.25),
                x0: ceil_pow(n, 0.4),
            })
            .to_vec(),
        CaseId::Thm4 => [1_000u64, 10_000]
            .map(|n| Instance {
                n,
                r: 1.0,
                x0: (n as f64).sqrt().round() as u64,
            })
            .to_vec(),
        CaseId::Thm5_1a => [10_000u64, 100_000]
            .map(|n| Instance {
                n,
                r: 1.0 + 2.0 * (n as f64).powf(-0.3),
                x0: ceil_pow(n, 0.3),
            })
            .to_vec(),
        CaseId::Thm5_1b => vec![Instance {
            n: 10_000,
            r: 1.5,
            x0: 2,
        }],
        CaseId::Thm5_2 => [30u64, 60]
            .map(|n| {
                let p = make_params(n, 1.8).unwrap();
                Instance {
                    n,
                    r: 1.8,
                    x0: p.big_x_star.unwrap(),
                }
            })
            .to_vec(),
    }
}

pub fn preset_replicates(case: CaseId) -> usize {
    match case {
        CaseId::Thm1_1a | CaseId::Thm1_1b => 100_000,
        CaseId::Thm3 => 20_000,
        _ => 10_000,
    }
}

/// Default tolerance: three times the 5% KS quantile for exact laws, 0.05
/// for asymptotic laws and 0.1 for the metastable exponential.
pub fn default_tolerance(case: CaseId, replicates: usize) -> f64 {
    if case.is_exact() {
        3.0 * ks_critical(replicates, 0.05)
    } else if case == CaseId::Thm5_2 {
        0.1
    } else {
        0.05
    }
}

fn violation(case: CaseId, reason: impl Into<String>) -> Error {
    Error::RegimeViolation {
        case: case.as_str().into(),
        reason: reason.into(),
    }
}

/// Check that `sequence` is admissible for `case`; nothing is simulated.
pub fn check_regime(case: CaseId, sequence: &[Instance]) -> Result<()> {
    if sequence.is_empty() {
        return Err(violation(case, "empty sequence"));
    }
    if !case.is_bbp() && sequence.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(violation(case, "n must increase along the sequence"));
    }
    for inst in sequence {
        if inst.x0 == 0 {
            return Err(violation(case, "X₀ must be positive"));
        }
        if case.is_bbp() {
            if !(inst.r >= 0.0) {
                return Err(violation(case, format!("bad r = {}", inst.r)));
            }
            continue;
        }
        if inst.x0 > inst.n {
            return Err(violation(case, format!("X₀ = {} exceeds n = {}", inst.x0, inst.n)));
        }
        let p = make_params(inst.n, inst.r)?;
        let phase = classify_phase(&p, 3.0).kind;
        let gamma = p.gamma;
        let x0 = inst.x0 as f64;
        let n = inst.n as f64;
        match case {
            CaseId::Thm2Sub | CaseId::Thm3 => {
                if phase != PhaseKind::Subcritical {
                    return Err(violation(case, format!("n = {} is not subcritical (c = {:.3})", inst.n, p.c)));
                }
                let a = gamma * x0;
                if a > 1.0 && x0 * a.ln() > gamma * n {
                    return Err(violation(
                        case,
                        format!("X₀ log(γX₀) = {:.3} exceeds γn = {:.3}", x0 * a.ln(), gamma * n),
                    ));
                }
            }
            CaseId::Thm2Crit | CaseId::Thm4 => {
                if phase != PhaseKind::Critical {
                    return Err(violation(case, format!("n = {} is outside the critical window (c = {:.3})", inst.n, p.c)));
                }
            }
            CaseId::Thm5_1a | CaseId::Thm5_1b | CaseId::Thm5_2 => {
                if phase != PhaseKind::Supercritical {
                    return Err(violation(case, format!("n = {} is not supercritical (c = {:.3})", inst.n, p.c)));
                }
                let xs = p.big_x_star.unwrap();
                if case == CaseId::Thm5_2 {
                    if xs < 2 || inst.x0 > xs {
                        return Err(violation(case, format!("X₀ = {} must be in [1, X* = {xs}]", inst.x0)));
                    }
                    let nv = n * p.v_star.unwrap();
                    if nv > 12.0 {
                        return Err(violation(case, format!("nV* = {nv:.2} makes unconditioned runs infeasible")));
                    }
                } else if inst.x0 >= xs {
                    return Err(violation(case, format!("X₀ = {} must lie below X* = {xs}", inst.x0)));
                }
            }
            CaseId::Thm1_1a | CaseId::Thm1_1b => unreachable!(),
        }
    }
    match case {
        CaseId::Thm3 => {
            let roots: Vec<f64> = sequence
                .iter()
                .map(|i| (i.n as f64).sqrt() * (1.0 - i.r))
                .collect();
            if roots.windows(2).any(|w| w[1] <= w[0]) {
                return Err(violation(case, "√n·γ must increase along the sequence"));
            }
            let gx: Vec<f64> = sequence.iter().map(|i| (1.0 - i.r) * i.x0 as f64).collect();
            if gx.windows(2).any(|w| w[1] <= w[0]) {
                return Err(violation(case, "γX₀ must increase along the sequence"));
            }
        }
        CaseId::Thm4 => {
            let ratio: Vec<f64> = sequence
                .iter()
                .map(|i| i.x0 as f64 / (i.n as f64).sqrt())
                .collect();
            if ratio.iter().any(|&v| !(0.1..=10.0).contains(&v)) {
                return Err(violation(case, "X₀/√n must stay of order one"));
            }
        }
        _ => {}
    }
    Ok(())
}

/// The law a case compares against at one instance.
pub fn law_for_case(case: CaseId, inst: &Instance) -> Result<LimitLaw> {
    let x0 = inst.x0;
    Ok(match case {
        CaseId::Thm1_1a | CaseId::Thm1_1b | CaseId::Thm2Sub | CaseId::Thm2Crit => LimitLaw::new(
            1.0,
            0.0,
            LawCdf::Bbp { r: inst.r, z0: x0 },
            case.as_str(),
        ),
        CaseId::Thm3 => {
            let p = make_params(inst.n, inst.r)?;
            let g = crate::laws::subcritical_shift_g(&p, x0)?;
            LimitLaw::new(1.0 / p.gamma, g / p.gamma, LawCdf::Gumbel, case.as_str())
        }
        CaseId::Thm4 => {
            // the reference is a diffusion sample; the law carries the scale
            LimitLaw::new(
                (inst.n as f64).sqrt(),
                0.0,
                LawCdf::Tabulated(crate::laws::TabulatedCdf {
                    grid: Vec::new(),
                    values: Vec::new(),
                }),
                case.as_str(),
            )
        }
        CaseId::Thm5_1a => {
            let p = make_params(inst.n, inst.r)?;
            LimitLaw::new(
                x0 as f64,
                0.0,
                LawCdf::Ha {
                    a: p.delta * x0 as f64,
                },
                case.as_str(),
            )
        }
        CaseId::Thm5_1b => LimitLaw::new(
            1.0 / inst.r,
            0.0,
            LawCdf::Bbp {
                r: 1.0 / inst.r,
                z0: x0,
            },
            case.as_str(),
        ),
        CaseId::Thm5_2 => {
            let p = make_params(inst.n, inst.r)?;
            let log_e = sojourn_expectation(&build_log_nu(&p)?)?;
            let mut law = LimitLaw::new(log_e.exp(), 0.0, LawCdf::Exponential, case.as_str());
            law.log_scale_s = log_e;
            law
        }
    })
}

/// Raw samples of one instance.
///
/// `t_cap` overrides the censoring horizon of unconditioned runs.
pub fn sample_instance(
    case: CaseId,
    inst: &Instance,
    replicates: usize,
    seed: u64,
    t_cap: Option<f64>,
) -> Result<ExtinctionSamples> {
    match case {
        CaseId::Thm1_1a | CaseId::Thm1_1b => sim::sample_extinction(
            &BDRateSpec::bbp(inst.r)?,
            inst.x0,
            replicates,
            seed,
            t_cap.unwrap_or(BBP_T_CAP),
        ),
        CaseId::Thm5_1a | CaseId::Thm5_1b => sim::sample_conditioned(
            &make_params(inst.n, inst.r)?,
            inst.x0,
            Conditioning::HitsZeroFirst,
            replicates,
            seed,
        ),
        _ => {
            let p = make_params(inst.n, inst.r)?;
            let cap = t_cap.unwrap_or(LOGISTIC_T_CAP);
            sim::sample_extinction(&BDRateSpec::logistic(&p), inst.x0, replicates, seed, cap)
        }
    }
}

/// Diffusion reference for the critical-window case: hitting times of
/// `dY = Y(c − Y)dt + √(2Y)dB` from `X₀/√n`.
pub fn diffusion_reference(inst: &Instance, replicates: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    let p = make_params(inst.n, inst.r)?;
    let spec = DiffusionSpec::critical(p.c, inst.x0 as f64 / (inst.n as f64).sqrt());
    diffusion::sample_hitting_times(&spec, replicates, seed)
}

/// Per-instance outcome with the samples that produced it.
pub struct InstanceRun {
    pub result: InstanceResult,
    pub samples: ExtinctionSamples,
    pub law: LimitLaw,
    /// Reference sample (critical-window case only), in rescaled units.
    pub reference: Option<Vec<f64>>,
}

/// Instance `k` of a study uses master seed `derive_seed(seed, k)`; the
/// diffusion reference uses `derive_seed(seed, 1000 + k)`.
pub fn run_instance(
    case: CaseId,
    inst: &Instance,
    k: usize,
    replicates: usize,
    seed: u64,
    t_cap: Option<f64>,
) -> Result<InstanceRun> {
    let law = law_for_case(case, inst)?;
    let samples = sample_instance(case, inst, replicates, derive_seed(seed, k as u64), t_cap)?;
    let censored = samples.meta.censored_count;
    let scaled: Vec<f64> = samples.values.iter().map(|&t| law.rescale(t)).collect();
    let (ks, reference) = if scaled.is_empty() {
        (1.0, None)
    } else {
        let ecdf = Ecdf::with_censored(&scaled, censored)?;
        if case == CaseId::Thm4 {
            let (refs, ref_cens) = diffusion_reference(inst, replicates, derive_seed(seed, 1000 + k as u64))?;
            let ks = ks_two_sample(&ecdf, &Ecdf::with_censored(&refs, ref_cens)?)?;
            (ks, Some(refs))
        } else {
            (ks_distance_ecdf(&ecdf, |w| law.cdf(w))?, None)
        }
    };
    Ok(InstanceRun {
        result: InstanceResult {
            n: if case.is_bbp() { 0 } else { inst.n },
            r: inst.r,
            x0: inst.x0,
            replicates,
            ks,
            censored,
        },
        samples,
        law,
        reference,
    })
}

/// Validate `case` along `sequence`, keeping the per-instance samples.
pub fn validate_theorem_runs(
    case: CaseId,
    sequence: &[Instance],
    replicates: usize,
    seed: u64,
    tolerance: f64,
    t_cap: Option<f64>,
) -> Result<(ValidationReport, Vec<InstanceRun>)> {
    check_regime(case, sequence)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be ≥ 1".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tolerance}")));
    }
    let runs = sequence
        .iter()
        .enumerate()
        .map(|(k, inst)| run_instance(case, inst, k, replicates, seed, t_cap))
        .collect::<Result<Vec<_>>>()?;
    let instances: Vec<InstanceResult> = runs.iter().map(|r| r.result.clone()).collect();
    let verdict = verdict_for(&instances, tolerance);
    Ok((
        ValidationReport {
            case: case.as_str().into(),
            instances,
            tolerance,
            verdict,
            seed,
        },
        runs,
    ))
}

pub fn validate_theorem(
    case: CaseId,
    sequence: &[Instance],
    replicates: usize,
    seed: u64,
    tolerance: f64,
) -> Result<ValidationReport> {
    validate_theorem_runs(case, sequence, replicates, seed, tolerance, None).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: u64,
    pub r: f64,
    pub x0: u64,
    pub ks: f64,
    pub sample_mean: f64,
    pub predicted_median: f64,
}

/// One row per instance: KS, raw sample mean and the predicted median in
/// raw time units.
pub fn convergence_study(
    case: CaseId,
    sequence: &[Instance],
    replicates: usize,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    let (_, runs) = validate_theorem_runs(case, sequence, replicates, seed, 1.0, None)?;
    Ok(runs
        .iter()
        .map(|run| {
            let sample_mean = if run.samples.values.is_empty() {
                f64::NAN
            } else {
                mean_se(&run.samples.values).0
            };
            let predicted_median = match &run.reference {
                Some(refs) => {
                    let e = Ecdf::new(refs).expect("nonempty reference");
                    run.law.unscale(e.quantile(0.5))
                }
                None => run.law.unscale(run.law.median()),
            };
            StudyRow {
                n: run.result.n,
                r: run.result.r,
                x0: run.result.x0,
                ks: run.result.ks,
                sample_mean,
                predicted_median,
            }
        })
        .collect())
}

/// Shorthand for validating a case with its preset sequence, replicate
/// count and tolerance.
pub fn validate_preset(case: CaseId, seed: u64) -> Result<ValidationReport> {
    let reps = preset_replicates(case);
    validate_theorem(case, &preset_sequence(case), reps, seed, default_tolerance(case, reps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(ks: f64, censored: usize) -> InstanceResult {
        InstanceResult {
            n: 10,
            r: 1.0,
            x0: 1,
            replicates: 1000,
            ks,
            censored,
        }
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict_for(&[res(0.04, 0)], 0.05), Verdict::Pass);
        assert_eq!(verdict_for(&[res(0.06, 0)], 0.05), Verdict::Fail);
        assert_eq!(verdict_for(&[res(0.03, 0), res(0.04, 0)], 0.05), Verdict::Fail);
        assert_eq!(verdict_for(&[res(0.05, 0), res(0.04, 0)], 0.05), Verdict::Pass);
        assert_eq!(verdict_for(&[res(0.01, 11)], 0.05), Verdict::Inconclusive);
        assert_eq!(verdict_for(&[res(0.01, 10)], 0.05), Verdict::Pass);
    }

    #[test]
    fn case_ids_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.as_str().parse::<CaseId>().unwrap(), c);
        }
        assert_eq!("THM3".parse::<CaseId>().unwrap(), CaseId::Thm3);
        assert!(matches!("thm9".parse::<CaseId>(), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn presets_pass_their_own_regime_check() {
        for c in CaseId::ALL {
            check_regime(c, &preset_sequence(c)).unwrap();
        }
    }

    #[test]
    fn preset_values() {
        let s = preset_sequence(CaseId::Thm3);
        assert_eq!(s[0].x0, 40);
        assert_eq!(s[1].x0, 100);
        let s = preset_sequence(CaseId::Thm5_1a);
        assert_eq!((s[0].x0, s[1].x0), (16, 32));
        let s = preset_sequence(CaseId::Thm5_2);
        assert_eq!((s[0].x0, s[1].x0), (13, 26));
    }

    #[test]
    fn broken_sequences_rejected() {
        let broken: Vec<(CaseId, Vec<Instance>)> = vec![
            // X₀ log(γX₀) > γn
            (CaseId::Thm2Sub, vec![Instance { n: 1000, r: 0.5, x0: 900 }]),
            // √n·γ decreasing
            (
                CaseId::Thm3,
                vec![
                    Instance { n: 10_000, r: 0.9, x0: 100 },
                    Instance { n: 100_000, r: 0.995, x0: 300 },
                ],
            ),
            // not in the critical window
            (CaseId::Thm4, vec![Instance { n: 10_000, r: 1.2, x0: 100 }]),
            // n decreasing
            (
                CaseId::Thm4,
                vec![
                    Instance { n: 10_000, r: 1.0, x0: 100 },
                    Instance { n: 1_000, r: 1.0, x0: 32 },
                ],
            ),
            // start above X*
            (CaseId::Thm5_1b, vec![Instance { n: 10_000, r: 1.5, x0: 5000 }]),
            // subcritical for a supercritical case
            (CaseId::Thm5_2, vec![Instance { n: 60, r: 0.8, x0: 10 }]),
            (CaseId::Thm1_1a, vec![]),
        ];
        for (case, seq) in broken {
            assert!(
                matches!(check_regime(case, &seq), Err(Error::RegimeViolation { .. })),
                "{case} {seq:?}"
            );
            assert!(validate_theorem(case, &seq, 10, 1, 0.05).is_err());
        }
    }

    #[test]
    fn thm1_small_run_is_deterministic() {
        let seq = preset_sequence(CaseId::Thm1_1a);
        let a = validate_theorem(CaseId::Thm1_1a, &seq, 5000, 3, 0.05).unwrap();
        let b = validate_theorem(CaseId::Thm1_1a, &seq, 5000, 3, 0.05).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.verdict, Verdict::Pass);
    }

    #[test]
    fn rescaling_inverts() {
        let inst = preset_sequence(CaseId::Thm3)[0];
        let law = law_for_case(CaseId::Thm3, &inst).unwrap();
        for t in [0.0, 12.5, 1e3] {
            assert_eq!(law.unscale(law.rescale(t)), t);
        }
    }

    #[test]
    fn report_json_schema() {
        let r = ValidationReport {
            case: "thm3".into(),
            instances: vec![res(0.02, 0)],
            tolerance: 0.05,
            verdict: Verdict::Pass,
            seed: 7,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["verdict"], "Pass");
        let inst = &v["instances"][0];
        for key in ["n", "r", "x0", "replicates", "ks", "censored"] {
            assert!(inst.get(key).is_some(), "{key}");
        }
        for key in ["case", "tolerance", "seed"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn thm5_2_small_study() {
        let seq = preset_sequence(CaseId::Thm5_2);
        let rows = convergence_study(CaseId::Thm5_2, &seq[..1], 500, 2).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].sample_mean > 0.0 && rows[0].predicted_median > 0.0);
    }
}

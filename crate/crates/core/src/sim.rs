//! Exact event-driven simulation of birth–death chains with 0 absorbing.
//!
//! Each event draws one unit exponential for the holding time and one
//! uniform for the direction. Batches run replicates in parallel with rayon;
//! every replicate owns the stream `rng::stream(master_seed, index)` and
//! results are merged by index, so output never depends on the thread count.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{build_log_nu, Target};
use crate::model::{BDRateSpec, ModelParams, RateKind};
use crate::rng::{stream, StreamRng};

/// Default censoring horizon for unconditioned runs.
pub const DEFAULT_T_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    Absorbed0,
    /// Stopped at a state of the stop set, or at an absorbing state other
    /// than 0 (the `X*` boundary of a conditioned chain).
    AbsorbedTarget,
    Censored(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// Event times; `states[k + 1]` is the state entered at `times[k]`.
    pub times: Vec<f64>,
    pub states: Vec<u64>,
    pub terminal: Terminal,
}

impl SamplePath {
    /// Time of the last event, i.e. the hitting time when the path was
    /// absorbed or stopped.
    pub fn end_time(&self) -> f64 {
        match self.terminal {
            Terminal::Censored(t) => t,
            _ => self.times.last().copied().unwrap_or(0.0),
        }
    }

    pub fn final_state(&self) -> u64 {
        *self.states.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conditioning {
    None,
    HitsZeroFirst,
    HitsXstarFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub rate_kind: RateKind,
    /// `None` for the branching process.
    pub n: Option<u64>,
    pub r: f64,
    pub x0: u64,
    pub conditioning: Conditioning,
    pub seed: u64,
    pub replicates: usize,
    pub censored_count: usize,
    pub t_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSamples {
    /// Uncensored hitting times in replicate order.
    pub values: Vec<f64>,
    pub meta: SampleMeta,
}

impl ExtinctionSamples {
    pub fn censored_fraction(&self) -> f64 {
        self.meta.censored_count as f64 / self.meta.replicates as f64
    }
}

/// Where a single run ended and when.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub time: f64,
    pub state: u64,
    pub terminal: Terminal,
}

fn check_start(spec: &BDRateSpec, x0: u64, t_cap: f64) -> Result<()> {
    if x0 > spec.state_space_max {
        return Err(Error::StateOutOfRange {
            state: x0,
            max: spec.state_space_max,
        });
    }
    if !(t_cap > 0.0) {
        return Err(Error::InvalidParameter(format!("t_cap must be > 0, got {t_cap}")));
    }
    Ok(())
}

/// Run one path to absorption, a stop state, or `t_cap`, calling `on_jump`
/// with `(time, new_state)` after every event.
#[inline]
fn run<F: FnMut(f64, u64)>(
    spec: &BDRateSpec,
    x0: u64,
    rng: &mut StreamRng,
    t_cap: f64,
    stop_set: &[u64],
    mut on_jump: F,
) -> Outcome {
    let mut x = x0;
    let mut t = 0.0;
    loop {
        if x == 0 {
            return Outcome {
                time: t,
                state: 0,
                terminal: Terminal::Absorbed0,
            };
        }
        if stop_set.contains(&x) {
            return Outcome {
                time: t,
                state: x,
                terminal: Terminal::AbsorbedTarget,
            };
        }
        let (up, down) = spec.rates_unchecked(x);
        let q = up + down;
        if q <= 0.0 {
            return Outcome {
                time: t,
                state: x,
                terminal: Terminal::AbsorbedTarget,
            };
        }
        let hold: f64 = rng.sample(Exp1);
        t += hold / q;
        if t > t_cap {
            return Outcome {
                time: t_cap,
                state: x,
                terminal: Terminal::Censored(t_cap),
            };
        }
        let u: f64 = rng.random();
        if u * q < up {
            x += 1;
        } else {
            x -= 1;
        }
        on_jump(t, x);
    }
}

/// Exact path of the chain `spec` from `x0`.
pub fn simulate_path(
    spec: &BDRateSpec,
    x0: u64,
    seed: u64,
    t_cap: f64,
    stop_set: &[u64],
) -> Result<SamplePath> {
    check_start(spec, x0, t_cap)?;
    let mut rng = stream(seed, 0);
    Ok(simulate_path_with(spec, x0, &mut rng, t_cap, stop_set))
}

/// [`simulate_path`] drawing from a caller-owned stream.
pub fn simulate_path_with(
    spec: &BDRateSpec,
    x0: u64,
    rng: &mut StreamRng,
    t_cap: f64,
    stop_set: &[u64],
) -> SamplePath {
    let mut times = Vec::new();
    let mut states = vec![x0];
    let out = run(spec, x0, rng, t_cap, stop_set, |t, x| {
        times.push(t);
        states.push(x);
    });
    SamplePath {
        times,
        states,
        terminal: out.terminal,
    }
}

/// Hitting-time readout of one run without recording the path. Draws the
/// same numbers as [`simulate_path_with`].
pub fn first_passage(
    spec: &BDRateSpec,
    x0: u64,
    rng: &mut StreamRng,
    t_cap: f64,
    stop_set: &[u64],
) -> Outcome {
    run(spec, x0, rng, t_cap, stop_set, |_, _| {})
}

/// Outcomes of `replicates` independent runs, in replicate order.
pub fn sample_outcomes(
    spec: &BDRateSpec,
    x0: u64,
    replicates: usize,
    master_seed: u64,
    t_cap: f64,
    stop_set: &[u64],
) -> Result<Vec<Outcome>> {
    check_start(spec, x0, t_cap)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be ≥ 1".into()));
    }
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(master_seed, i);
            first_passage(spec, x0, &mut rng, t_cap, stop_set)
        })
        .collect())
}

fn meta_for(spec: &BDRateSpec, x0: u64, conditioning: Conditioning, seed: u64, replicates: usize, t_cap: f64) -> SampleMeta {
    let n = match spec.kind {
        RateKind::Bbp => None,
        _ => Some(spec.state_space_max),
    };
    SampleMeta {
        rate_kind: spec.kind,
        n,
        r: spec.r,
        x0,
        conditioning,
        seed,
        replicates,
        censored_count: 0,
        t_cap,
    }
}

fn collect(outcomes: &[Outcome], mut meta: SampleMeta) -> ExtinctionSamples {
    let mut values = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o.terminal {
            Terminal::Censored(_) => meta.censored_count += 1,
            _ => values.push(o.time),
        }
    }
    ExtinctionSamples { values, meta }
}

/// Extinction times of `replicates` runs from `x0`; censored runs are
/// counted in the metadata and left out of `values`.
pub fn sample_extinction(
    spec: &BDRateSpec,
    x0: u64,
    replicates: usize,
    master_seed: u64,
    t_cap: f64,
) -> Result<ExtinctionSamples> {
    let outcomes = sample_outcomes(spec, x0, replicates, master_seed, t_cap, &[])?;
    Ok(collect(
        &outcomes,
        meta_for(spec, x0, Conditioning::None, master_seed, replicates, t_cap),
    ))
}

/// Hitting times of 0 (resp. `X*`) under the chain conditioned on hitting
/// that target before the other, simulated through the h-transformed rates.
pub fn sample_conditioned(
    params: &ModelParams,
    x0: u64,
    target: Conditioning,
    replicates: usize,
    master_seed: u64,
) -> Result<ExtinctionSamples> {
    let xs = params.require_x_star()?;
    if x0 == 0 || x0 >= xs {
        return Err(Error::StateOutOfRange {
            state: x0,
            max: xs.saturating_sub(1),
        });
    }
    let table = build_log_nu(params)?;
    let t = match target {
        Conditioning::HitsZeroFirst => Target::Down,
        Conditioning::HitsXstarFirst => Target::Up,
        Conditioning::None => {
            return Err(Error::InvalidParameter(
                "sample_conditioned needs a conditioning target".into(),
            ))
        }
    };
    let log_h = match t {
        Target::Down => table.log_h_minus(x0)?,
        Target::Up => table.log_h_plus(x0)?,
    };
    if log_h == f64::NEG_INFINITY {
        return Err(Error::NullConditioning { state: x0 });
    }
    let spec = table.conditioned_spec(t)?;
    let outcomes = sample_outcomes(&spec, x0, replicates, master_seed, DEFAULT_T_CAP, &[])?;
    let mut meta = meta_for(&spec, x0, target, master_seed, replicates, DEFAULT_T_CAP);
    meta.n = Some(params.n);
    Ok(collect(&outcomes, meta))
}

/// Unconditioned runs stopped at `{0, X*}`; returns the number that reached
/// 0 first and their hitting times (the rejection-sampling form of
/// [`sample_conditioned`] with [`Conditioning::HitsZeroFirst`]).
pub fn sample_rapid_by_rejection(
    params: &ModelParams,
    x0: u64,
    replicates: usize,
    master_seed: u64,
) -> Result<(usize, Vec<f64>)> {
    let xs = params.require_x_star()?;
    let spec = BDRateSpec::logistic(params);
    let outcomes = sample_outcomes(&spec, x0, replicates, master_seed, DEFAULT_T_CAP, &[xs])?;
    let times: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.terminal == Terminal::Absorbed0)
        .map(|o| o.time)
        .collect();
    Ok((times.len(), times))
}

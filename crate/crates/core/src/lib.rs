//! Extinction statistics of the stochastic logistic birth–death process.
//!
//! The logistic process on `{0, …, n}` jumps `X → X+1` at rate `rX(1−X/n)`
//! and `X → X−1` at rate `X`. This crate provides
//!
//! * [`model`]: parameters, transition rates and phase classification,
//! * [`exact`]: log-space exact hitting probabilities, crossing times and
//!   extinction-time expectations,
//! * [`laws`]: closed-form rescaled limit laws and a dispatcher that picks the
//!   applicable one for a finite instance,
//! * [`sim`] and [`coupling`]: exact event-driven simulation, h-transform
//!   conditioned dynamics and the monotone coupling of several trajectories,
//! * [`diffusion`]: Euler–Maruyama integration of the limiting diffusions,
//! * [`stats`] and [`validation`]: empirical CDFs, Kolmogorov–Smirnov
//!   distances and per-case validation reports.

pub mod coupling;
pub mod diffusion;
pub mod error;
pub mod exact;
pub mod export;
pub mod laws;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use exact::{ExactResults, LogNuTable, PotentialEstimate};
pub use laws::{DispatchPolicy, LawCdf, LimitLaw, Support};
pub use model::{BDRateSpec, ModelParams, Phase, PhaseKind, RateKind};
pub use sim::{Conditioning, ExtinctionSamples, SampleMeta, SamplePath, Terminal};
pub use validation::{ValidationReport, Verdict};

//! Interpolation diffusion models (IDM) for speech enhancement.
//!
//! The crate covers the full numerical pipeline around a score model:
//!
//! - [`schedule`]: closed-form coefficient functions (α_t, λ_t, β(t), G(t), g(t))
//!   for the variance-preserving, variance-exploding and general interpolation
//!   families, plus numerical checks of the G/g coupling ODE.
//! - [`diffusion`]: forward marginal, conditional score, training tuples and the
//!   weighted score-matching loss.
//! - [`sampler`]: SDE drift, forward Euler–Maruyama simulation and the discretized
//!   reverse sampler.
//! - [`signal`]: WAV I/O, STFT/iSTFT and amplitude-compression scaling.
//! - [`metrics`]: SI-SDR / SI-SIR / SI-SAR and the initial-error report.
//!
//! Score models are pluggable through [`diffusion::ScoreModel`]; the crate ships
//! analytic oracles only.

pub mod container;
pub mod diffusion;
pub mod error;
pub mod metrics;
pub mod quad;
pub mod sampler;
pub mod schedule;
pub mod signal;
pub mod tensor;

pub use error::{Error, Result};
pub use schedule::{IdmSchedule, LinearBeta, Schedule, ScheduleKind, Time, VeSchedule, VpSchedule};
pub use tensor::SpectroTensor;

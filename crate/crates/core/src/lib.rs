//! Nonlinear and linear double-integrator observers.
//!
//! Both observers take a measured signal `a(t)` and produce, simultaneously,
//! a tracked copy of the signal (`x3`), its onefold integral (`x2`) and its
//! double integral (`x1`). The nonlinear variant uses fractional power-sign
//! feedback; with `alpha3 = 1` it reduces exactly to the linear one.
//!
//! The crate is organised around the workflows used to characterise them:
//!
//! * [`signals`] generates inputs, deterministic noise and closed-form truths.
//! * [`observer`] holds parameters, their validity checks and the dynamics.
//! * [`solver`] integrates an observer against a signal with RK4 or Euler.
//! * [`analytic`] evaluates the exact transfer function of the linear observer.
//! * [`sweep`] identifies Bode curves by least-squares sine fitting.
//! * [`metrics`] and [`presets`] support the time-domain scenarios.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks, and the
// reference signal's 3.14 rad/s is a given rate, not an approximation of pi.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::approx_constant)]

pub mod analytic;
pub mod error;
pub mod metrics;
pub mod observer;
pub mod presets;
pub mod signals;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use observer::{Mode, ObserverParams, ObserverState, ParamSet, ValidationReport};
pub use signals::{NoiseTerm, Phase, SignalKind, SignalSpec};
pub use solver::{Method, SimConfig, Trajectory};
pub use sweep::{BodeCurve, SinusoidFit, SweepConfig};

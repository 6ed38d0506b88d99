//! Input signals, deterministic noise and closed-form integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular rate of the reference signal used in the time-domain scenarios.
///
/// Written as the literal `3.14` rather than `PI`: the closed-form integrals
/// of the reference are stated for this constant.
pub const REFERENCE_OMEGA: f64 = 3.14;

/// Amplitude of the double integral of the reference signal.
pub const REFERENCE_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// `A sin(wt)`, integrals taken from zero at `t = 0`.
    Sinusoid,
    /// `-A w^2 sin(wt)` whose integrals are the centered antiderivatives
    /// `A w cos(wt)` and `A sin(wt)`.
    PaperReference,
    /// `A sin(wt)` plus noise, with no ground truth.
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sine,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseTerm {
    pub amp: f64,
    pub omega: f64,
    pub phase: Phase,
}

impl NoiseTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self.phase {
            Phase::Sine => self.amp * (self.omega * t).sin(),
            Phase::Cosine => self.amp * (self.omega * t).cos(),
        }
    }
}

/// A deterministic input signal `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub noise: Vec<NoiseTerm>,
}

/// Closed-form double integral, onefold integral and clean signal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl SignalSpec {
    pub fn sinusoid(amplitude: f64, omega: f64) -> Self {
        Self { kind: SignalKind::Sinusoid, amplitude, omega, noise: Vec::new() }
    }

    /// Reference acceleration `-0.1 * 3.14^2 * sin(3.14 t)` without noise.
    pub fn paper_reference() -> Self {
        Self {
            kind: SignalKind::PaperReference,
            amplitude: REFERENCE_AMPLITUDE,
            omega: REFERENCE_OMEGA,
            noise: Vec::new(),
        }
    }

    /// High-frequency noise `0.1 sin 10t + 0.1 cos 10t + 0.05 sin 50t + 0.05 cos 50t`.
    pub fn paper_noise() -> Vec<NoiseTerm> {
        vec![
            NoiseTerm { amp: 0.1, omega: 10.0, phase: Phase::Sine },
            NoiseTerm { amp: 0.1, omega: 10.0, phase: Phase::Cosine },
            NoiseTerm { amp: 0.05, omega: 50.0, phase: Phase::Sine },
            NoiseTerm { amp: 0.05, omega: 50.0, phase: Phase::Cosine },
        ]
    }

    pub fn with_noise(mut self, noise: Vec<NoiseTerm>) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::Domain { what: "signal amplitude", value: self.amplitude });
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::Domain { what: "signal angular rate", value: self.omega });
        }
        for term in &self.noise {
            if !(term.amp >= 0.0) || !term.amp.is_finite() {
                return Err(Error::Domain { what: "noise amplitude", value: term.amp });
            }
            if !(term.omega >= 0.0) || !term.omega.is_finite() {
                return Err(Error::Domain { what: "noise angular rate", value: term.omega });
            }
        }
        Ok(())
    }

    /// Signal without noise.
    pub fn clean(&self, t: f64) -> f64 {
        let (a, w) = (self.amplitude, self.omega);
        match self.kind {
            SignalKind::Sinusoid | SignalKind::Composite => a * (w * t).sin(),
            SignalKind::PaperReference => -a * w * w * (w * t).sin(),
        }
    }

    pub fn noise_at(&self, t: f64) -> f64 {
        self.noise.iter().map(|n| n.eval(t)).sum()
    }

    /// Measured input `a(t)`: clean signal plus every noise term.
    pub fn eval_input(&self, t: f64) -> f64 {
        self.clean(t) + self.noise_at(t)
    }

    pub fn has_truth(&self) -> bool {
        !matches!(self.kind, SignalKind::Composite)
    }

    /// Integrals of the clean signal. Noise is never integrated.
    pub fn eval_truth(&self, t: f64) -> Result<Truth> {
        let (a, w) = (self.amplitude, self.omega);
        let a3 = self.clean(t);
        match self.kind {
            SignalKind::Sinusoid => {
                if w == 0.0 {
                    return Ok(Truth { a1: 0.0, a2: 0.0, a3 });
                }
                let (s, c) = (w * t).sin_cos();
                Ok(Truth { a1: a * (t - s / w) / w, a2: a * (1.0 - c) / w, a3 })
            }
            SignalKind::PaperReference => {
                let (s, c) = (w * t).sin_cos();
                Ok(Truth { a1: a * s, a2: a * w * c, a3 })
            }
            SignalKind::Composite => Err(Error::UnsupportedTruth("composite")),
        }
    }
}

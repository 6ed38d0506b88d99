//! Fixed-step integration of an observer against an input signal.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observer::{ObserverParams, ObserverState};
use crate::signals::{SignalSpec, Truth};

/// `h * k3 / eps^4` must stay below this for the explicit schemes.
pub const STABILITY_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step_h: f64,
    pub duration: f64,
    pub initial_state: ObserverState,
    pub method: Method,
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_h: 1e-3,
            duration: 20.0,
            initial_state: ObserverState::ZERO,
            method: Method::Rk4,
            record_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.duration / self.step_h).round() as usize
    }

    pub fn validate(&self, p: &ObserverParams) -> Result<()> {
        if !(self.step_h > 0.0) || !self.step_h.is_finite() {
            return Err(Error::Config(format!("step_h = {} must be > 0", self.step_h)));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::Config(format!("duration = {} must be > 0", self.duration)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::Config("initial state must be finite".into()));
        }
        check_stability(p, self.step_h)
    }
}

pub fn check_stability(p: &ObserverParams, h: f64) -> Result<()> {
    let h_lambda = h * p.fast_rate();
    if h_lambda < STABILITY_LIMIT {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "step {h} s is too large for fast rate k3/eps^4 = {} (h*rate = {h_lambda} >= {STABILITY_LIMIT})",
            p.fast_rate()
        )))
    }
}

/// One step of `method` from `(t, state)`, sampling the input where the
/// scheme needs it.
pub fn step<F>(
    p: &ObserverParams,
    state: &ObserverState,
    t: f64,
    h: f64,
    method: Method,
    input: F,
) -> Result<ObserverState>
where
    F: Fn(f64) -> f64,
{
    let diverged = |_| Error::Diverged { time: Some(t) };
    let next = match method {
        Method::Euler => *state + p.rhs(state, input(t)).map_err(diverged)? * h,
        Method::Rk4 => {
            let half = 0.5 * h;
            let a_mid = input(t + half);
            let d1 = p.rhs(state, input(t)).map_err(diverged)?;
            let d2 = p.rhs(&(*state + d1 * half), a_mid).map_err(diverged)?;
            let d3 = p.rhs(&(*state + d2 * half), a_mid).map_err(diverged)?;
            let d4 = p.rhs(&(*state + d3 * h), input(t + h)).map_err(diverged)?;
            *state + (d1 + (d2 + d3) * 2.0 + d4) * (h / 6.0)
        }
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged { time: Some(t + h) })
    }
}

/// Recorded simulation output. All vectors share one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ObserverState>,
    pub inputs: Vec<f64>,
    pub truths: Option<Vec<Truth>>,
    /// `x_i - a_i(t)` per sample, present with `truths`.
    pub errors: Option<Vec<ObserverState>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t,x1,x2,x3,a,a1,a2,a3,e1,e2,e3` rows in 9-significant-digit
    /// scientific notation. Truth and error columns are left empty when
    /// the signal has no closed form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"t,x1,x2,x3,a,a1,a2,a3,e1,e2,e3\n")?;
        for j in 0..self.len() {
            let s = &self.states[j];
            write!(
                w,
                "{},{},{},{},{}",
                sci(self.times[j]),
                sci(s.x1),
                sci(s.x2),
                sci(s.x3),
                sci(self.inputs[j])
            )?;
            match (&self.truths, &self.errors) {
                (Some(truths), Some(errors)) => {
                    let (tr, e) = (&truths[j], &errors[j]);
                    write!(
                        w,
                        ",{},{},{},{},{},{}",
                        sci(tr.a1),
                        sci(tr.a2),
                        sci(tr.a3),
                        sci(e.x1),
                        sci(e.x2),
                        sci(e.x3)
                    )?;
                }
                _ => w.write_all(b",,,,,,")?,
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub(crate) fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

/// Integrates `p` against `spec` from `t = 0` to `cfg.duration`.
pub fn simulate(p: &ObserverParams, spec: &SignalSpec, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate(p)?;
    spec.validate()?;

    let h = cfg.step_h;
    let steps = cfg.steps();
    let capacity = steps / cfg.record_stride + 1;
    let with_truth = spec.has_truth();

    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        inputs: Vec::with_capacity(capacity),
        truths: with_truth.then(|| Vec::with_capacity(capacity)),
        errors: with_truth.then(|| Vec::with_capacity(capacity)),
    };

    let input = |t: f64| spec.eval_input(t);
    let mut state = cfg.initial_state;
    for i in 0..=steps {
        let t = i as f64 * h;
        if i % cfg.record_stride == 0 {
            traj.times.push(t);
            traj.states.push(state);
            traj.inputs.push(input(t));
            if let (Some(truths), Some(errors)) = (&mut traj.truths, &mut traj.errors) {
                let tr = spec.eval_truth(t)?;
                errors.push(state - ObserverState::new(tr.a1, tr.a2, tr.a3));
                truths.push(tr);
            }
        }
        if i < steps {
            state = step(p, &state, t, h, cfg.method, input)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::ParamSet;

    const K: (f64, f64, f64) = (0.1, 0.1, 1.0);

    fn linear() -> ObserverParams {
        ObserverParams::new(ParamSet::linear(K, 0.2)).unwrap()
    }

    #[test]
    fn euler_from_equilibrium_is_unchanged() {
        let s = step(&linear(), &ObserverState::ZERO, 0.0, 1e-3, Method::Euler, |_| 0.0).unwrap();
        assert_eq!(s, ObserverState::ZERO);
    }

    #[test]
    fn euler_single_step() {
        let s =
            step(&linear(), &ObserverState::new(1.0, 1.0, 1.0), 0.0, 1e-3, Method::Euler, |_| 0.0).unwrap();
        assert!((s.x1 - 1.001).abs() < 1e-12);
        assert!((s.x2 - 1.001).abs() < 1e-12);
        assert!((s.x3 - 0.360).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_keeps_origin() {
        for set in [ParamSet::linear(K, 0.2), ParamSet::nonlinear(K, 0.2, 0.3)] {
            let p = ObserverParams::new(set).unwrap();
            let cfg = SimConfig { duration: 1.0, ..SimConfig::default() };
            let traj = simulate(&p, &SignalSpec::sinusoid(0.0, 1.0), &cfg).unwrap();
            assert_eq!(traj.len(), 1001);
            assert!(traj.states.iter().all(|s| *s == ObserverState::ZERO));
        }
    }

    #[test]
    fn stability_guard() {
        let cfg = SimConfig { step_h: 0.004, ..SimConfig::default() };
        assert!(matches!(cfg.validate(&linear()), Err(Error::Config(_))));
        assert!(SimConfig::default().validate(&linear()).is_ok());
        let bad = SimConfig { record_stride: 0, ..SimConfig::default() };
        assert!(bad.validate(&linear()).is_err());
    }

    #[test]
    fn grid_and_errors_are_consistent() {
        let cfg = SimConfig {
            duration: 5.0,
            record_stride: 7,
            initial_state: ObserverState::new(0.0, 1.0, 0.0),
            ..SimConfig::default()
        };
        let spec = SignalSpec::paper_reference().with_noise(SignalSpec::paper_noise());
        let traj = simulate(&linear(), &spec, &cfg).unwrap();
        assert_eq!(traj.len(), 5000 / 7 + 1);
        let truths = traj.truths.as_ref().unwrap();
        let errors = traj.errors.as_ref().unwrap();
        assert_eq!(truths.len(), traj.len());
        for j in 0..traj.len() {
            assert_eq!(traj.times[j], (j * 7) as f64 * 1e-3);
            let s = traj.states[j];
            let tr = truths[j];
            assert_eq!(errors[j], ObserverState::new(s.x1 - tr.a1, s.x2 - tr.a2, s.x3 - tr.a3));
        }
        assert!((errors[0].x2 - 0.686).abs() < 1e-12);
    }

    #[test]
    fn composite_signal_has_no_truth_columns() {
        let spec =
            SignalSpec { kind: crate::signals::SignalKind::Composite, ..SignalSpec::sinusoid(1.0, 1.0) };
        let cfg = SimConfig { duration: 0.002, ..SimConfig::default() };
        let traj = simulate(&linear(), &spec, &cfg).unwrap();
        assert!(traj.truths.is_none());
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,x3,a,a1,a2,a3,e1,e2,e3");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",,,,,,"));
        assert_eq!(lines[1].split(',').count(), 11);
    }

    #[test]
    fn csv_number_format() {
        assert_eq!(sci(0.0), "0.00000000e0");
        assert_eq!(sci(-0.000123456789123), "-1.23456789e-4");
        assert_eq!(sci(20.0), "2.00000000e1");
    }

    #[test]
    fn reports_divergence_time() {
        let p = linear();
        let spec = SignalSpec::sinusoid(1e308, 1.0);
        let cfg = SimConfig { duration: 1.0, ..SimConfig::default() };
        match simulate(&p, &spec, &cfg) {
            Err(Error::Diverged { time: Some(t) }) => assert!(t > 0.0 && t <= 1.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}

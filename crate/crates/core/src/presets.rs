//! Parameter sets and signals of the reference experiments.
//!
//! Figures 1-2 are frequency sweeps, figures 3-6 are time-domain runs
//! against the noisy reference signal.

use crate::observer::{Mode, ObserverState, ParamSet};
use crate::signals::SignalSpec;
use crate::solver::{Method, SimConfig};

pub const GAINS: (f64, f64, f64) = (0.1, 0.1, 1.0);

/// Observer parameters for `R = 1/eps`.
pub fn params(r: f64, alpha3: f64, mode: Mode) -> ParamSet {
    ParamSet::new(GAINS, 1.0 / r, alpha3, mode)
}

/// Reference acceleration plus the four-tone noise.
pub fn noisy_reference() -> SignalSpec {
    SignalSpec::paper_reference().with_noise(SignalSpec::paper_noise())
}

pub fn initial_state() -> ObserverState {
    ObserverState::new(0.0, 1.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] =
        [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub params: ParamSet,
    pub signal: SignalSpec,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepScenario {
    pub variants: Vec<ParamSet>,
    pub amplitudes: Vec<f64>,
}

pub enum Scenario {
    Simulate(SimScenario),
    Sweep(SweepScenario),
}

/// Time-domain runs: nonlinear with `alpha3 = 0.3` (3, 4) or linear (5, 6),
/// `R = 5`, 20 s or 2000 s. Long runs record every 100th step.
fn time_domain(mode: Mode, alpha3: f64, duration: f64) -> SimScenario {
    SimScenario {
        params: params(5.0, alpha3, mode),
        signal: noisy_reference(),
        sim: SimConfig {
            step_h: 1e-3,
            duration,
            initial_state: initial_state(),
            method: Method::Rk4,
            record_stride: if duration > 60.0 { 100 } else { 1 },
        },
    }
}

pub fn scenario(fig: Figure) -> Scenario {
    match fig {
        Figure::Fig1 => Scenario::Sweep(SweepScenario {
            variants: [0.3, 0.5, 1.0]
                .iter()
                .flat_map(|&a| [3.0, 4.0, 5.0].map(|r| params(r, a, Mode::Nonlinear)))
                .collect(),
            amplitudes: vec![1.0],
        }),
        Figure::Fig2 => Scenario::Sweep(SweepScenario {
            variants: vec![params(3.0, 0.3, Mode::Nonlinear)],
            amplitudes: vec![5.0, 1.0, 0.5],
        }),
        Figure::Fig3 => Scenario::Simulate(time_domain(Mode::Nonlinear, 0.3, 20.0)),
        Figure::Fig4 => Scenario::Simulate(time_domain(Mode::Nonlinear, 0.3, 2000.0)),
        Figure::Fig5 => Scenario::Simulate(time_domain(Mode::Linear, 1.0, 20.0)),
        Figure::Fig6 => Scenario::Simulate(time_domain(Mode::Linear, 1.0, 2000.0)),
    }
}

pub fn sim_scenario(fig: Figure) -> Option<SimScenario> {
    match scenario(fig) {
        Scenario::Simulate(s) => Some(s),
        Scenario::Sweep(_) => None,
    }
}

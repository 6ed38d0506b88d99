//! JSON run configuration and its expansion into library types.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use dint::observer::{ObserverState, DEFAULT_EPSILON_FLOOR};
use dint::presets::{self, Figure, Scenario};
use dint::sweep::{paper_grid, SweepInit};
use dint::{Method, Mode, ParamSet, SignalSpec, SimConfig, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Validate,
    Simulate,
    Sweep,
    Reproduce,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn one() -> f64 {
    1.0
}

fn epsilon_floor() -> f64 {
    DEFAULT_EPSILON_FLOOR
}

/// Observer gains with `R = 1/eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(default = "one")]
    pub alpha3: f64,
    pub mode: Mode,
    #[serde(default = "epsilon_floor")]
    pub epsilon_floor: f64,
}

impl ParamsSection {
    pub fn with(&self, r: f64, alpha3: f64) -> ParamSet {
        ParamSet::new((self.k1, self.k2, self.k3), 1.0 / r, alpha3, self.mode)
    }

    pub fn param_set(&self) -> ParamSet {
        self.with(self.r, self.alpha3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_step")]
    pub step_h: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub initial_state: [f64; 3],
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Metric windows `[from, to]` in seconds. Empty means the second half
    /// of the run.
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
}

fn default_step() -> f64 {
    1e-3
}

fn default_duration() -> f64 {
    20.0
}

fn default_stride() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            step_h: d.step_h,
            duration: d.duration,
            initial_state: d.initial_state.to_array(),
            method: d.method,
            record_stride: d.record_stride,
            windows: Vec::new(),
        }
    }
}

impl SimSection {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            step_h: self.step_h,
            duration: self.duration,
            initial_state: ObserverState::from(self.initial_state),
            method: self.method,
            record_stride: self.record_stride,
        }
    }

    pub fn windows(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|w| (w[0], w[1])).collect()
    }
}

fn default_amplitudes() -> Vec<f64> {
    vec![1.0]
}

/// Sweep grid plus the `R`, `alpha3` and amplitude lists to run it for.
/// Empty `R` or `alpha3` lists fall back to the params section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "R", default)]
    pub r: Vec<f64>,
    #[serde(default)]
    pub alpha3: Vec<f64>,
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "paper_grid")]
    pub freqs_hz: Vec<f64>,
    #[serde(default = "default_step")]
    pub step_h: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub discard_fraction: f64,
    #[serde(default = "default_channels")]
    pub channels: Vec<usize>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub initial: SweepInit,
}

fn default_samples() -> usize {
    50_000
}

fn default_channels() -> Vec<usize> {
    vec![1, 2, 3]
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            r: Vec::new(),
            alpha3: Vec::new(),
            amplitudes: default_amplitudes(),
            freqs_hz: d.freqs_hz,
            step_h: d.step_h,
            samples: d.samples,
            discard_fraction: d.discard_fraction,
            channels: d.channels,
            method: d.method,
            initial: d.initial,
        }
    }
}

impl SweepSection {
    pub fn sweep_config(&self, amplitude: f64) -> SweepConfig {
        SweepConfig {
            freqs_hz: self.freqs_hz.clone(),
            amplitude,
            step_h: self.step_h,
            samples: self.samples,
            discard_fraction: self.discard_fraction,
            channels: self.channels.clone(),
            method: self.method,
            initial: self.initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Not echoed into outputs, so runs into different directories match.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Fills every defaulted field for `command` and drops sections the
    /// command does not use. `validate` accepts a config written for any
    /// command and leaves it as is apart from the sweep lists.
    pub fn resolve(mut self, command: Command) -> Result<Self, String> {
        if command == Command::Validate {
            self.fill_sweep_lists();
            return Ok(self);
        }
        if let Some(c) = self.command {
            if c != command {
                return Err(format!("config is for `{c:?}` but `{command:?}` was requested").to_lowercase());
            }
        }
        self.command = Some(command);
        match command {
            Command::Simulate => {
                if self.signal.is_none() {
                    return Err("simulate needs a `signal` section".into());
                }
                let mut sim = self.sim.take().unwrap_or_default();
                if sim.windows.is_empty() {
                    sim.windows = vec![[0.5 * sim.duration, sim.duration]];
                }
                self.sim = Some(sim);
                self.sweep = None;
            }
            Command::Sweep => {
                self.sweep = Some(self.sweep.take().unwrap_or_default());
                self.fill_sweep_lists();
                self.sim = None;
                self.signal = None;
            }
            Command::Validate | Command::Reproduce => {}
        }
        Ok(self)
    }

    fn fill_sweep_lists(&mut self) {
        if let Some(sweep) = &mut self.sweep {
            if sweep.r.is_empty() {
                sweep.r = vec![self.params.r];
            }
            if sweep.alpha3.is_empty() {
                sweep.alpha3 = vec![self.params.alpha3];
            }
        }
    }

    /// `(R, alpha3)` pairs of a resolved sweep, alpha3 outermost.
    pub fn sweep_variants(&self) -> Vec<(f64, f64)> {
        let Some(sweep) = &self.sweep else {
            return vec![(self.params.r, self.params.alpha3)];
        };
        sweep.alpha3.iter().flat_map(|&a| sweep.r.iter().map(move |&r| (r, a))).collect()
    }

    /// Every parameter set the config would run.
    pub fn param_sets(&self) -> Vec<ParamSet> {
        self.sweep_variants().into_iter().map(|(r, a)| self.params.with(r, a)).collect()
    }
}

fn preset_params(r: f64, alpha3: f64, mode: Mode) -> ParamsSection {
    let (k1, k2, k3) = presets::GAINS;
    ParamsSection { k1, k2, k3, r, alpha3, mode, epsilon_floor: DEFAULT_EPSILON_FLOOR }
}

/// Explicit config equivalent to a named scenario.
pub fn reproduce_config(fig: Figure) -> RunConfig {
    let base = |command, params| RunConfig {
        command: Some(command),
        params,
        signal: None,
        sim: None,
        sweep: None,
        output_dir: None,
        format: Format::Csv,
    };
    match presets::scenario(fig) {
        Scenario::Simulate(s) => {
            let params = preset_params(1.0 / s.params.epsilon, s.params.alpha3, s.params.mode);
            let mut windows = vec![[10.0, 20.0]];
            if s.sim.duration > 1800.0 {
                windows.push([1800.0, 2000.0]);
            }
            RunConfig {
                signal: Some(s.signal),
                sim: Some(SimSection {
                    step_h: s.sim.step_h,
                    duration: s.sim.duration,
                    initial_state: s.sim.initial_state.to_array(),
                    method: s.sim.method,
                    record_stride: s.sim.record_stride,
                    windows,
                }),
                ..base(Command::Simulate, params)
            }
        }
        Scenario::Sweep(s) => {
            let (r, alpha3) = match fig {
                Figure::Fig1 => (vec![3.0, 4.0, 5.0], vec![0.3, 0.5, 1.0]),
                _ => (vec![3.0], vec![0.3]),
            };
            let params = preset_params(r[0], alpha3[0], Mode::Nonlinear);
            RunConfig {
                sweep: Some(SweepSection { r, alpha3, amplitudes: s.amplitudes, ..SweepSection::default() }),
                ..base(Command::Sweep, params)
            }
        }
    }
}

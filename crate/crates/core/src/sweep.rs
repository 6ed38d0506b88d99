//! Frequency-sweep identification.
//!
//! At every grid frequency the observer is driven by `A_m sin(2 pi f t)`, each
//! output channel is fitted with a single sinusoid by linear least squares on
//! the regressors `sin(wt)` and `cos(wt)`, and the fit gives one Bode point:
//! magnitude `20 log10(A_f / A_m)` and phase `atan2(c2, c1)`.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::observer::{ObserverParams, ObserverState, ParamSet};
use crate::solver::{self, sci, Method};

/// Largest acceptable condition number of the 2x2 normal matrix.
pub const MAX_CONDITION: f64 = 1e8;

pub const CSV_HEADER: &str =
    "f_hz,omega_rad_s,channel,magnitude_db,phase_rad,phase_unwrapped_rad,residual_rms,source,flag";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub c1: f64,
    pub c2: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub residual_rms: f64,
}

/// Least-squares fit of `y = c1 sin(wt) + c2 cos(wt)`.
pub fn fit_sinusoid(times: &[f64], values: &[f64], omega: f64) -> Result<SinusoidFit> {
    if times.len() != values.len() {
        return Err(Error::Config(format!(
            "fit needs matching samples: {} times, {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::Config(format!("fit needs at least 2 samples, got {}", times.len())));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain { what: "fit angular rate > 0", value: omega });
    }

    let (mut ss, mut sc, mut cc, mut sy, mut cy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in times.iter().zip(values) {
        let (s, c) = (omega * t).sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        sy += s * y;
        cy += c * y;
    }

    let det = ss * cc - sc * sc;
    let half_trace = 0.5 * (ss + cc);
    let lambda_max = half_trace + (half_trace * half_trace - det).max(0.0).sqrt();
    let lambda_min = det / lambda_max;
    let condition = if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    let c1 = (cc * sy - sc * cy) / det;
    let c2 = (ss * cy - sc * sy) / det;

    let sq: f64 = times
        .iter()
        .zip(values)
        .map(|(&t, &y)| {
            let (s, c) = (omega * t).sin_cos();
            let r = y - c1 * s - c2 * c;
            r * r
        })
        .sum();

    Ok(SinusoidFit {
        c1,
        c2,
        amplitude: c1.hypot(c2),
        phase: c2.atan2(c1),
        residual_rms: (sq / times.len() as f64).sqrt(),
    })
}

/// Starting state for every frequency of a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepInit {
    /// Centered antiderivatives of `A sin(wt)` at `t = 0`: `(0, -A/w, 0)`.
    #[default]
    Centered,
    Zero,
}

impl SweepInit {
    pub fn state(self, amplitude: f64, omega: f64) -> ObserverState {
        match self {
            SweepInit::Centered => ObserverState::new(0.0, -amplitude / omega, 0.0),
            SweepInit::Zero => ObserverState::ZERO,
        }
    }
}

/// `start, start + step, ...` up to and including `stop`.
pub fn frequency_grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

/// 0.1 Hz to 99.6 Hz in 0.5 Hz steps (200 points).
pub fn paper_grid() -> Vec<f64> {
    frequency_grid(0.1, 0.5, 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub freqs_hz: Vec<f64>,
    pub amplitude: f64,
    pub step_h: f64,
    pub samples: usize,
    pub discard_fraction: f64,
    pub channels: Vec<usize>,
    pub method: Method,
    pub initial: SweepInit,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            freqs_hz: paper_grid(),
            amplitude: 1.0,
            step_h: 1e-3,
            samples: 50_000,
            discard_fraction: 0.0,
            channels: vec![1, 2, 3],
            method: Method::Rk4,
            initial: SweepInit::Centered,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.freqs_hz.is_empty() {
            return bad("sweep needs at least one frequency".into());
        }
        if !self.freqs_hz.iter().all(|f| *f > 0.0 && f.is_finite()) {
            return bad("sweep frequencies must be finite and > 0".into());
        }
        if !self.freqs_hz.windows(2).all(|w| w[0] < w[1]) {
            return bad("sweep frequencies must be strictly increasing".into());
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return bad(format!("sweep amplitude {} must be > 0", self.amplitude));
        }
        if !(self.step_h > 0.0) || !self.step_h.is_finite() {
            return bad(format!("sweep step {} must be > 0", self.step_h));
        }
        if !(0.0..1.0).contains(&self.discard_fraction) {
            return bad(format!("discard_fraction {} must lie in [0, 1)", self.discard_fraction));
        }
        if self.kept_samples() < 2 {
            return bad("fewer than 2 samples left after discarding".into());
        }
        let mut seen = [false; 4];
        if self.channels.is_empty() {
            return bad("sweep needs at least one channel".into());
        }
        for &j in &self.channels {
            if !(1..=3).contains(&j) || seen[j] {
                return bad(format!("invalid or repeated channel {j}"));
            }
            seen[j] = true;
        }
        Ok(())
    }

    /// Non-fatal issues, such as a window shorter than the lowest period.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(&f0) = self.freqs_hz.first() {
            let span = self.kept_samples() as f64 * self.step_h;
            if span * f0 < 1.0 {
                out.push(format!("fit window {span} s is shorter than one period at {f0} Hz"));
            }
        }
        out
    }

    pub fn discarded_samples(&self) -> usize {
        (self.discard_fraction * self.samples as f64).floor() as usize
    }

    pub fn kept_samples(&self) -> usize {
        self.samples - self.discarded_samples().min(self.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Sweep,
    Analytic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Sweep => "sweep",
            Source::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodeRow {
    pub f_hz: f64,
    pub omega: f64,
    pub channel: usize,
    pub magnitude_db: f64,
    pub phase: f64,
    pub phase_unwrapped: Option<f64>,
    pub residual_rms: f64,
    /// Raw least-squares coefficients; absent for analytic rows.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub flag: Option<String>,
}

impl BodeRow {
    fn flagged(f_hz: f64, channel: usize, flag: String) -> Self {
        Self {
            f_hz,
            omega: TAU * f_hz,
            channel,
            magnitude_db: f64::NAN,
            phase: f64::NAN,
            phase_unwrapped: None,
            residual_rms: f64::NAN,
            c1: None,
            c2: None,
            flag: Some(flag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodeCurve {
    pub source: Source,
    pub params: ParamSet,
    pub config: SweepConfig,
    pub rows: Vec<BodeRow>,
}

/// Where a channel's roll-off crosses a level, on a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// Interpolated crossing frequency, Hz.
    Within(f64),
    /// Still in band at the last grid frequency.
    AboveGrid,
    /// Already out of band at the first grid frequency.
    BelowGrid,
}

impl BodeCurve {
    pub fn channel_rows(&self, channel: usize) -> impl Iterator<Item = &BodeRow> {
        self.rows.iter().filter(move |r| r.channel == channel)
    }

    pub fn unflagged_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        self.rows.iter().filter(|r| r.flag.is_none()).count() as f64 / self.rows.len() as f64
    }

    /// Roll-off crossing of `magnitude relative to the ideal integrator`
    /// at `-drop_db`, i.e. `magnitude_db + 20 (3 - j) log10(w)`.
    pub fn cutoff_hz(&self, channel: usize, drop_db: f64) -> Crossing {
        let rel: Vec<(f64, f64)> = self
            .channel_rows(channel)
            .filter(|r| r.flag.is_none())
            .map(|r| (r.f_hz, r.magnitude_db + 20.0 * (3 - channel) as f64 * r.omega.log10()))
            .collect();
        let level = -drop_db;
        match rel.iter().rposition(|&(_, m)| m >= level) {
            None => Crossing::BelowGrid,
            Some(i) if i + 1 == rel.len() => Crossing::AboveGrid,
            Some(i) => {
                let ((f0, m0), (f1, m1)) = (rel[i], rel[i + 1]);
                let frac = (m0 - level) / (m0 - m1);
                Crossing::Within((f0.ln() + frac * (f1.ln() - f0.ln())).exp())
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                sci(r.f_hz),
                sci(r.omega),
                r.channel,
                sci(r.magnitude_db),
                sci(r.phase),
                opt(r.phase_unwrapped),
                sci(r.residual_rms),
                self.source.as_str(),
                r.flag.as_deref().unwrap_or("").replace(',', ";"),
            )?;
        }
        Ok(())
    }
}

/// Minimal-jump unwrapping of a phase sequence. Non-finite entries are
/// passed through and do not affect their neighbours.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<(f64, f64)> = None; // (raw, unwrapped)
    for &p in phases {
        if !p.is_finite() {
            out.push(p);
            continue;
        }
        let u = match prev {
            None => p,
            Some((raw, unwrapped)) => {
                let mut delta = (p - raw).rem_euclid(TAU);
                if delta > PI {
                    delta -= TAU;
                }
                unwrapped + delta
            }
        };
        prev = Some((p, u));
        out.push(u);
    }
    out
}

/// Fills `phase_unwrapped` channel by channel; the raw phase is untouched.
pub fn phase_unwrap(mut curve: BodeCurve) -> BodeCurve {
    for channel in 1..=3 {
        let idx: Vec<usize> = (0..curve.rows.len()).filter(|&i| curve.rows[i].channel == channel).collect();
        let raw: Vec<f64> = idx.iter().map(|&i| curve.rows[i].phase).collect();
        for (&i, u) in idx.iter().zip(unwrap_phases(&raw)) {
            curve.rows[i].phase_unwrapped = u.is_finite().then_some(u);
        }
    }
    curve
}

/// Observer outputs at `t = k h`, `k = first..=n`, for one drive frequency.
fn drive(p: &ObserverParams, cfg: &SweepConfig, omega: f64) -> Result<(Vec<f64>, [Vec<f64>; 3])> {
    let h = cfg.step_h;
    let amp = cfg.amplitude;
    let first = cfg.discarded_samples() + 1;
    let kept = cfg.samples + 1 - first;
    let input = |t: f64| amp * (omega * t).sin();

    let mut times = Vec::with_capacity(kept);
    let mut outputs = [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)];
    let mut state = cfg.initial.state(amp, omega);
    for k in 0..cfg.samples {
        state = solver::step(p, &state, k as f64 * h, h, cfg.method, input)?;
        if k + 1 >= first {
            times.push((k + 1) as f64 * h);
            for (j, out) in outputs.iter_mut().enumerate() {
                out.push(state.channel(j + 1));
            }
        }
    }
    Ok((times, outputs))
}

fn sweep_frequency(p: &ObserverParams, cfg: &SweepConfig, f_hz: f64) -> Vec<BodeRow> {
    let omega = TAU * f_hz;
    let (times, outputs) = match drive(p, cfg, omega) {
        Ok(v) => v,
        Err(e) => {
            return cfg.channels.iter().map(|&j| BodeRow::flagged(f_hz, j, e.to_string())).collect();
        }
    };
    cfg.channels
        .iter()
        .map(|&j| match fit_sinusoid(&times, &outputs[j - 1], omega) {
            Ok(fit) => BodeRow {
                f_hz,
                omega,
                channel: j,
                magnitude_db: 20.0 * (fit.amplitude / cfg.amplitude).log10(),
                phase: fit.phase,
                phase_unwrapped: None,
                residual_rms: fit.residual_rms,
                c1: Some(fit.c1),
                c2: Some(fit.c2),
                flag: None,
            },
            Err(e) => BodeRow::flagged(f_hz, j, e.to_string()),
        })
        .collect()
}

/// Sweeps every configured frequency, in parallel, and returns the rows
/// ordered by frequency then channel. A frequency whose simulation diverges
/// or whose fit is ill-conditioned is flagged and the sweep carries on.
pub fn sweep_observer(p: &ObserverParams, cfg: &SweepConfig) -> Result<BodeCurve> {
    cfg.validate()?;
    solver::check_stability(p, cfg.step_h)?;
    let mut channels = cfg.channels.clone();
    channels.sort_unstable();
    let cfg = SweepConfig { channels, ..cfg.clone() };

    let rows: Vec<BodeRow> = cfg
        .freqs_hz
        .par_iter()
        .map(|&f| sweep_frequency(p, &cfg, f))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    Ok(phase_unwrap(BodeCurve { source: Source::Sweep, params: *p.set(), config: cfg, rows }))
}

/// Exact Bode curve of a linear observer on the same grid and channels.
pub fn analytic_curve(p: &ObserverParams, cfg: &SweepConfig) -> Result<BodeCurve> {
    cfg.validate()?;
    let mut channels = cfg.channels.clone();
    channels.sort_unstable();
    let mut rows = Vec::with_capacity(cfg.freqs_hz.len() * channels.len());
    for &f_hz in &cfg.freqs_hz {
        let omega = TAU * f_hz;
        for &j in &channels {
            let e = analytic::transfer_eval(p, j, omega)?;
            rows.push(BodeRow {
                f_hz,
                omega,
                channel: j,
                magnitude_db: e.gain_db,
                phase: e.phase,
                phase_unwrapped: None,
                residual_rms: 0.0,
                c1: None,
                c2: None,
                flag: None,
            });
        }
    }
    let config = SweepConfig { channels, ..cfg.clone() };
    Ok(phase_unwrap(BodeCurve { source: Source::Analytic, params: *p.set(), config, rows }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::ParamSet;
    use std::f64::consts::FRAC_PI_4;

    fn grid(n: usize, h: f64) -> Vec<f64> {
        (1..=n).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn fits_pure_sine() {
        let omega = TAU;
        let t = grid(50_000, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| (omega * t).sin()).collect();
        let fit = fit_sinusoid(&t, &y, omega).unwrap();
        assert!((fit.c1 - 1.0).abs() < 1e-9);
        assert!(fit.c2.abs() < 1e-9);
        assert!((fit.amplitude - 1.0).abs() < 1e-9);
        assert!(fit.phase.abs() < 1e-9);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn fits_shifted_sine() {
        let omega = TAU * 0.6;
        let t = grid(50_000, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (omega * t + FRAC_PI_4).sin()).collect();
        let fit = fit_sinusoid(&t, &y, omega).unwrap();
        assert!((fit.c1 - 2f64.sqrt()).abs() < 1e-9);
        assert!((fit.c2 - 2f64.sqrt()).abs() < 1e-9);
        assert!((fit.amplitude - 2.0).abs() < 1e-9);
        assert!((fit.phase - FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn phase_keeps_quadrant() {
        let omega = 3.0;
        let t = grid(20_000, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| (omega * t - 2.5).sin()).collect();
        let fit = fit_sinusoid(&t, &y, omega).unwrap();
        assert!((fit.phase + 2.5).abs() < 1e-9);
        assert!(fit.c1 < 0.0);
    }

    #[test]
    fn rejects_degenerate_windows() {
        assert!(matches!(fit_sinusoid(&[0.0, 0.0], &[1.0, 1.0], 1.0), Err(Error::IllConditioned { .. })));
        assert!(matches!(
            fit_sinusoid(&[0.0, 1e-6, 2e-6], &[0.0, 0.0, 0.0], 1.0),
            Err(Error::IllConditioned { .. })
        ));
        assert!(fit_sinusoid(&[1.0], &[1.0], 1.0).is_err());
        assert!(fit_sinusoid(&[1.0, 2.0], &[1.0], 1.0).is_err());
        assert!(fit_sinusoid(&[1.0, 2.0], &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = paper_grid();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.1);
        assert!((g[199] - 99.6).abs() < 1e-12);
        assert_eq!(frequency_grid(1.0, 1.0, 3.0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_phases(&[0.5, 0.5, 0.5]), vec![0.5, 0.5, 0.5]);
        let u = unwrap_phases(&[2.9, 3.0, -3.0, -2.9]);
        assert_eq!(u[..2], [2.9, 3.0]);
        assert!((u[2] - (TAU - 3.0)).abs() < 1e-12);
        assert!((u[2] - 3.283).abs() < 1e-3);
        assert!((u[3] - (TAU - 2.9)).abs() < 1e-12);

        let ideal: Vec<f64> = paper_grid()
            .iter()
            .map(|f| {
                let h = analytic::limit_transfer(1, TAU * f).unwrap();
                h.im.atan2(h.re)
            })
            .collect();
        for u in unwrap_phases(&ideal) {
            assert!((u + PI).abs() < 1e-12);
        }
    }

    #[test]
    fn unwrap_skips_gaps() {
        let u = unwrap_phases(&[3.0, f64::NAN, -3.0]);
        assert!(u[1].is_nan());
        assert!((u[2] - (TAU - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig::default();
        assert!(ok.validate().is_ok());
        assert!(ok.warnings().is_empty());
        let unsorted = SweepConfig { freqs_hz: vec![2.0, 1.0], ..ok.clone() };
        assert!(unsorted.validate().is_err());
        let bad_channel = SweepConfig { channels: vec![1, 4], ..ok.clone() };
        assert!(bad_channel.validate().is_err());
        let dup = SweepConfig { channels: vec![2, 2], ..ok.clone() };
        assert!(dup.validate().is_err());
        let discard = SweepConfig { discard_fraction: 1.0, ..ok.clone() };
        assert!(discard.validate().is_err());
        let short = SweepConfig { samples: 1000, ..ok };
        assert_eq!(short.warnings().len(), 1);
    }

    #[test]
    fn single_frequency_matches_transfer() {
        let p = ObserverParams::new(ParamSet::linear((0.1, 0.1, 1.0), 0.2)).unwrap();
        let cfg = SweepConfig { freqs_hz: vec![1.0], discard_fraction: 0.5, ..SweepConfig::default() };
        let curve = sweep_observer(&p, &cfg).unwrap();
        assert_eq!(curve.rows.len(), 3);
        for row in &curve.rows {
            let e = analytic::transfer_eval(&p, row.channel, row.omega).unwrap();
            assert!((row.magnitude_db - e.gain_db).abs() < 0.5, "{row:?} vs {e:?}");
            let dp = (row.phase - e.phase + PI).rem_euclid(TAU) - PI;
            assert!(dp.abs() < 3f64.to_radians(), "{row:?} vs {e:?}");
        }
    }

    #[test]
    fn stiff_step_is_rejected() {
        let p = ObserverParams::new(ParamSet::linear((0.1, 0.1, 1.0), 0.2)).unwrap();
        let cfg = SweepConfig { freqs_hz: vec![1.0], step_h: 0.01, ..SweepConfig::default() };
        assert!(matches!(sweep_observer(&p, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn csv_layout() {
        let p = ObserverParams::new(ParamSet::linear((0.1, 0.1, 1.0), 0.2)).unwrap();
        let cfg = SweepConfig { freqs_hz: vec![1.0, 2.0], channels: vec![3, 1], ..SweepConfig::default() };
        let curve = analytic_curve(&p, &cfg).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        let cols: Vec<_> = lines[1].split(',').collect();
        assert_eq!(cols.len(), 9);
        assert_eq!(cols[2], "1");
        assert_eq!(cols[7], "analytic");
        assert_eq!(cols[8], "");
        assert_eq!(lines[2].split(',').nth(2), Some("3"));
    }
}

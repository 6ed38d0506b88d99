//! Command execution and output files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use dint::metrics::{self, TrajectoryMetrics};
use dint::observer::validate_params_with_floor;
use dint::sweep::{analytic_curve, sweep_observer, Crossing, Source};
use dint::{BodeCurve, Error, Mode, ObserverParams, ParamSet, Trajectory};

use crate::config::{Format, RunConfig};

/// Sweeps pass when at least this fraction of rows is unflagged.
pub const MIN_UNFLAGGED: f64 = 0.95;

/// A failed run with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const INVALID_PARAMS: u8 = 1;
    pub const BAD_CONFIG: u8 = 2;
    pub const DIVERGED: u8 = 3;

    pub fn config(message: impl Into<String>) -> Self {
        Self { code: Self::BAD_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) => Self::INVALID_PARAMS,
            Error::Diverged { .. } => Self::DIVERGED,
            _ => Self::BAD_CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::config(format!("json error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn observer(cfg: &RunConfig, set: ParamSet) -> Result<ObserverParams, Failure> {
    Ok(ObserverParams::with_epsilon_floor(set, cfg.params.epsilon_floor)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_with<F>(path: &Path, f: F) -> Outcome
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn prepare(out: &Path, cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(out)?;
    write_json(&out.join("effective_config.json"), cfg)
}

/// Prints one report line per parameter set; fails with exit 1 if any is invalid.
pub fn validate(cfg: &RunConfig) -> Outcome {
    let mut invalid = 0;
    for (set, (r, alpha3)) in cfg.param_sets().into_iter().zip(cfg.sweep_variants()) {
        let report = validate_params_with_floor(&set, cfg.params.epsilon_floor);
        invalid += !report.is_valid() as usize;
        println!("R={r} alpha3={alpha3} mode={}: {report}", mode_name(set.mode));
    }
    if invalid > 0 {
        return Err(Failure {
            code: Failure::INVALID_PARAMS,
            message: format!("{invalid} invalid parameter set(s)"),
        });
    }
    Ok(())
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Nonlinear => "nonlinear",
        Mode::Linear => "linear",
    }
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    run: &'a RunConfig,
    samples: usize,
    metrics: Option<TrajectoryMetrics>,
}

#[derive(Serialize)]
struct TrajectoryDocument<'a> {
    run: &'a RunConfig,
    trajectory: &'a Trajectory,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Outcome {
    let (Some(signal), Some(sim)) = (&cfg.signal, &cfg.sim) else {
        return Err(Failure::config("simulate needs `signal` and `sim` sections"));
    };
    let p = observer(cfg, cfg.params.param_set())?;
    let traj = match dint::solver::simulate(&p, signal, &sim.sim_config()) {
        Err(Error::Diverged { time }) => {
            let at = time.map_or("unknown time".to_string(), |t| format!("t = {t} s"));
            return Err(Failure { code: Failure::DIVERGED, message: format!("state diverged at {at}") });
        }
        other => other?,
    };
    prepare(out, cfg)?;
    match cfg.format {
        Format::Csv => write_with(&out.join("trajectory.csv"), |w| traj.write_csv(w))?,
        Format::Json => {
            write_json(&out.join("trajectory.json"), &TrajectoryDocument { run: cfg, trajectory: &traj })?
        }
    }
    let summary = metrics::summarize(&traj, &sim.windows());
    if let Some(m) = &summary {
        for w in &m.windows {
            println!(
                "rms error [{}, {}] s: e1 {:.6e}  e2 {:.6e}  e3 {:.6e}",
                w.from, w.to, w.rms[0], w.rms[1], w.rms[2]
            );
        }
        if let Some(d) = m.drift_ratio {
            println!("drift ratio {d:.6}");
        }
    }
    write_json(
        &out.join("metrics.json"),
        &SimulationReport { run: cfg, samples: traj.len(), metrics: summary },
    )
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    run: &'a RunConfig,
    source: Source,
    params: &'a ParamSet,
    config: &'a dint::SweepConfig,
    unflagged_fraction: f64,
    /// Highest frequency still within 3 dB of the ideal integrator, per
    /// channel; `null` when the crossing is off the grid.
    cutoff_3db_hz: Vec<(usize, Option<f64>)>,
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    #[serde(flatten)]
    summary: CurveSummary<'a>,
    rows: &'a [dint::sweep::BodeRow],
}

fn crossing_text(c: Crossing) -> String {
    match c {
        Crossing::Within(f) => format!("at {f:.3} Hz"),
        Crossing::AboveGrid => "above grid".into(),
        Crossing::BelowGrid => "below grid".into(),
    }
}

fn write_curve(cfg: &RunConfig, out: &Path, stem: &str, curve: &BodeCurve) -> Outcome {
    let channels = &curve.config.channels;
    let summary = CurveSummary {
        run: cfg,
        source: curve.source,
        params: &curve.params,
        config: &curve.config,
        unflagged_fraction: curve.unflagged_fraction(),
        cutoff_3db_hz: channels
            .iter()
            .map(|&j| match curve.cutoff_hz(j, 3.0) {
                Crossing::Within(f) => (j, Some(f)),
                _ => (j, None),
            })
            .collect(),
    };
    match cfg.format {
        Format::Csv => {
            write_with(&out.join(format!("{stem}.csv")), |w| curve.write_csv(w))?;
            write_json(&out.join(format!("{stem}.json")), &summary)?;
        }
        Format::Json => {
            write_json(&out.join(format!("{stem}.json")), &CurveDocument { summary, rows: &curve.rows })?;
        }
    }
    let mut line = format!("{stem}: {:.1}% unflagged", 100.0 * curve.unflagged_fraction());
    for &j in channels {
        let _ = write!(line, ", x{j} 3 dB {}", crossing_text(curve.cutoff_hz(j, 3.0)));
    }
    println!("{line}");
    Ok(())
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Outcome {
    let Some(section) = &cfg.sweep else {
        return Err(Failure::config("sweep needs a `sweep` section"));
    };
    if section.amplitudes.is_empty() {
        return Err(Failure::config("sweep needs at least one amplitude"));
    }
    let observers =
        cfg.param_sets().into_iter().map(|set| observer(cfg, set)).collect::<Result<Vec<_>, _>>()?;
    let configs: Vec<_> = section.amplitudes.iter().map(|&a| section.sweep_config(a)).collect();
    for c in &configs {
        c.validate()?;
        for w in c.warnings() {
            eprintln!("warning: {w}");
        }
    }
    prepare(out, cfg)?;

    let (mut rows, mut unflagged) = (0usize, 0.0);
    for (p, (r, alpha3)) in observers.iter().zip(cfg.sweep_variants()) {
        for c in &configs {
            let curve = sweep_observer(p, c)?;
            rows += curve.rows.len();
            unflagged += curve.unflagged_fraction() * curve.rows.len() as f64;
            let stem = format!("sweep_R{r}_a{alpha3}_A{}", c.amplitude);
            write_curve(cfg, out, &stem, &curve)?;
        }
        if p.mode() == Mode::Linear {
            // the exact response does not depend on the amplitude
            let exact = analytic_curve(p, &configs[0])?;
            write_curve(cfg, out, &format!("analytic_R{r}"), &exact)?;
        }
    }
    let fraction = if rows == 0 { 1.0 } else { unflagged / rows as f64 };
    if fraction < MIN_UNFLAGGED {
        return Err(Failure {
            code: Failure::DIVERGED,
            message: format!("only {:.1}% of sweep rows are unflagged", 100.0 * fraction),
        });
    }
    Ok(())
}

pub fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

//! `dint`: validate, simulate and sweep double-integrator observers.
//!
//! Exit codes: 0 ok, 1 invalid parameters, 2 bad configuration, 3 diverged
//! (or too many flagged sweep rows).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::{Command, Format, RunConfig};
use dint::presets::Figure;
use dint::Method;
use run::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk4,
    Euler,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rk4 => Method::Rk4,
            MethodArg::Euler => Method::Euler,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dint",
    version,
    about = "Double-integrator observers: validation, simulation, frequency sweeps"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Named scenario for `reproduce`: fig1 .. fig6.
    #[arg(long)]
    scenario: Option<String>,
    /// Fraction of sweep samples dropped before fitting.
    #[arg(long)]
    discard: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match cli.command {
        Command::Reproduce => {
            if cli.config.is_some() {
                return Err(Failure::config("reproduce takes --scenario, not --config"));
            }
            let name =
                cli.scenario.as_deref().ok_or_else(|| Failure::config("reproduce needs --scenario"))?;
            let fig = Figure::parse(name).ok_or_else(|| {
                Failure::config(format!("unknown scenario `{name}` (expected fig1 .. fig6)"))
            })?;
            config::reproduce_config(fig)
        }
        _ => {
            if cli.scenario.is_some() {
                return Err(Failure::config("--scenario is only valid with reproduce"));
            }
            let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config is required"))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            cfg.resolve(cli.command).map_err(Failure::config)?
        }
    };
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(m) = cli.method {
        if let Some(sim) = &mut cfg.sim {
            sim.method = m.into();
        }
        if let Some(sweep) = &mut cfg.sweep {
            sweep.method = m.into();
        }
    }
    if let Some(d) = cli.discard {
        match &mut cfg.sweep {
            Some(sweep) => sweep.discard_fraction = d,
            None => return Err(Failure::config("--discard applies to sweeps only")),
        }
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let cfg = load(&cli)?;
    let out = run::output_dir(cli.out, &cfg);
    let command = match cli.command {
        Command::Reproduce => cfg.command.expect("scenario configs name their command"),
        c => c,
    };
    match command {
        Command::Validate => run::validate(&cfg),
        Command::Simulate => run::simulate(&cfg, &out),
        Command::Sweep => run::sweep(&cfg, &out),
        Command::Reproduce => unreachable!("reproduce expands to simulate or sweep"),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

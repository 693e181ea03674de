//! Command-line front end over a JSON scenario file.
//!
//! Exit codes: 0 when the walk completes (or a sweep finishes), 1 for
//! configuration and I/O errors, 2 when a `run` ends in a fall.

pub mod output;
pub mod scenario_file;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::simulator::{
    compare_controllers, max_recoverable_push, run, ControlMode, EnvelopeSearch, Scenario,
};
use output::{
    comparison_csv, footsteps_csv, json_bytes, trajectory_csv, write_atomic, EnvelopeReport,
};
pub use scenario_file::{ScenarioError, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FALL: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DCMPC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dcmpc", version, about = "DCM walking MPC simulator")]
pub struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the scenario's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one walk and write the trajectory, footstep and summary files.
    Run {
        scenario: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
    },
    /// Run the scenario and both push envelopes under several modes.
    Compare {
        scenario: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "cop-only,cop+step,cop+step+cmp"
        )]
        modes: Vec<ControlMode>,
        /// Push duration for the envelope searches (s).
        #[arg(long, default_value_t = 0.1)]
        duration: f64,
        /// Bisection tolerance (N).
        #[arg(long, default_value_t = 5.0)]
        tol: f64,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
    },
    /// Largest recoverable push along one direction.
    Envelope {
        scenario: PathBuf,
        /// `x`, `y`, `-x`, `-y` or a vector `a,b`.
        #[arg(long = "dir", default_value = "x", allow_hyphen_values = true)]
        direction: Direction,
        #[arg(long, default_value_t = 0.1)]
        duration: f64,
        #[arg(long, default_value_t = 5.0)]
        tol: f64,
        /// Push onset (s); defaults to the middle of the first single support.
        #[arg(long)]
        start: Option<f64>,
        /// Ceiling for automatic bracket expansion (N).
        #[arg(long, default_value_t = 4000.0)]
        cap: f64,
        #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
    },
}

/// Unit push direction in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(pub [f64; 2]);

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = match s.trim() {
            "x" | "+x" => [1.0, 0.0],
            "-x" => [-1.0, 0.0],
            "y" | "+y" => [0.0, 1.0],
            "-y" => [0.0, -1.0],
            other => {
                let parts: Vec<f64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad direction {other:?}: {e}"))?;
                match parts.as_slice() {
                    [a, b] => [*a, *b],
                    _ => return Err(format!("direction {other:?} needs two components")),
                }
            }
        };
        let norm = v[0].hypot(v[1]);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(format!("direction {s:?} must be a non-zero finite vector"));
        }
        Ok(Self([v[0] / norm, v[1] / norm]))
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => f.write_str(m),
            Self::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<crate::error::MpcError> for CliError {
    fn from(e: crate::error::MpcError) -> Self {
        Self::Config(e.to_string())
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<(Scenario, ScenarioFile), CliError> {
    let mut file = ScenarioFile::load(path)?;
    if let Some(seed) = seed {
        file.sim.seed = seed;
    }
    Ok(file.resolve(&path.display().to_string())?)
}

fn save(dir: &Path, name: &str, bytes: std::io::Result<Vec<u8>>) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let bytes = bytes.map_err(|e| CliError::Io(path.clone(), e))?;
    write_atomic(&path, &bytes).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

fn cmd_run(path: &Path, out: &Path, seed: Option<u64>) -> Result<i32, CliError> {
    let (scenario, resolved) = load(path, seed)?;
    let ctx = scenario.validate()?;
    let log = run(&scenario)?;
    prepare(out)?;
    save(out, "trajectory.csv", trajectory_csv(&log))?;
    save(out, "footsteps.csv", footsteps_csv(&log, &ctx.timeline))?;
    let summary = json!({
        "scenario": scenario.name,
        "mode": ControlMode::of(&scenario.mpc),
        "outcome": log.outcome,
        "metrics": {
            "duration": log.samples.last().map_or(0.0, |s| s.t),
            "ticks_solved": log.ticks.len(),
            "max_qp_iterations": log.ticks.iter().map(|t| t.iterations).max().unwrap_or(0),
            "peak_Hdot": log.peak_hdot(),
            "max_dcm_error": log.max_dcm_error(),
            "max_foothold_deviation": log.max_foothold_deviation(),
        },
        "terminal_residuals": log.terminal,
        "predicted_terminal_residuals": log.predicted_terminal,
        "fall_rules": scenario.fall_rules(),
        "config": resolved,
    });
    save(out, "summary.json", json_bytes(&summary))?;
    if log.outcome.completed() {
        println!("{}: completed ({} ticks)", scenario.name, log.ticks.len());
        Ok(EXIT_OK)
    } else {
        if let crate::simulator::Outcome::Fell { t, reason } = &log.outcome {
            println!("{}: fell at t = {t:.3} s: {reason}", scenario.name);
        }
        Ok(EXIT_FALL)
    }
}

fn cmd_compare(
    path: &Path,
    modes: &[ControlMode],
    search: EnvelopeSearch,
    out: &Path,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    if modes.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least two modes, got {}",
            modes.len()
        )));
    }
    let (scenario, _) = load(path, seed)?;
    let rows = compare_controllers(&scenario, modes, &search)?;
    prepare(out)?;
    save(out, "comparison.csv", comparison_csv(&rows))?;
    for r in &rows {
        println!(
            "{:<14} forward {:>8.1} N  lateral {:>8.1} N",
            r.mode.as_str(),
            r.envelope_forward.magnitude,
            r.envelope_lateral.magnitude
        );
    }
    Ok(EXIT_OK)
}

fn cmd_envelope(
    path: &Path,
    search: EnvelopeSearch,
    out: &Path,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let (scenario, _) = load(path, seed)?;
    let env = max_recoverable_push(&scenario, &search)?;
    prepare(out)?;
    let report = EnvelopeReport {
        scenario: &scenario.name,
        mode: ControlMode::of(&scenario.mpc).to_string(),
        envelope: &env,
    };
    save(out, "envelope.json", json_bytes(&report))?;
    let bound = if env.unbounded {
        " (unbounded up to cap)"
    } else {
        ""
    };
    println!("max recoverable push: {:.1} N{bound}", env.magnitude);
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Run { scenario, out } => cmd_run(&scenario, &out, seed),
        Command::Compare {
            scenario,
            modes,
            duration,
            tol,
            out,
        } => {
            let search = EnvelopeSearch {
                duration,
                tolerance: tol,
                ..EnvelopeSearch::default()
            };
            cmd_compare(&scenario, &modes, search, &out, seed)
        }
        Command::Envelope {
            scenario,
            direction,
            duration,
            tol,
            start,
            cap,
            out,
        } => {
            let search = EnvelopeSearch {
                direction: direction.0,
                duration,
                start,
                tolerance: tol,
                cap,
                ..EnvelopeSearch::default()
            };
            cmd_envelope(&scenario, search, &out, seed)
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

//! Command-line front end. Exit status is 0 on success, 1 for usage and
//! validation errors, 2 for runtime failures (divergence, non-convergence,
//! unwritable outputs).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::exec::Execution;
use crate::fpf::{self, DesignGrid};
use crate::io::{self, Mode, ReadError, RunSummary};
use crate::scenario::{self, RunResult, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fpf-nav", version, about = "Formation potential field design maps, assembly and navigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the scaled formation radius over a (K_v, varsigma) grid.
    DesignMap {
        #[arg(long, allow_hyphen_values = true)]
        kv_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        kv_max: f64,
        #[arg(long, allow_hyphen_values = true)]
        vs_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        vs_max: f64,
        /// Cells per axis.
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seed the robots and let them self-organize around the virtual agent.
    Assemble(RunArgs),
    /// Assemble, then drive the formation to the goal.
    Navigate(RunArgs),
    /// Validate a scenario file without running it.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_traj: PathBuf,
    #[arg(long)]
    out_summary: PathBuf,
}

/// A failure together with the exit status it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INVALID, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: EXIT_RUNTIME, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MalformedParameter { .. }
            | Error::InvalidParams(_)
            | Error::MalformedRange(_)
            | Error::InvalidScenario { .. } => Failure::invalid(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    io::read_scenario(path).map_err(|e| match e {
        ReadError::Io(err) => Failure::invalid(format!("cannot read {}: {err}", path.display())),
        ReadError::Config(err) => Failure::invalid(format!("{}: {err}", path.display())),
    })
}

fn write_outputs(args: &RunArgs, summary: &RunSummary, result: &RunResult) -> Result<(), Failure> {
    let unwritable = |p: &Path, e: std::io::Error| Failure::runtime(format!("cannot write {}: {e}", p.display()));
    io::write_trajectory(result, &args.out_traj).map_err(|e| unwritable(&args.out_traj, e))?;
    io::write_summary(summary, &args.out_summary).map_err(|e| unwritable(&args.out_summary, e))
}

fn run_scenario(mode: Mode, args: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let s = load(&args.config)?;
    let started = Instant::now();
    let assembled = scenario::assemble(&s)?;
    let result = match mode {
        Mode::Assemble => assembled,
        Mode::Navigate => {
            if !assembled.termination.is_success() {
                return Err(Failure::runtime(format!(
                    "assembly did not converge within {} steps",
                    s.assembly_config().max_steps
                )));
            }
            scenario::navigate(&s, assembled.final_state())?
        }
    };
    let summary = RunSummary::new(mode, &s, &result, started.elapsed().as_secs_f64());
    write_outputs(args, &summary, &result)?;
    let _ = writeln!(
        out,
        "{:?}: {} steps, final rms error {:.3e}, {} collision events",
        summary.termination, summary.steps, summary.final_metrics.formation_rms_error, summary.collision_events
    );
    if !result.termination.is_success() {
        return Err(Failure::runtime(format!("no convergence within {} steps", summary.steps)));
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::DesignMap { kv_min, kv_max, vs_min, vs_max, grid, out: path } => {
            let g = DesignGrid::square((kv_min, kv_max), (vs_min, vs_max), grid);
            let entries = fpf::design_map(&g, Execution::default())?;
            io::write_design_map(&entries, &path)
                .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
            let solved = entries.iter().filter(|e| e.scaled_radius.is_some()).count();
            let _ = writeln!(out, "{} cells, {solved} with an equilibrium", entries.len());
            Ok(())
        }
        Command::Assemble(args) => run_scenario(Mode::Assemble, &args, out),
        Command::Navigate(args) => run_scenario(Mode::Navigate, &args, out),
        Command::Check { config } => {
            let s = load(&config)?;
            let radius = s.formation_radius()?;
            let _ = writeln!(out, "ok: {} robots, formation radius {radius:.6}", s.n_robots);
            Ok(())
        }
    }
}

/// Parse `args` (including the program name) and run. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            return if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            } else {
                let _ = write!(err, "{}", e.render());
                EXIT_INVALID
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

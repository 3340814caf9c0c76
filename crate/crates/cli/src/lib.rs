//! The `cascade` command-line tool.
//!
//! Every subcommand prints a JSON run report on stdout: tool version, input
//! digests, the full configuration, results and wall time. Exit codes are
//! 0 on success, 1 for usage or configuration errors, 2 for data errors and
//! 3 for internal failures.

pub mod cli;
pub mod commands;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod tsv;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::Value;

use crate::cli::{Cli, Command};
use crate::commands::*;
use crate::error::{CliError, CliResult, Context, EXIT_OK, EXIT_USAGE};
use crate::report::{digest_file, to_writer, write_json, Outcome, RunReport};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CASCADE_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool built earlier in this process wins; that only happens in tests.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_sim_file(path: &Path) -> CliResult<SimFile> {
    let text = fs::read_to_string(path).at(path)?;
    let sim: SimFile = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(sim.rebased(path.parent().unwrap_or(Path::new(""))))
}

fn with_seed_flag(mut outcome: Outcome, generated: bool) -> Outcome {
    if let Value::Object(map) = &mut outcome.config {
        map.insert("seed_generated".into(), Value::Bool(generated));
    }
    outcome
}

fn dispatch(command: &Command) -> CliResult<(Outcome, Option<PathBuf>)> {
    Ok(match command {
        Command::Ingest(a) => (
            ingest(&IngestParams {
                adoptions: a.adoptions.clone(),
                follows: a.follows.clone(),
                out: a.out.clone(),
                reverse_edges: a.reverse_edges,
                mutual_only: a.mutual_only,
                strict: a.strict,
                time_unit: a.time_unit,
                force: a.force,
            })?,
            a.report.report.clone(),
        ),
        Command::Thresholds(a) => (
            thresholds(&ThresholdsParams {
                snapshot: a.snapshot.clone(),
                exposures_out: a.out.clone(),
                per_user_out: a.per_user.clone(),
                density_out: a.density.clone(),
                density_of: a.density_of,
                bandwidth: a.bandwidth,
                ties: a.exposure.ties,
                popularity: a.exposure.popularity,
            })?,
            a.summary.clone(),
        ),
        Command::FitPowerlaw(a) => {
            let (seed, generated) = resolve_seed(a.seed);
            let outcome = fit_powerlaw(&FitParams {
                snapshot: a.snapshot.clone(),
                measure: a.measure,
                bootstrap: a.bootstrap,
                seed,
                xmin: a.xmin,
                max_alpha: (!a.no_alpha_cap).then_some(a.max_alpha),
                rank_out: a.out.clone(),
                histogram_out: a.histogram.clone(),
            })?;
            (with_seed_flag(outcome, generated), a.report.report.clone())
        }
        Command::Curve(a) => (
            curve(&CurveParams {
                snapshot: a.snapshot.clone(),
                tag: a.tag.clone(),
                bucket: a.bucket.clone(),
                out: a.out.clone(),
            })?,
            a.report.report.clone(),
        ),
        Command::Correlate(a) => (
            correlate(&CorrelateParams {
                snapshot: a.snapshot.clone(),
                bins: a.bins,
                method: a.method,
                ties: a.exposure.ties,
                popularity: a.exposure.popularity,
                out: a.out.clone(),
            })?,
            a.report.report.clone(),
        ),
        Command::Simulate(a) => {
            let inputs = vec![digest_file(&a.config)?];
            let sim = load_sim_file(&a.config)?;
            let (seed, generated) = resolve_seed(a.seed);
            let outcome = simulate(
                &SimulateParams {
                    model: a.model,
                    sim,
                    runs: a.runs,
                    seed,
                    out: a.out.clone(),
                },
                inputs,
            )?;
            (with_seed_flag(outcome, generated), a.report.report.clone())
        }
        Command::Recover(a) => (
            recover(&RecoverParams {
                runs: a.runs.clone(),
                out: a.out.clone(),
            })?,
            a.report.report.clone(),
        ),
        Command::Pipeline(a) => (pipeline::run_pipeline(&a.config, a.seed)?, a.report.report.clone()),
        Command::Stats(a) => (
            stats(&StatsParams {
                snapshot: a.snapshot.clone(),
            })?,
            a.report.report.clone(),
        ),
    })
}

fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    configure_threads()?;
    let started = Instant::now();
    let (outcome, report_path) = dispatch(command)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let report = RunReport::new(command.name(), outcome, elapsed_ms);
    if let Some(path) = &report_path {
        write_json(path, &report)?;
    }
    to_writer(stdout, &report).map_err(|e| CliError::Internal(format!("stdout: {e}")))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

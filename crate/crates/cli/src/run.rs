use std::ffi::OsString;
use std::ops::ControlFlow;
use std::path::Path;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use lifted_nmf::{
    audit_step, kkt_report, normalize_problem, solve_with, SolveResult, SolverConfig, Status,
};

use crate::args::Args;
use crate::csv_io::{format_value, ingest_matrix, write_matrix};
use crate::error::CliError;
use crate::manifest::{KktSummary, RunManifest};
use crate::output::write_atomic;
use crate::trace::trace_jsonl;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Converged = 0,
    OutputFailure = 1,
    MaxIters = 2,
    Underflow = 3,
    InputError = 4,
    IdentityViolation = 5,
}

/// Exit code for a finished solve. An aborted run can only come from a failed
/// identity check.
pub fn exit_code(status: Status) -> ExitCode {
    match status {
        Status::Converged => ExitCode::Converged,
        Status::MaxIters => ExitCode::MaxIters,
        Status::Underflow => ExitCode::Underflow,
        Status::Aborted => ExitCode::IdentityViolation,
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => ExitCode::InputError as i32,
            };
        }
    };
    match run_with(&args) {
        Ok(outcome) => {
            eprintln!(
                "status={} iterations={} divergence={}",
                outcome.manifest.status,
                outcome.manifest.iterations,
                outcome
                    .manifest
                    .final_divergence
                    .map_or_else(|| "inf".to_string(), format_value),
            );
            outcome.code as i32
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::InputError as i32
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: {e}");
            ExitCode::OutputFailure as i32
        }
    }
}

/// Result of a completed run whose outputs were written.
#[derive(Debug)]
pub struct Outcome {
    pub code: ExitCode,
    pub manifest: RunManifest,
    pub violations: Vec<String>,
}

/// Why a run produced no outputs.
#[derive(Debug)]
pub enum Failure {
    Input(CliError),
    Output(CliError),
}

fn config_from(args: &Args) -> Result<SolverConfig, CliError> {
    let too_big = |_| CliError::Usage("value does not fit in usize".into());
    let mut config = SolverConfig::new(usize::try_from(args.k).map_err(too_big)?);
    config.max_iters = usize::try_from(args.max_iters).map_err(too_big)?;
    config.tol_gain = args.tol;
    config.variant = args.variant.into();
    config.init = args.init.into();
    config.seed = args.seed;
    config.record_components = args.components;
    if !(args.kkt_tol.is_finite() && args.kkt_tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--kkt-tol must be finite and positive, got {}",
            args.kkt_tol
        )));
    }
    Ok(config)
}

/// Runs with parsed arguments and writes every output file.
pub fn run_with(args: &Args) -> Result<Outcome, Failure> {
    let config = config_from(args).map_err(Failure::Input)?;
    let v = ingest_matrix(&args.input).map_err(Failure::Input)?;

    let started = Instant::now();
    let mut violations = Vec::new();
    let result = if args.check_identities {
        solve_with(&v, &config, |view| {
            let found = match audit_step(view.p, view.before, view.after, view.half) {
                Ok(checks) => checks
                    .iter()
                    .filter(|c| !c.passed())
                    .map(|c| {
                        format!(
                            "iteration {}: {} residual {:e} exceeds {:e}",
                            view.record.iter, c.name, c.residual, c.tolerance
                        )
                    })
                    .collect(),
                Err(e) => vec![format!("iteration {}: audit failed: {e}", view.record.iter)],
            };
            if found.is_empty() {
                ControlFlow::Continue(())
            } else {
                violations.extend(found);
                ControlFlow::Break(())
            }
        })
    } else {
        solve_with(&v, &config, |_| ControlFlow::Continue(()))
    }
    .map_err(|e| Failure::Input(e.into()))?;
    let wall_time_ms = u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX);
    for line in &violations {
        eprintln!("identity violation: {line}");
    }

    let kkt = if args.kkt {
        kkt_summary(&v, &result, args.kkt_tol)
    } else {
        None
    };
    let manifest = RunManifest {
        input: args.input.display().to_string(),
        k: config.inner_size,
        variant: config.variant.as_str(),
        init: config.init.as_str(),
        seed: config.seed,
        max_iters: config.max_iters,
        tol: config.tol_gain,
        record_components: config.record_components,
        underflow_guard: config.underflow_guard,
        check_identities: args.check_identities,
        total: result.total,
        status: result.status.as_str(),
        final_divergence: result.final_divergence.finite(),
        effective_inner_size: result.effective_inner_size,
        iterations: result.iterations(),
        wall_time_ms,
        kkt,
    };
    write_outputs(args, &result, &manifest).map_err(Failure::Output)?;
    Ok(Outcome {
        code: exit_code(result.status),
        manifest,
        violations,
    })
}

fn kkt_summary(v: &lifted_nmf::NonnegMatrix, result: &SolveResult, tol: f64) -> Option<KktSummary> {
    let problem = normalize_problem(v).ok()?;
    match kkt_report(problem.p(), &result.pair, tol) {
        Ok(report) => Some(KktSummary::from(&report)),
        Err(e) => {
            eprintln!("warning: no optimality report: {e}");
            None
        }
    }
}

fn write_outputs(args: &Args, result: &SolveResult, manifest: &RunManifest) -> Result<(), CliError> {
    let dir = args.out_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let (w, h) = result.factors();
    write_matrix(&dir.join("W.csv"), &w)?;
    write_matrix(&dir.join("H.csv"), &h)?;
    let json = manifest.to_json().map_err(|source| CliError::Serialize {
        what: "manifest",
        source,
    })?;
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    if let Some(path) = &args.trace {
        write_trace(path, result)?;
    }
    Ok(())
}

fn write_trace(path: &Path, result: &SolveResult) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_atomic(path, trace_jsonl(&result.trace).as_bytes())
}

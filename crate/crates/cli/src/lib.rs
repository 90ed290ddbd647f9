//! File-based front end for `lifted-nmf`.
//!
//! Reads a dense matrix from CSV and runs the solver with a configuration given
//! on the command line. The denormalized factors go to CSV next to a JSON
//! manifest, and the trace optionally to JSON Lines. Every file is written
//! atomically.

mod args;
mod csv_io;
mod error;
mod manifest;
mod output;
mod run;
mod trace;

pub use args::{Args, InitArg, VariantArg};
pub use csv_io::{emit_matrix, format_value, ingest_matrix, read_matrix, write_matrix};
pub use error::CliError;
pub use manifest::{KktSummary, RunManifest};
pub use output::write_atomic;
pub use run::{exit_code, run, run_with, ExitCode, Failure, Outcome};
pub use trace::{trace_jsonl, TraceLine};

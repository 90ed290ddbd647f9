//! The matrix file format: one row per line, comma-separated decimals, no
//! header. Blank lines are skipped on input.

use std::io::Read;
use std::path::Path;

use lifted_nmf::NonnegMatrix;

use crate::error::CliError;
use crate::output::write_atomic;

/// Parses a matrix from CSV text. `path` only labels errors.
pub fn read_matrix<R: Read>(mut reader: R, path: &Path) -> Result<NonnegMatrix, CliError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| CliError::io(path, e))?;
    // The reader's own line count skips blank lines, so count from byte offsets.
    let physical_line = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut end = usize::try_from(p.byte()).map_or(bytes.len(), |b| b.min(bytes.len()));
            // A record's offset points at any blank lines skipped before it.
            while end < bytes.len() && matches!(bytes[end], b'\r' | b'\n') {
                end += 1;
            }
            1 + bytes[..end].iter().filter(|&&b| b == b'\n').count() as u64
        })
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = physical_line(e.position());
            csv_error(path, line, e)
        })?;
        let line = physical_line(record.position());
        let width = record.len();
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected {c} fields, found {width}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("field {} is not a number: {field:?}", j + 1),
            })?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(CliError::Validation {
                    path: path.to_path_buf(),
                    row: rows,
                    col: j + 1,
                    value,
                });
            }
            data.push(value);
        }
    }
    let cols = match cols {
        Some(c) if rows > 0 => c,
        _ => return Err(CliError::Empty { path: path.to_path_buf() }),
    };
    Ok(NonnegMatrix::new(rows, cols, data)?)
}

fn csv_error(path: &Path, line: u64, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads and validates the matrix stored at `path`.
pub fn ingest_matrix(path: &Path) -> Result<NonnegMatrix, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_matrix(file, path)
}

/// Shortest decimal that parses back to exactly `x` (never more than 17
/// significant digits). Plain notation in the usual range, exponent notation
/// outside it.
pub fn format_value(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Renders `m` in the input dialect.
pub fn emit_matrix(m: &NonnegMatrix) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|&x| format_value(x)))
            .expect("writing to memory cannot fail");
    }
    let bytes = wtr.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("decimal text is ASCII")
}

/// Atomically writes `m` to `path`.
pub fn write_matrix(path: &Path, m: &NonnegMatrix) -> Result<(), CliError> {
    write_atomic(path, emit_matrix(m).as_bytes())
}

//! Field snapshot files.
//!
//! * Plain PGM (`P2`, maxval 65535): values mapped linearly from
//!   `[0, display_max]` and clamped. Rows are written in index order, so the
//!   first image row is `j = 0`.
//! * Raw CSV: first line `nx`, then `nx` lines of `nx` comma-separated values
//!   in row-major order, printed with round-trip precision.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::grid::{Field, GridError, GridSpec};

pub const PGM_MAXVAL: u32 = 65535;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed field CSV at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn to_pgm_string(field: &Field, display_max: f64) -> String {
    let nx = field.grid().nx();
    let scale = if display_max > 0.0 {
        PGM_MAXVAL as f64 / display_max
    } else {
        0.0
    };
    let mut out = format!("P2\n{nx} {nx}\n{PGM_MAXVAL}\n");
    for row in field.values().chunks(nx) {
        let mut first = true;
        for &v in row {
            let level = (v * scale).round().clamp(0.0, PGM_MAXVAL as f64) as u32;
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{level}");
        }
        out.push('\n');
    }
    out
}

pub fn write_pgm(field: &Field, path: &Path, display_max: f64) -> io::Result<()> {
    std::fs::write(path, to_pgm_string(field, display_max))
}

pub fn to_csv_string(field: &Field) -> String {
    let nx = field.grid().nx();
    let mut out = format!("{nx}\n");
    for row in field.values().chunks(nx) {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(field: &Field, path: &Path) -> io::Result<()> {
    std::fs::write(path, to_csv_string(field))
}

/// Parses the raw CSV format onto a grid of side `length`.
pub fn from_csv_str(text: &str, length: f64) -> Result<Field, SnapshotError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, reason: String| SnapshotError::Parse { line: line + 1, reason };
    let (idx, first) = lines.next().ok_or_else(|| parse_err(0, "empty input".into()))?;
    let nx: usize = first
        .trim()
        .parse()
        .map_err(|e| parse_err(idx, format!("bad grid size: {e}")))?;
    let grid = GridSpec::new(nx, length)?;
    let mut values = Vec::with_capacity(grid.cell_count());
    for (idx, line) in lines {
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| parse_err(idx, format!("bad value {tok:?}: {e}")))?;
            values.push(v);
        }
    }
    Ok(Field::new(grid, values)?)
}

pub fn read_csv(path: &Path, length: f64) -> Result<Field, SnapshotError> {
    from_csv_str(&std::fs::read_to_string(path)?, length)
}

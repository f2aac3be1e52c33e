//! Error norms between trajectories, the per-step error record, and
//! exponential-decay fits over it.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::grid::{l2_norm, Field, GridError};

/// Denominator floor for relative errors.
pub const REL_FLOOR: f64 = 1e-300;
/// Rows at or below this error are treated as the round-off plateau and left
/// out of decay fits.
pub const DEFAULT_FIT_FLOOR: f64 = 1e-13;
/// Fewest rows a decay fit accepts.
pub const MIN_FIT_ROWS: usize = 10;

pub const CSV_HEADER: &str = "step,t,rel_err_u,rel_err_v,abs_err_u,abs_err_v,nudging_active";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("row step {step} does not follow previous step {previous}")]
    NonIncreasingStep { step: usize, previous: usize },
    #[error("row {step} carries a negative or non-finite error")]
    BadError { step: usize },
    #[error("decay fit needs at least {MIN_FIT_ROWS} rows above the floor, found {0}")]
    TooFewRows(usize),
    #[error("malformed error-series CSV at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    pub abs: f64,
    pub rel: f64,
    /// The reference norm fell below [`REL_FLOOR`].
    pub degenerate: bool,
}

/// Discrete L2 distance of `a` from the reference `b`, absolute and relative
/// to `‖b‖`.
pub fn l2_error(a: &Field, b: &Field) -> Result<L2Error, GridError> {
    let diff = a.sub(b)?;
    let abs = l2_norm(&diff);
    let reference = l2_norm(b);
    let degenerate = reference < REL_FLOOR;
    Ok(L2Error {
        abs,
        rel: abs / reference.max(REL_FLOOR),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub step: usize,
    pub t: f64,
    pub rel_err_u: f64,
    pub rel_err_v: f64,
    pub abs_err_u: f64,
    pub abs_err_v: f64,
    pub nudging_active: bool,
}

/// Which error a fit or a query looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    U,
    V,
    /// `sqrt(abs_u² + abs_v²)`.
    Combined,
}

impl ErrorRow {
    pub fn error(&self, species: Species) -> f64 {
        match species {
            Species::U => self.rel_err_u,
            Species::V => self.rel_err_v,
            Species::Combined => self.abs_err_u.hypot(self.abs_err_v),
        }
    }
}

/// Time-ordered error rows of a paired run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    rows: Vec<ErrorRow>,
}

impl ErrorSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ErrorRow) -> Result<(), MetricsError> {
        if let Some(last) = self.rows.last() {
            if row.step <= last.step {
                return Err(MetricsError::NonIncreasingStep {
                    step: row.step,
                    previous: last.step,
                });
            }
        }
        let ok = |e: f64| e.is_finite() && e >= 0.0;
        if !(ok(row.rel_err_u) && ok(row.rel_err_v) && ok(row.abs_err_u) && ok(row.abs_err_v)) {
            return Err(MetricsError::BadError { step: row.step });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ErrorRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&ErrorRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First time at which the error drops to `threshold` or below.
    pub fn time_to_reach(&self, threshold: f64, species: Species) -> Option<f64> {
        self.rows.iter().find(|r| r.error(species) <= threshold).map(|r| r.t)
    }

    /// Keeps every `every`-th row plus the last one.
    pub fn thinned(&self, every: usize) -> ErrorSeries {
        let every = every.max(1);
        let n = self.rows.len();
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(k, _)| k % every == 0 || k + 1 == n)
            .map(|(_, r)| *r)
            .collect();
        ErrorSeries { rows }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            // `{}` on f64 prints the shortest representation that round-trips.
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.step,
                r.t,
                r.rel_err_u,
                r.rel_err_v,
                r.abs_err_u,
                r.abs_err_v,
                u8::from(r.nudging_active)
            );
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, MetricsError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == CSV_HEADER => {}
            _ => {
                return Err(MetricsError::Parse {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        }
        let mut series = ErrorSeries::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let bad = |reason: &str| MetricsError::Parse {
                line: line_no,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad("expected 7 columns"));
            }
            let num = |k: usize| cols[k].trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
            let step = cols[0].trim().parse::<usize>().map_err(|e| bad(&e.to_string()))?;
            let nudging_active = match cols[6].trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(bad(&format!("bad activity flag {other:?}"))),
            };
            series.push(ErrorRow {
                step,
                t: num(1)?,
                rel_err_u: num(2)?,
                rel_err_v: num(3)?,
                abs_err_u: num(4)?,
                abs_err_v: num(5)?,
                nudging_active,
            })?;
        }
        Ok(series)
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}

/// Least-squares line through `(t, ln err)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub t_start: f64,
    pub t_end: f64,
    pub rows_used: usize,
    /// d(ln err)/dt.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayFit {
    /// Rate `δ` under the reading `‖e‖² ~ e^{-2δt}`.
    pub fn delta(&self) -> f64 {
        -self.slope / 2.0
    }
}

/// Fits `ln err` against `t` over rows with `t_start ≤ t ≤ t_end` whose error
/// exceeds `floor`.
pub fn fit_decay(
    series: &ErrorSeries,
    window: (f64, f64),
    species: Species,
    floor: f64,
) -> Result<DecayFit, MetricsError> {
    let points: Vec<(f64, f64)> = series
        .rows
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.error(species)))
        .filter(|&(_, e)| e > floor && e.is_finite())
        .map(|(t, e)| (t, e.ln()))
        .collect();
    fit_points(&points, window)
}

fn fit_points(points: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, MetricsError> {
    let n = points.len();
    if n < MIN_FIT_ROWS {
        return Err(MetricsError::TooFewRows(n));
    }
    let nf = n as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        let dt = t - mean_t;
        let dy = y - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    // A flat series has nothing to explain; report r² = 0 rather than 0/0.
    let r_squared = if syy > 0.0 && stt > 0.0 {
        (sty * sty / (stt * syy)).min(1.0)
    } else {
        0.0
    };
    Ok(DecayFit {
        t_start: window.0,
        t_end: window.1,
        rows_used: n,
        slope,
        intercept,
        r_squared,
    })
}

/// A maximal run of rows sharing one nudging-activity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub active: bool,
    pub rows: usize,
    /// `None` when the segment has too few rows above the floor.
    pub fit: Option<DecayFit>,
}

/// Splits the series at activity transitions and fits each piece.
pub fn staircase_segments(series: &ErrorSeries, species: Species, floor: f64) -> Vec<Segment> {
    let mut segments = Vec::new();
    for chunk in series.rows.chunk_by(|a, b| a.nudging_active == b.nudging_active) {
        let window = (chunk[0].t, chunk[chunk.len() - 1].t);
        let points: Vec<(f64, f64)> = chunk
            .iter()
            .map(|r| (r.t, r.error(species)))
            .filter(|&(_, e)| e > floor && e.is_finite())
            .map(|(t, e)| (t, e.ln()))
            .collect();
        segments.push(Segment {
            t_start: window.0,
            t_end: window.1,
            active: chunk[0].nudging_active,
            rows: chunk.len(),
            fit: fit_points(&points, window).ok(),
        });
    }
    segments
}

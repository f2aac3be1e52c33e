//! Gray-Scott model parameters, nudging schedules, and the semi-implicit
//! time steppers for the reference and the nudged trajectories.

mod energy;
mod run;
mod stepper;
mod theory;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{Field, GridError};
use crate::solver::{SolveError, SolveReport};

pub use energy::{energy_diagnostics, EnergyRecord, EnergyTracker};
pub use run::{run_pair, run_truth, Frame, PairOutcome, PairSetup, TruthOutcome};
pub use stepper::{observe_state, Gains, Observations, Stepper};
pub use theory::{check_theory, Condition, ConditionReport, TheoryConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite {field} at cell {cell} in step {step}")]
    NonFinite {
        step: usize,
        field: &'static str,
        cell: usize,
    },
    #[error("{field} solve did not converge in step {step} ({} iterations, residual {:e})", report.iterations, report.final_residual_norm)]
    SolverFailed {
        step: usize,
        field: &'static str,
        report: SolveReport,
    },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> StepError {
    StepError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Diffusivities and reaction rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub d_u: f64,
    pub d_v: f64,
    /// Feed rate `F`.
    pub feed: f64,
    /// Kill rate `k`.
    pub kill: f64,
}

impl ModelParams {
    /// Labyrinth regime used throughout the experiments.
    pub const LABYRINTH: ModelParams = ModelParams {
        d_u: 1.6e-5,
        d_v: 8e-6,
        feed: 0.037,
        kill: 0.060,
    };

    pub fn validate(&self) -> Result<(), StepError> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("d_u", self.d_u)?;
        positive("d_v", self.d_v)?;
        positive("feed", self.feed)?;
        positive("kill", self.kill)
    }
}

/// When the nudging term is switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    FromStart,
    /// Off before `t_on`, on from then on.
    Delayed {
        t_on: f64,
    },
    /// `on` time units active, then `off` inactive, repeating from `t = 0`.
    Periodic {
        on: f64,
        off: f64,
    },
}

impl Schedule {
    pub fn is_active(&self, t: f64) -> bool {
        match *self {
            Schedule::FromStart => true,
            Schedule::Delayed { t_on } => t >= t_on,
            Schedule::Periodic { on, off } => t.rem_euclid(on + off) < on,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            Schedule::FromStart => Ok(()),
            Schedule::Delayed { t_on } if ok(t_on) => Ok(()),
            Schedule::Periodic { on, off } if ok(on) && ok(off) && on + off > 0.0 => Ok(()),
            other => Err(invalid("schedule", format!("bad timing in {other}"))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::FromStart => write!(f, "from-start"),
            Schedule::Delayed { t_on } => write!(f, "delayed:{t_on}"),
            Schedule::Periodic { on, off } => write!(f, "periodic:{on}:{off}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = String;

    /// `from-start`, `delayed:<t_on>` or `periodic:<on>:<off>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|e| format!("bad number {p:?} in schedule {s:?}: {e}"))
        };
        match parts.as_slice() {
            ["from-start"] => Ok(Schedule::FromStart),
            ["delayed", t] => Ok(Schedule::Delayed { t_on: num(t)? }),
            ["periodic", on, off] => Ok(Schedule::Periodic {
                on: num(on)?,
                off: num(off)?,
            }),
            _ => Err(format!(
                "unknown schedule {s:?}; expected from-start, delayed:<t>, or periodic:<on>:<off>"
            )),
        }
    }
}

/// Feedback gains and when they apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NudgingParams {
    pub mu_u: f64,
    pub mu_v: f64,
    pub schedule: Schedule,
}

impl NudgingParams {
    pub fn validate(&self) -> Result<(), StepError> {
        for (name, v) in [("mu_u", self.mu_u), ("mu_v", self.mu_v)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        self.schedule.validate()
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu_u.max(self.mu_v)
    }

    /// Gains in force for the step starting at `t`.
    pub fn gains_at(&self, t: f64) -> Gains {
        if self.schedule.is_active(t) {
            Gains {
                mu_u: self.mu_u,
                mu_v: self.mu_v,
            }
        } else {
            Gains::OFF
        }
    }

    /// Both gains zero: the nudged run is a free forecast.
    pub fn is_control(&self) -> bool {
        self.mu_u == 0.0 && self.mu_v == 0.0
    }
}

/// Uniform time levels `t_n = n·dt`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self, StepError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        Ok(Self { dt, n_steps })
    }

    /// Enough steps of size `dt` to reach `t_end` (rounded to the nearest step).
    pub fn to_horizon(dt: f64, t_end: f64) -> Result<Self, StepError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid("t_end", format!("must be positive, got {t_end}")));
        }
        let n = (t_end / dt).round().max(1.0) as usize;
        Self::new(dt, n)
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Both concentrations at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
    pub step: usize,
}

impl State {
    pub fn new(u: Field, v: Field) -> Result<Self, GridError> {
        u.grid().ensure_same(v.grid())?;
        Ok(Self { u, v, t: 0.0, step: 0 })
    }

    /// Homogeneous steady state `u ≡ 1, v ≡ 0`.
    pub fn steady(grid: crate::grid::GridSpec) -> Self {
        Self {
            u: Field::constant(grid, 1.0),
            v: Field::zeros(grid),
            t: 0.0,
            step: 0,
        }
    }

    pub fn grid(&self) -> &crate::grid::GridSpec {
        self.u.grid()
    }

    /// Cellwise `0 ≤ u ≤ 1` and `0 ≤ v ≤ v_max`, each with slack `tol`.
    pub fn within_bounds(&self, v_max: f64, tol: f64) -> bool {
        self.u.values().iter().all(|&u| u >= -tol && u <= 1.0 + tol)
            && self.v.values().iter().all(|&v| v >= -tol && v <= v_max + tol)
    }
}

//! Finite-volume Gray-Scott simulator with nudging data assimilation.
//!
//! A reference ("truth") trajectory is advanced with a semi-implicit scheme,
//! observed only through coarse cell averages, and those observations are fed
//! back into a second simulation started from wrong initial data. The crate
//! provides the mesh and transfer operators, the implicit diffusion solver,
//! both time steppers, error metrics, and the configuration/command layer
//! behind the `gsnudge` binary.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod grid;
pub mod metrics;
pub mod presets;
pub mod snapshot;
pub mod solver;
pub mod transfer;

pub use dynamics::{
    check_theory, run_pair, run_truth, ConditionReport, Gains, ModelParams, NudgingParams, Observations, PairSetup,
    Schedule, State, StepError, Stepper, TheoryConstants, TimeGrid,
};
pub use grid::{Field, GridError, GridSpec};
pub use metrics::{DecayFit, ErrorRow, ErrorSeries, Species};
pub use solver::{SolveReport, SolverSettings, SparseOperator};
pub use transfer::TransferPair;

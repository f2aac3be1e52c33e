use crate::metrics::{l2_error, ErrorRow, ErrorSeries};
use crate::solver::SolverSettings;
use crate::transfer::TransferPair;

use super::energy::EnergyTracker;
use super::stepper::{observe_state, Stepper};
use super::{ModelParams, NudgingParams, State, StepError, TimeGrid};

/// Everything a paired run needs besides the initial states.
#[derive(Debug, Clone, Copy)]
pub struct PairSetup {
    pub model: ModelParams,
    pub nudging: NudgingParams,
    pub time: TimeGrid,
    pub pair: TransferPair,
    pub solver: SolverSettings,
    /// Solve the two species concurrently within a step.
    pub parallel_species: bool,
}

/// View handed to run callbacks after each time level is reached.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub step: usize,
    pub t: f64,
    pub truth: &'a State,
    pub nudged: Option<&'a State>,
    /// Whether nudging is applied in the step leaving this level.
    pub active: bool,
    /// Iterations `(u, v)` of the reference solves that produced this level.
    pub iterations: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub truth: State,
    pub nudged: State,
    pub series: ErrorSeries,
}

#[derive(Debug, Clone)]
pub struct TruthOutcome {
    pub state: State,
    pub energy: EnergyTracker,
}

fn error_row(truth: &State, nudged: &State, active: bool) -> Result<ErrorRow, StepError> {
    let eu = l2_error(&nudged.u, &truth.u)?;
    let ev = l2_error(&nudged.v, &truth.v)?;
    Ok(ErrorRow {
        step: truth.step,
        t: truth.t,
        rel_err_u: eu.rel,
        rel_err_v: ev.rel,
        abs_err_u: eu.abs,
        abs_err_v: ev.abs,
        nudging_active: active,
    })
}

/// Advances the reference and the nudged trajectories in lockstep.
///
/// Row `n` of the returned series holds the errors at `t_n` and whether
/// nudging is applied in the step from `t_n` to `t_{n+1}`.
pub fn run_pair(
    truth0: State,
    nudged0: State,
    setup: &PairSetup,
    mut on_frame: impl FnMut(&Frame<'_>),
) -> Result<PairOutcome, StepError> {
    setup.nudging.validate()?;
    let grid = *setup.pair.fine();
    grid.ensure_same(truth0.grid())?;
    grid.ensure_same(nudged0.grid())?;
    let dt = setup.time.dt;
    let make = || -> Result<Stepper, StepError> {
        Ok(Stepper::new(grid, setup.model, dt, setup.solver)?.with_parallel_species(setup.parallel_species))
    };
    let (mut truth_stepper, mut nudged_stepper) = (make()?, make()?);

    let mut truth = truth0;
    let mut nudged = nudged0;
    let mut series = ErrorSeries::new();
    let mut iterations = None;
    for n in 0..=setup.time.n_steps {
        let t = setup.time.time(n);
        let gains = setup.nudging.gains_at(t);
        let active = setup.nudging.schedule.is_active(t);
        series
            .push(error_row(&truth, &nudged, active)?)
            .expect("rows are produced in step order");
        on_frame(&Frame {
            step: n,
            t,
            truth: &truth,
            nudged: Some(&nudged),
            active,
            iterations,
        });
        if n == setup.time.n_steps {
            break;
        }
        let obs = observe_state(&truth, &setup.pair)?;
        let next_truth = truth_stepper.truth_step(&truth)?;
        let next_nudged = nudged_stepper.nudged_step(&nudged, &obs, gains, &setup.pair)?;
        iterations = truth_stepper
            .last_reports()
            .map(|(ru, rv)| (ru.iterations, rv.iterations));
        truth = State {
            t: setup.time.time(n + 1),
            ..next_truth
        };
        nudged = State {
            t: setup.time.time(n + 1),
            ..next_nudged
        };
    }
    Ok(PairOutcome { truth, nudged, series })
}

/// Runs the reference system alone, tracking the energy diagnostics.
pub fn run_truth(
    initial: State,
    model: ModelParams,
    time: TimeGrid,
    solver: SolverSettings,
    parallel_species: bool,
    mut on_frame: impl FnMut(&Frame<'_>),
) -> Result<TruthOutcome, StepError> {
    let mut stepper = Stepper::new(*initial.grid(), model, time.dt, solver)?.with_parallel_species(parallel_species);
    let mut energy = EnergyTracker::new(time.dt);
    let mut state = initial;
    let mut iterations = None;
    for n in 0..=time.n_steps {
        on_frame(&Frame {
            step: n,
            t: time.time(n),
            truth: &state,
            nudged: None,
            active: false,
            iterations,
        });
        if n == time.n_steps {
            break;
        }
        let next = stepper.truth_step(&state)?;
        energy.record(&state, &next)?;
        iterations = stepper.last_reports().map(|(ru, rv)| (ru.iterations, rv.iterations));
        state = State {
            t: time.time(n + 1),
            ..next
        };
    }
    Ok(TruthOutcome { state, energy })
}

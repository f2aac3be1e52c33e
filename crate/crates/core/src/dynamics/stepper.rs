use crate::grid::{Field, GridSpec};
use crate::solver::{assemble, solve_in_place, CgWorkspace, SolveReport, SolverSettings, SparseOperator};
use crate::transfer::TransferPair;

use super::{ModelParams, State, StepError};

/// Nudging gains applied in a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub mu_u: f64,
    pub mu_v: f64,
}

impl Gains {
    pub const OFF: Gains = Gains { mu_u: 0.0, mu_v: 0.0 };
}

/// Coarse cell averages of the reference state, held on the fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub u: Field,
    pub v: Field,
}

/// Applies the observation operator to both species.
pub fn observe_state(s: &State, pair: &TransferPair) -> Result<Observations, StepError> {
    Ok(Observations {
        u: crate::transfer::observe(&s.u, pair)?,
        v: crate::transfer::observe(&s.v, pair)?,
    })
}

/// One species' implicit solve: operator, scratch, and the last report.
#[derive(Debug, Clone)]
struct SpeciesSolver {
    op: SparseOperator,
    ws: CgWorkspace,
    rhs: Vec<f64>,
}

impl SpeciesSolver {
    fn solve(
        &mut self,
        guess: &Field,
        settings: &SolverSettings,
        step: usize,
        field: &'static str,
    ) -> Result<(Field, SolveReport), StepError> {
        if let Some(cell) = self.rhs.iter().position(|v| !v.is_finite()) {
            return Err(StepError::NonFinite { step, field, cell });
        }
        // warm start from the previous time level
        let mut x = guess.values().to_vec();
        let report = solve_in_place(&self.op, &self.rhs, &mut x, settings, &mut self.ws)?;
        if !report.converged {
            return Err(StepError::SolverFailed { step, field, report });
        }
        let out = Field::from_raw(*self.op.grid(), x);
        if let Some((cell, _)) = out.first_non_finite() {
            return Err(StepError::NonFinite { step, field, cell });
        }
        Ok((out, report))
    }
}

/// Semi-implicit stepper: explicit reaction and nudging, implicit diffusion.
///
/// Holds the two assembled diffusion operators for a fixed grid and time step
/// together with solver scratch, so one instance should drive one trajectory.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: ModelParams,
    dt: f64,
    settings: SolverSettings,
    u: SpeciesSolver,
    v: SpeciesSolver,
    coarse_scratch: Vec<f64>,
    interp_scratch: Vec<f64>,
    parallel: bool,
    last_reports: Option<(SolveReport, SolveReport)>,
}

impl Stepper {
    pub fn new(grid: GridSpec, model: ModelParams, dt: f64, settings: SolverSettings) -> Result<Self, StepError> {
        model.validate()?;
        let n = grid.cell_count();
        let species = |d| -> Result<SpeciesSolver, StepError> {
            Ok(SpeciesSolver {
                op: assemble(grid, d, dt)?,
                ws: CgWorkspace::new(n),
                rhs: vec![0.0; n],
            })
        };
        Ok(Self {
            model,
            dt,
            settings,
            u: species(model.d_u)?,
            v: species(model.d_v)?,
            coarse_scratch: Vec::new(),
            interp_scratch: vec![0.0; n],
            parallel: false,
            last_reports: None,
        })
    }

    /// Run the two species' solves on separate threads. Results are identical
    /// either way; each solve is itself sequential.
    pub fn with_parallel_species(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.op.grid()
    }

    /// Solver reports `(u, v)` of the most recent step.
    pub fn last_reports(&self) -> Option<(SolveReport, SolveReport)> {
        self.last_reports
    }

    /// Advances the reference system by one step.
    pub fn truth_step(&mut self, s: &State) -> Result<State, StepError> {
        self.check_grid(s)?;
        self.fill_reaction(s);
        self.solve_both(s)
    }

    /// Advances the nudged system by one step, feeding back the difference
    /// between the observed reference and the interpolated nudged state.
    pub fn nudged_step(
        &mut self,
        s: &State,
        obs: &Observations,
        gains: Gains,
        pair: &TransferPair,
    ) -> Result<State, StepError> {
        self.check_grid(s)?;
        pair.fine().ensure_same(s.grid())?;
        pair.fine().ensure_same(obs.u.grid())?;
        pair.fine().ensure_same(obs.v.grid())?;
        self.fill_reaction(s);
        self.coarse_scratch.resize(pair.coarse().cell_count(), 0.0);
        let dt = self.dt;
        // A zero gain adds nothing, so skipping it keeps the step bitwise
        // equal to `truth_step`.
        for (mu, field, observed, rhs) in [
            (gains.mu_u, &s.u, &obs.u, &mut self.u.rhs),
            (gains.mu_v, &s.v, &obs.v, &mut self.v.rhs),
        ] {
            if mu == 0.0 {
                continue;
            }
            pair.observe_slice(field.values(), &mut self.coarse_scratch, &mut self.interp_scratch);
            for ((r, &o), &i) in rhs.iter_mut().zip(observed.values()).zip(&self.interp_scratch) {
                *r += dt * mu * (o - i);
            }
        }
        self.solve_both(s)
    }

    fn check_grid(&self, s: &State) -> Result<(), StepError> {
        self.grid().ensure_same(s.u.grid())?;
        self.grid().ensure_same(s.v.grid())?;
        Ok(())
    }

    /// Right-hand sides `c^n + Δt·reaction(u^n, v^n)`.
    fn fill_reaction(&mut self, s: &State) {
        let ModelParams { feed, kill, .. } = self.model;
        let dt = self.dt;
        let rhs = self.u.rhs.iter_mut().zip(self.v.rhs.iter_mut());
        for ((ru, rv), (&u, &v)) in rhs.zip(s.u.values().iter().zip(s.v.values())) {
            let uvv = u * v * v;
            *ru = u + dt * (-uvv + feed * (1.0 - u));
            *rv = v + dt * (uvv - (feed + kill) * v);
        }
    }

    fn solve_both(&mut self, s: &State) -> Result<State, StepError> {
        let step = s.step + 1;
        let settings = self.settings;
        let (u_solver, v_solver) = (&mut self.u, &mut self.v);
        let (u_res, v_res) = if self.parallel {
            rayon::join(
                || u_solver.solve(&s.u, &settings, step, "u"),
                || v_solver.solve(&s.v, &settings, step, "v"),
            )
        } else {
            (
                u_solver.solve(&s.u, &settings, step, "u"),
                v_solver.solve(&s.v, &settings, step, "v"),
            )
        };
        let (u, ru) = u_res?;
        let (v, rv) = v_res?;
        self.last_reports = Some((ru, rv));
        Ok(State {
            u,
            v,
            t: step as f64 * self.dt,
            step,
        })
    }
}

//! Browser bindings: a live reference/nudged pair rendered to RGBA buffers,
//! the synchronization-condition checker, and an observation preview.
//!
//! Everything here also runs natively; only plain numbers, strings and byte
//! vectors cross the boundary.

use wasm_bindgen::prelude::*;

use gsnudge::config::{build_initial_state, SeedSpec};
use gsnudge::dynamics::{observe_state, Observations};
use gsnudge::metrics::l2_error;
use gsnudge::transfer::observe;
use gsnudge::{
    check_theory, Field, GridSpec, ModelParams, NudgingParams, Schedule, SolverSettings, State, Stepper,
    TheoryConstants, TransferPair,
};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Which field [`Demo::render`] draws.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    TruthV,
    NudgedV,
    ObservedV,
    ErrorV,
}

/// Maps `[0, max]` to a dark-blue → yellow ramp, one RGBA quad per cell,
/// first image row at the top of the domain.
pub fn to_rgba(field: &Field, max: f64) -> Vec<u8> {
    let nx = field.grid().nx();
    let mut out = Vec::with_capacity(4 * nx * nx);
    for row in field.values().chunks(nx).rev() {
        for &x in row {
            let s = if max > 0.0 { (x / max).clamp(0.0, 1.0) } else { 0.0 };
            out.extend_from_slice(&[
                (255.0 * s.powf(0.7)) as u8,
                (255.0 * s) as u8,
                (90.0 + 60.0 * (1.0 - s) - 80.0 * s * s) as u8,
                255,
            ]);
        }
    }
    out
}

/// Reference and nudged trajectories from the labyrinth seeds.
#[wasm_bindgen]
pub struct Demo {
    pair: TransferPair,
    nudging: NudgingParams,
    dt: f64,
    truth: State,
    nudged: State,
    truth_stepper: Stepper,
    nudged_stepper: Stepper,
    step: usize,
}

fn seeds() -> (SeedSpec, SeedSpec) {
    let preset = gsnudge::presets::load("baseline-da").expect("bundled preset");
    (preset.truth_seed, preset.nudged_seed)
}

#[wasm_bindgen]
impl Demo {
    /// `schedule` is `from-start`, `delayed:<t>` or `periodic:<on>:<off>`.
    #[wasm_bindgen(constructor)]
    pub fn new(fine_nx: usize, coarse_nx: usize, mu_v: f64, schedule: &str, dt: f64) -> Result<Demo, JsError> {
        let fine = GridSpec::unit(fine_nx).map_err(js_err)?;
        let coarse = GridSpec::unit(coarse_nx).map_err(js_err)?;
        let pair = TransferPair::new(fine, coarse).map_err(js_err)?;
        let schedule: Schedule = schedule.parse().map_err(|e: String| JsError::new(&e))?;
        let nudging = NudgingParams {
            mu_u: 0.0,
            mu_v,
            schedule,
        };
        nudging.validate().map_err(js_err)?;
        let model = ModelParams::LABYRINTH;
        let make = || Stepper::new(fine, model, dt, SolverSettings::default()).map_err(js_err);
        let (truth_seed, nudged_seed) = seeds();
        Ok(Demo {
            pair,
            nudging,
            dt,
            truth: build_initial_state(&truth_seed, fine),
            nudged: build_initial_state(&nudged_seed, fine),
            truth_stepper: make()?,
            nudged_stepper: make()?,
            step: 0,
        })
    }

    /// Advances both trajectories by `n` steps.
    pub fn advance(&mut self, n: usize) -> Result<(), JsError> {
        for _ in 0..n {
            let t = self.time();
            let obs = observe_state(&self.truth, &self.pair).map_err(js_err)?;
            let gains = self.nudging.gains_at(t);
            let truth = self.truth_stepper.truth_step(&self.truth).map_err(js_err)?;
            let nudged = self
                .nudged_stepper
                .nudged_step(&self.nudged, &obs, gains, &self.pair)
                .map_err(js_err)?;
            self.step += 1;
            let t = self.time();
            self.truth = State { t, ..truth };
            self.nudged = State { t, ..nudged };
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn nudging_active(&self) -> bool {
        self.nudging.schedule.is_active(self.time())
    }

    pub fn rel_err_v(&self) -> f64 {
        l2_error(&self.nudged.v, &self.truth.v)
            .map(|e| e.rel)
            .unwrap_or(f64::NAN)
    }

    pub fn rel_err_u(&self) -> f64 {
        l2_error(&self.nudged.u, &self.truth.u)
            .map(|e| e.rel)
            .unwrap_or(f64::NAN)
    }

    pub fn side(&self) -> usize {
        self.pair.fine().nx()
    }

    /// RGBA pixels (`side² · 4` bytes) of the requested view.
    pub fn render(&self, view: View) -> Vec<u8> {
        match view {
            View::TruthV => to_rgba(&self.truth.v, 0.5),
            View::NudgedV => to_rgba(&self.nudged.v, 0.5),
            View::ObservedV => to_rgba(&self.observations().v, 0.5),
            View::ErrorV => {
                let diff = self.nudged.v.sub(&self.truth.v).expect("same grid");
                let abs = Field::new(*diff.grid(), diff.values().iter().map(|x| x.abs()).collect()).expect("finite");
                to_rgba(&abs, 0.25)
            }
        }
    }

    /// Observation of the current reference `v` at another coarse size.
    pub fn observe_preview(&self, coarse_nx: usize) -> Result<Vec<u8>, JsError> {
        let coarse = GridSpec::unit(coarse_nx).map_err(js_err)?;
        let pair = TransferPair::new(*self.pair.fine(), coarse).map_err(js_err)?;
        Ok(to_rgba(&observe(&self.truth.v, &pair).map_err(js_err)?, 0.5))
    }
}

impl Demo {
    fn observations(&self) -> Observations {
        observe_state(&self.truth, &self.pair).expect("grids match by construction")
    }

    pub fn truth(&self) -> &State {
        &self.truth
    }

    pub fn nudged(&self) -> &State {
        &self.nudged
    }
}

/// Text report of the sufficient synchronization conditions.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn check_conditions(
    d_u: f64,
    d_v: f64,
    feed: f64,
    kill: f64,
    mu_u: f64,
    mu_v: f64,
    dt: f64,
    coarse_nx: usize,
    v_max: f64,
) -> String {
    let model = ModelParams { d_u, d_v, feed, kill };
    let nudging = NudgingParams {
        mu_u,
        mu_v,
        schedule: Schedule::FromStart,
    };
    let constants = TheoryConstants {
        v_max,
        ..TheoryConstants::default()
    };
    if coarse_nx == 0 {
        return "coarse grid needs at least one cell".into();
    }
    check_theory(&model, &nudging, &constants, dt, 1.0 / coarse_nx as f64).to_string()
}

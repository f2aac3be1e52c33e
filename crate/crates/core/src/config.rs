//! Run configuration: a TOML file with one section per concern.
//!
//! ```toml
//! [grid]
//! fine_nx = 240
//! coarse_nx = 24
//!
//! [time]
//! dt = 0.5
//! t_end = 4000.0
//!
//! [model]
//! d_u = 1.6e-5
//! d_v = 8e-6
//! feed = 0.037
//! kill = 0.06
//!
//! [nudging]
//! mu_u = 0.0
//! mu_v = 1.0
//! schedule = "delayed:1000"
//!
//! [truth_seed]
//! background = [1.0, 0.0]
//! rects = [[0.37, 0.60, 0.37, 0.60, 0.50, 0.25]]
//!
//! [nudged_seed]
//! background = [1.0, 0.0]
//! rects = [[0.15, 0.35, 0.60, 0.80, 0.60, 0.15]]
//! ```
//!
//! Optional sections: `[run]`, `[theory]`, `[io]`, `[solver]`, `[desk]`,
//! `[sweep]`, `[assert]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ModelParams, NudgingParams, Schedule, State, TheoryConstants, TimeGrid};
use crate::grid::{Field, GridSpec};
use crate::solver::{Preconditioner, SolverSettings, DEFAULT_TOL};
use crate::transfer::TransferPair;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub deterministic: bool,
    /// Seeds randomized checks only; simulations never draw random numbers.
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "run".into(),
            deterministic: false,
            rng_seed: 0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub fine_nx: usize,
    pub coarse_nx: usize,
    #[serde(default = "one")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d_u: f64,
    pub d_v: f64,
    pub feed: f64,
    pub kill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NudgingSection {
    pub mu_u: f64,
    pub mu_v: f64,
    #[serde(with = "as_string")]
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub v_max: f64,
    pub gamma0: f64,
}

impl Default for TheorySection {
    fn default() -> Self {
        let tc = TheoryConstants::default();
        Self {
            v_max: tc.v_max,
            gamma0: tc.gamma0,
        }
    }
}

/// How a seed rectangle maps onto cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedFill {
    /// A cell takes the rectangle value when its center lies inside.
    #[default]
    Center,
    /// A cell takes the exact average over its area, so seeds on nested
    /// grids agree under restriction.
    CellAverage,
}

/// Axis-aligned patch `[x0, x1] × [y0, y1]` carrying `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub u: f64,
    pub v: f64,
}

impl From<[f64; 6]> for Rect {
    fn from([x0, x1, y0, y1, u, v]: [f64; 6]) -> Self {
        Self { x0, x1, y0, y1, u, v }
    }
}

impl From<Rect> for [f64; 6] {
    fn from(r: Rect) -> Self {
        [r.x0, r.x1, r.y0, r.y1, r.u, r.v]
    }
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// Fraction of the cell centered at `(x, y)` with width `h` covered.
    fn coverage(&self, x: f64, y: f64, h: f64) -> f64 {
        let overlap = |a0: f64, a1: f64, b0: f64, b1: f64| (a1.min(b1) - a0.max(b0)).max(0.0);
        let half = 0.5 * h;
        overlap(x - half, x + half, self.x0, self.x1) * overlap(y - half, y + half, self.y0, self.y1) / (h * h)
    }
}

/// Initial data: a uniform background with rectangles painted over it,
/// later rectangles on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    /// `(u, v)` outside all rectangles.
    pub background: [f64; 2],
    #[serde(default)]
    pub rects: Vec<Rect>,
    #[serde(default)]
    pub fill: SeedFill,
}

impl SeedSpec {
    pub fn steady() -> Self {
        Self {
            background: [1.0, 0.0],
            rects: Vec::new(),
            fill: SeedFill::Center,
        }
    }

    fn validate(&self, field: &str, length: f64, value_cap: f64) -> Result<(), ConfigError> {
        let in_range = |x: f64| x.is_finite() && (0.0..=value_cap).contains(&x);
        for (k, v) in self.background.iter().enumerate() {
            if !in_range(*v) {
                return Err(invalid(
                    &format!("{field}.background[{k}]"),
                    format!("{v} outside [0, {value_cap}]"),
                ));
            }
        }
        for (k, r) in self.rects.iter().enumerate() {
            let name = format!("{field}.rects[{k}]");
            let inside = |a: f64| a.is_finite() && (0.0..=length).contains(&a);
            if !(inside(r.x0) && inside(r.x1) && inside(r.y0) && inside(r.y1)) {
                return Err(invalid(&name, format!("corners must lie in [0, {length}]")));
            }
            if r.x0 > r.x1 || r.y0 > r.y1 {
                return Err(invalid(&name, "expected x0 <= x1 and y0 <= y1"));
            }
            if !(in_range(r.u) && in_range(r.v)) {
                return Err(invalid(&name, format!("values outside [0, {value_cap}]")));
            }
        }
        Ok(())
    }
}

/// Paints `spec` onto `grid`; `t = 0`.
pub fn build_initial_state(spec: &SeedSpec, grid: GridSpec) -> State {
    let [ubg, vbg] = spec.background;
    let h = grid.h();
    let (mut u, mut v) = (
        Vec::with_capacity(grid.cell_count()),
        Vec::with_capacity(grid.cell_count()),
    );
    for j in 0..grid.nx() {
        for i in 0..grid.nx() {
            let (x, y) = grid.center(i, j);
            let (mut cu, mut cv) = (ubg, vbg);
            for r in &spec.rects {
                match spec.fill {
                    SeedFill::Center => {
                        if r.contains(x, y) {
                            (cu, cv) = (r.u, r.v);
                        }
                    }
                    SeedFill::CellAverage => {
                        let w = r.coverage(x, y, h);
                        if w > 0.0 {
                            cu = w * r.u + (1.0 - w) * cu;
                            cv = w * r.v + (1.0 - w) * cv;
                        }
                    }
                }
            }
            u.push(cu);
            v.push(cv);
        }
    }
    State::new(
        Field::new(grid, u).expect("seed values are finite"),
        Field::new(grid, v).expect("seed values are finite"),
    )
    .expect("both fields share the grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    /// Snapshot period in time units; 0 disables snapshots.
    pub snapshot_every: f64,
    /// Also write raw CSV next to each PGM snapshot.
    pub snapshot_csv: bool,
    /// Keep every n-th row in the error-series CSV.
    pub csv_every: usize,
    /// Concentration mapped to white in PGM snapshots.
    pub display_max: f64,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            out_dir: None,
            snapshot_every: 100.0,
            snapshot_csv: true,
            csv_every: 1,
            display_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    /// Defaults to `10·nx²` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Overrides applied by `--scale desk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskSection {
    pub fine_nx: usize,
    pub coarse_nx: usize,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_string")]
    pub schedule: Option<Schedule>,
}

impl Default for DeskSection {
    fn default() -> Self {
        Self {
            fine_nx: 120,
            coarse_nx: 24,
            t_end: 1500.0,
            schedule: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    CoarseNx,
    MuU,
    MuV,
    Dt,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::CoarseNx => "coarse_nx",
            SweepParameter::MuU => "mu_u",
            SweepParameter::MuV => "mu_v",
            SweepParameter::Dt => "dt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Thresholds checked by `--assert`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertSection {
    /// Nudged runs must end at or below this relative v error.
    pub max_final_rel_err_v: f64,
    /// Control runs must end above this relative v error.
    pub min_control_rel_err_v: f64,
    /// Truth runs must end with at least this spatial variance of v.
    pub min_pattern_variance: f64,
}

impl Default for AssertSection {
    fn default() -> Self {
        Self {
            max_final_rel_err_v: 1e-8,
            min_control_rel_err_v: 1e-3,
            min_pattern_variance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub model: ModelSection,
    pub nudging: NudgingSection,
    #[serde(default)]
    pub theory: TheorySection,
    pub truth_seed: SeedSpec,
    pub nudged_seed: SeedSpec,
    #[serde(default)]
    pub io: IoSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub desk: DeskSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, rename = "assert")]
    pub assertions: AssertSection,
}

/// `--scale` value: `paper` runs the preset as written (full size),
/// `desk` applies the `[desk]` overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(format!("unknown scale {other:?} (expected desk or paper)")),
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive, got {v}")))
            }
        }
        fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be non-negative, got {v}")))
            }
        }
        fn grids(prefix: &str, fine: usize, coarse: usize) -> Result<(), ConfigError> {
            if fine == 0 {
                return Err(invalid(&format!("{prefix}.fine_nx"), "must be at least 1"));
            }
            if coarse == 0 {
                return Err(invalid(&format!("{prefix}.coarse_nx"), "must be at least 1"));
            }
            if !fine.is_multiple_of(coarse) {
                return Err(invalid(
                    &format!("{prefix}.coarse_nx"),
                    format!("{coarse} does not divide fine_nx = {fine}"),
                ));
            }
            Ok(())
        }

        // TOML integers are signed 64-bit
        if i64::try_from(self.run.rng_seed).is_err() {
            return Err(invalid(
                "run.rng_seed",
                format!("{} exceeds {}", self.run.rng_seed, i64::MAX),
            ));
        }
        grids("grid", self.grid.fine_nx, self.grid.coarse_nx)?;
        positive("grid.length", self.grid.length)?;
        positive("time.dt", self.time.dt)?;
        positive("time.t_end", self.time.t_end)?;
        positive("model.d_u", self.model.d_u)?;
        positive("model.d_v", self.model.d_v)?;
        positive("model.feed", self.model.feed)?;
        positive("model.kill", self.model.kill)?;
        non_negative("nudging.mu_u", self.nudging.mu_u)?;
        non_negative("nudging.mu_v", self.nudging.mu_v)?;
        self.nudging
            .schedule
            .validate()
            .map_err(|e| invalid("nudging.schedule", e.to_string()))?;
        positive("theory.v_max", self.theory.v_max)?;
        positive("theory.gamma0", self.theory.gamma0)?;
        let cap = self.theory.v_max.max(1.0);
        self.truth_seed.validate("truth_seed", self.grid.length, cap)?;
        self.nudged_seed.validate("nudged_seed", self.grid.length, cap)?;
        non_negative("io.snapshot_every", self.io.snapshot_every)?;
        if self.io.csv_every == 0 {
            return Err(invalid("io.csv_every", "must be at least 1"));
        }
        positive("io.display_max", self.io.display_max)?;
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == Some(0) {
            return Err(invalid("solver.max_iter", "must be at least 1"));
        }
        grids("desk", self.desk.fine_nx, self.desk.coarse_nx)?;
        positive("desk.t_end", self.desk.t_end)?;
        if let Some(s) = &self.desk.schedule {
            s.validate().map_err(|e| invalid("desk.schedule", e.to_string()))?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
            for (k, &v) in sweep.values.iter().enumerate() {
                let field = format!("sweep.values[{k}]");
                match sweep.parameter {
                    SweepParameter::CoarseNx => {
                        if !(v >= 1.0 && v.fract() == 0.0) {
                            return Err(invalid(&field, format!("{v} is not a cell count")));
                        }
                    }
                    SweepParameter::MuU | SweepParameter::MuV => non_negative(&field, v)?,
                    SweepParameter::Dt => positive(&field, v)?,
                }
            }
        }
        positive("assert.max_final_rel_err_v", self.assertions.max_final_rel_err_v)?;
        non_negative("assert.min_control_rel_err_v", self.assertions.min_control_rel_err_v)?;
        non_negative("assert.min_pattern_variance", self.assertions.min_pattern_variance)?;
        Ok(())
    }

    /// Config with the desk-scale overrides applied (or unchanged at full scale).
    pub fn with_scale(&self, scale: Scale) -> RunConfig {
        let mut cfg = self.clone();
        if scale == Scale::Desk {
            cfg.grid.fine_nx = self.desk.fine_nx;
            cfg.grid.coarse_nx = self.desk.coarse_nx;
            cfg.time.t_end = self.desk.t_end;
            if let Some(s) = self.desk.schedule {
                cfg.nudging.schedule = s;
            }
        }
        cfg
    }

    /// Config with one swept parameter set to `value`.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<RunConfig, ConfigError> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        match parameter {
            SweepParameter::CoarseNx => cfg.grid.coarse_nx = value as usize,
            SweepParameter::MuU => cfg.nudging.mu_u = value,
            SweepParameter::MuV => cfg.nudging.mu_v = value,
            SweepParameter::Dt => cfg.time.dt = value,
        }
        cfg.run.name = format!("{}-{parameter}={value}", self.run.name);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fine_grid(&self) -> GridSpec {
        GridSpec::new(self.grid.fine_nx, self.grid.length).expect("validated")
    }

    pub fn transfer_pair(&self) -> TransferPair {
        let coarse = GridSpec::new(self.grid.coarse_nx, self.grid.length).expect("validated");
        TransferPair::new(self.fine_grid(), coarse).expect("validated")
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            d_u: self.model.d_u,
            d_v: self.model.d_v,
            feed: self.model.feed,
            kill: self.model.kill,
        }
    }

    pub fn nudging_params(&self) -> NudgingParams {
        NudgingParams {
            mu_u: self.nudging.mu_u,
            mu_v: self.nudging.mu_v,
            schedule: self.nudging.schedule,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::to_horizon(self.time.dt, self.time.t_end).expect("validated")
    }

    pub fn theory_constants(&self) -> TheoryConstants {
        TheoryConstants {
            v_max: self.theory.v_max,
            gamma0: self.theory.gamma0,
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    /// Snapshot period in steps, if snapshots are enabled.
    pub fn snapshot_period_steps(&self) -> Option<usize> {
        if self.io.snapshot_every > 0.0 {
            Some(((self.io.snapshot_every / self.time.dt).round() as usize).max(1))
        } else {
            None
        }
    }
}

mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

mod opt_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.collect_str(v),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
fine_nx = 8
coarse_nx = 4

[time]
dt = 0.5
t_end = 2.0

[model]
d_u = 1.6e-5
d_v = 8e-6
feed = 0.037
kill = 0.06

[nudging]
mu_u = 0.0
mu_v = 1.0
schedule = "periodic:1:1"

[truth_seed]
background = [1.0, 0.0]
rects = [[0.25, 0.5, 0.25, 0.5, 0.5, 0.25]]

[nudged_seed]
background = [1.0, 0.0]
"#;

    fn minimal() -> RunConfig {
        RunConfig::from_toml_str(MINIMAL).unwrap()
    }

    fn field_of(err: ConfigError) -> String {
        match err {
            ConfigError::Invalid { field, .. } => field,
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = minimal();
        assert_eq!(cfg.grid.length, 1.0);
        assert_eq!(cfg.theory.v_max, 1.0);
        assert_eq!(cfg.solver.tol, 1e-10);
        assert_eq!(cfg.desk, DeskSection::default());
        assert_eq!(cfg.nudging.schedule, Schedule::Periodic { on: 1.0, off: 1.0 });
        assert!(cfg.sweep.is_none());
        assert_eq!(cfg.time_grid().n_steps, 4);
    }

    #[test]
    fn roundtrip_through_text() {
        let cfg = minimal();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn field_level_errors() {
        let bad = MINIMAL.replace("coarse_nx = 4", "coarse_nx = 3");
        assert_eq!(field_of(RunConfig::from_toml_str(&bad).unwrap_err()), "grid.coarse_nx");

        let bad = MINIMAL.replace("dt = 0.5", "dt = -0.5");
        assert_eq!(field_of(RunConfig::from_toml_str(&bad).unwrap_err()), "time.dt");

        let bad = MINIMAL.replace("kill = 0.06", "kill = 0.0");
        assert_eq!(field_of(RunConfig::from_toml_str(&bad).unwrap_err()), "model.kill");

        let bad = MINIMAL.replace("[[0.25, 0.5,", "[[0.25, 1.5,");
        assert_eq!(
            field_of(RunConfig::from_toml_str(&bad).unwrap_err()),
            "truth_seed.rects[0]"
        );

        let bad = MINIMAL.replace("0.5, 0.25]]", "0.5, 2.5]]");
        assert_eq!(
            field_of(RunConfig::from_toml_str(&bad).unwrap_err()),
            "truth_seed.rects[0]"
        );

        let bad = MINIMAL.replace("mu_v = 1.0", "mu_v = -1.0");
        assert_eq!(field_of(RunConfig::from_toml_str(&bad).unwrap_err()), "nudging.mu_v");
    }

    #[test]
    fn seed_must_fit_toml_integers() {
        let mut cfg = minimal();
        cfg.run.rng_seed = u64::MAX;
        assert_eq!(field_of(cfg.validate().unwrap_err()), "run.rng_seed");
    }

    #[test]
    fn syntax_and_unknown_keys() {
        assert!(matches!(
            RunConfig::from_toml_str("[grid]\nfine_nx = "),
            Err(ConfigError::Syntax(_))
        ));
        let bad = MINIMAL.replace("[time]", "[time]\nbogus = 1");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Syntax(_))));
        let bad = MINIMAL.replace("periodic:1:1", "weekly");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn desk_scale_overrides() {
        let mut cfg = minimal();
        cfg.desk.schedule = Some(Schedule::Delayed { t_on: 500.0 });
        let desk = cfg.with_scale(Scale::Desk);
        assert_eq!(
            (desk.grid.fine_nx, desk.grid.coarse_nx, desk.time.t_end),
            (120, 24, 1500.0)
        );
        assert_eq!(desk.nudging.schedule, Schedule::Delayed { t_on: 500.0 });
        assert_eq!(cfg.with_scale(Scale::Paper), cfg);
        assert_eq!("desk".parse::<Scale>(), Ok(Scale::Desk));
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn sweep_values_apply() {
        let cfg = minimal();
        let c = cfg.with_sweep_value(SweepParameter::CoarseNx, 2.0).unwrap();
        assert_eq!(c.grid.coarse_nx, 2);
        assert!(cfg.with_sweep_value(SweepParameter::CoarseNx, 3.0).is_err());
        let c = cfg.with_sweep_value(SweepParameter::MuV, 0.25).unwrap();
        assert_eq!(c.nudging.mu_v, 0.25);
        let c = cfg.with_sweep_value(SweepParameter::Dt, 0.25).unwrap();
        assert_eq!(c.time_grid().n_steps, 8);
    }

    #[test]
    fn initial_state_background_only() {
        let s = build_initial_state(&SeedSpec::steady(), GridSpec::unit(5).unwrap());
        assert_eq!(s, State::steady(GridSpec::unit(5).unwrap()));
    }

    #[test]
    fn single_cell_rectangle() {
        let g = GridSpec::unit(10).unwrap();
        // covers only the center (0.35, 0.65) of cell (3, 6)
        let spec = SeedSpec {
            background: [1.0, 0.0],
            rects: vec![Rect {
                x0: 0.32,
                x1: 0.38,
                y0: 0.62,
                y1: 0.68,
                u: 0.4,
                v: 0.2,
            }],
            fill: SeedFill::Center,
        };
        let s = build_initial_state(&spec, g);
        let changed: Vec<usize> = (0..100).filter(|&k| s.u.values()[k] != 1.0).collect();
        assert_eq!(changed, vec![g.index(3, 6)]);
        assert_eq!(s.v.values()[g.index(3, 6)], 0.2);
    }

    #[test]
    fn later_rectangles_win() {
        let g = GridSpec::unit(4).unwrap();
        let spec = SeedSpec {
            background: [1.0, 0.0],
            rects: vec![
                Rect {
                    x0: 0.0,
                    x1: 1.0,
                    y0: 0.0,
                    y1: 1.0,
                    u: 0.5,
                    v: 0.1,
                },
                Rect {
                    x0: 0.0,
                    x1: 0.5,
                    y0: 0.0,
                    y1: 0.5,
                    u: 0.2,
                    v: 0.3,
                },
            ],
            fill: SeedFill::Center,
        };
        let s = build_initial_state(&spec, g);
        assert_eq!(s.u.get(0, 0), 0.2);
        assert_eq!(s.u.get(3, 3), 0.5);
    }

    #[test]
    fn cell_average_fill_is_consistent_under_restriction() {
        let spec = SeedSpec {
            background: [1.0, 0.0],
            rects: vec![Rect {
                x0: 0.37,
                x1: 0.6,
                y0: 0.37,
                y1: 0.6,
                u: 0.5,
                v: 0.25,
            }],
            fill: SeedFill::CellAverage,
        };
        let fine = build_initial_state(&spec, GridSpec::unit(40).unwrap());
        let coarse = build_initial_state(&spec, GridSpec::unit(10).unwrap());
        let pair = TransferPair::new(GridSpec::unit(40).unwrap(), GridSpec::unit(10).unwrap()).unwrap();
        let r = crate::transfer::restrict(&fine.v, &pair).unwrap();
        for (a, b) in r.values().iter().zip(coarse.v.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        // total mass equals rectangle area times value
        let mass = fine.v.mean();
        assert!((mass - 0.23 * 0.23 * 0.25).abs() < 1e-14);
    }
}

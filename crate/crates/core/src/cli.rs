//! Command layer behind the `gsnudge` binary.
//!
//! Each command resolves a [`RunConfig`] (file or bundled preset, then the
//! `--scale` override), runs, and writes its artifacts under one output
//! directory:
//!
//! | file | written by |
//! |------|------------|
//! | `config.toml` | every simulating command (the resolved config) |
//! | `{field}_{step:08}.pgm` / `.csv` | snapshots; fields `u`, `v`, and for paired runs `nudged_*`, `obs_*` |
//! | `final/` | raw CSV of the last state(s) plus `meta.txt` |
//! | `errors.csv` | paired runs: the error series |
//! | `summary.txt` | flat `key = value` lines |
//! | `sweep.csv` | sweeps: one line per swept value |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{build_initial_state, ConfigError, RunConfig, Scale, SweepParameter};
use crate::dynamics::{
    check_theory, observe_state, run_pair, run_truth, ConditionReport, Frame, PairOutcome, PairSetup, State, StepError,
    TruthOutcome,
};
use crate::metrics::{fit_decay, staircase_segments, Segment, Species, DEFAULT_FIT_FLOOR};
use crate::snapshot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ASSERT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] StepError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("assertion failed: {}", .0.join("; "))]
    Assert(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Numerical(StepError::InvalidParameter { .. }) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
            CliError::Assert(_) => EXIT_ASSERT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Flags shared by all simulating commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub scale: Scale,
    pub out_dir: Option<PathBuf>,
    pub deterministic: bool,
    pub assert: bool,
}

/// Applies `--scale` and `--deterministic`.
pub fn resolve(cfg: &RunConfig, opts: &RunOptions) -> RunConfig {
    let mut cfg = cfg.with_scale(opts.scale);
    cfg.run.deterministic |= opts.deterministic;
    cfg
}

fn output_dir(cfg: &RunConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.io.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&cfg.run.name))
}

fn pair_setup(cfg: &RunConfig) -> PairSetup {
    PairSetup {
        model: cfg.model_params(),
        nudging: cfg.nudging_params(),
        time: cfg.time_grid(),
        pair: cfg.transfer_pair(),
        solver: cfg.solver_settings(),
        parallel_species: !cfg.run.deterministic,
    }
}

pub fn theory_report(cfg: &RunConfig) -> ConditionReport {
    check_theory(
        &cfg.model_params(),
        &cfg.nudging_params(),
        &cfg.theory_constants(),
        cfg.time.dt,
        cfg.transfer_pair().coarse_h(),
    )
}

/// Runs the paired simulation described by `cfg` without touching the disk.
pub fn simulate_pair(cfg: &RunConfig, on_frame: impl FnMut(&Frame<'_>)) -> Result<PairOutcome, StepError> {
    let grid = cfg.fine_grid();
    let truth0 = build_initial_state(&cfg.truth_seed, grid);
    let nudged0 = build_initial_state(&cfg.nudged_seed, grid);
    run_pair(truth0, nudged0, &pair_setup(cfg), on_frame)
}

/// Runs the reference simulation described by `cfg` without touching the disk.
pub fn simulate_truth(cfg: &RunConfig, on_frame: impl FnMut(&Frame<'_>)) -> Result<TruthOutcome, StepError> {
    let initial = build_initial_state(&cfg.truth_seed, cfg.fine_grid());
    run_truth(
        initial,
        cfg.model_params(),
        cfg.time_grid(),
        cfg.solver_settings(),
        !cfg.run.deterministic,
        on_frame,
    )
}

pub const CONTROL_FLAG: &str = "control run: no synchronization";

/// Digest of a paired run.
#[derive(Debug, Clone)]
pub struct Summary {
    pub control: bool,
    pub final_rel_err_u: f64,
    pub final_rel_err_v: f64,
    /// Row-weighted mean of the fitted rates over active segments; the fit
    /// over the whole run when no active segment has a fit.
    pub delta_emp: f64,
    pub segments: Vec<Segment>,
    pub theory: ConditionReport,
    pub synchronized: bool,
    /// Time at which `rel_err_v` first drops to `1e-8`.
    pub t_sync: Option<f64>,
}

pub const SYNC_THRESHOLD: f64 = 1e-8;

pub fn summarize(cfg: &RunConfig, outcome: &PairOutcome) -> Summary {
    let series = &outcome.series;
    let last = series.last().copied().expect("a run has at least the initial row");
    let segments = staircase_segments(series, Species::V, DEFAULT_FIT_FLOOR);
    let (weight, weighted) = segments
        .iter()
        .filter(|s| s.active)
        .filter_map(|s| s.fit.map(|f| (f.rows_used as f64, f.delta())))
        .fold((0.0, 0.0), |(w, acc), (n, d)| (w + n, acc + n * d));
    let delta_emp = if weight > 0.0 {
        weighted / weight
    } else {
        fit_decay(series, (0.0, last.t), Species::V, DEFAULT_FIT_FLOOR)
            .map(|f| f.delta())
            .unwrap_or(f64::NAN)
    };
    let control = cfg.nudging_params().is_control();
    Summary {
        control,
        final_rel_err_u: last.rel_err_u,
        final_rel_err_v: last.rel_err_v,
        delta_emp,
        segments,
        theory: theory_report(cfg),
        synchronized: !control && last.rel_err_v <= cfg.assertions.max_final_rel_err_v,
        t_sync: series.time_to_reach(SYNC_THRESHOLD, Species::V),
    }
}

impl Summary {
    pub fn status(&self) -> &'static str {
        if self.control {
            CONTROL_FLAG
        } else if self.synchronized {
            "synchronized"
        } else {
            "not synchronized"
        }
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = vec![
            ("status".into(), self.status().into()),
            ("final_rel_err_u".into(), self.final_rel_err_u.to_string()),
            ("final_rel_err_v".into(), self.final_rel_err_v.to_string()),
            ("delta_emp".into(), self.delta_emp.to_string()),
            (
                "t_sync_1e-8".into(),
                self.t_sync.map_or("none".into(), |t| t.to_string()),
            ),
            ("segments".into(), self.segments.len().to_string()),
        ];
        for (k, s) in self.segments.iter().enumerate() {
            let p = format!("segment_{k}");
            kv.push((format!("{p}_active"), s.active.to_string()));
            kv.push((format!("{p}_t_start"), s.t_start.to_string()));
            kv.push((format!("{p}_t_end"), s.t_end.to_string()));
            match s.fit {
                Some(f) => {
                    kv.push((format!("{p}_slope"), f.slope.to_string()));
                    kv.push((format!("{p}_r_squared"), f.r_squared.to_string()));
                    kv.push((format!("{p}_delta"), f.delta().to_string()));
                }
                None => kv.push((format!("{p}_slope"), "none".into())),
            }
        }
        kv.extend(self.theory.key_values().into_iter().map(|(k, v)| (k.to_string(), v)));
        kv
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.key_values() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Writes snapshots from inside a run callback, remembering the first failure.
struct SnapshotWriter<'a> {
    dir: &'a Path,
    period: Option<usize>,
    last_step: usize,
    display_max: f64,
    csv: bool,
    failure: Option<CliError>,
}

impl<'a> SnapshotWriter<'a> {
    fn new(cfg: &RunConfig, dir: &'a Path) -> Self {
        Self {
            dir,
            period: cfg.snapshot_period_steps(),
            last_step: cfg.time_grid().n_steps,
            display_max: cfg.io.display_max,
            csv: cfg.io.snapshot_csv,
            failure: None,
        }
    }

    fn due(&self, step: usize) -> bool {
        self.failure.is_none()
            && self
                .period
                .is_some_and(|p| step.is_multiple_of(p) || step == self.last_step)
    }

    fn write(&mut self, name: &str, step: usize, field: &crate::grid::Field) {
        let stem = format!("{name}_{step:08}");
        let pgm = self.dir.join(format!("{stem}.pgm"));
        let mut result = snapshot::write_pgm(field, &pgm, self.display_max).map_err(io_err(&pgm));
        if self.csv && result.is_ok() {
            let csv = self.dir.join(format!("{stem}.csv"));
            result = snapshot::write_csv(field, &csv).map_err(io_err(&csv));
        }
        if let Err(e) = result {
            self.failure = Some(e);
        }
    }
}

fn log_frame(frame: &Frame<'_>, n_steps: usize) {
    if let Some((iu, iv)) = frame.iterations {
        debug!("step {} t {} solver iterations u {iu} v {iv}", frame.step, frame.t);
    }
    let tenth = (n_steps / 10).max(1);
    if frame.step.is_multiple_of(tenth) {
        info!("step {}/{n_steps} t = {}", frame.step, frame.t);
    }
}

fn write_final(dir: &Path, states: &[(&str, &State)]) -> Result<(), CliError> {
    let final_dir = dir.join("final");
    ensure_dir(&final_dir)?;
    let mut meta = String::new();
    for (name, s) in states {
        for (species, field) in [("u", &s.u), ("v", &s.v)] {
            let file = if name.is_empty() {
                format!("{species}.csv")
            } else {
                format!("{name}_{species}.csv")
            };
            let path = final_dir.join(file);
            snapshot::write_csv(field, &path).map_err(io_err(&path))?;
        }
        let prefix = if name.is_empty() {
            String::new()
        } else {
            format!("{name}_")
        };
        let _ = writeln!(meta, "{prefix}step = {}\n{prefix}t = {}", s.step, s.t);
    }
    write_file(&final_dir.join("meta.txt"), &meta)
}

fn write_config(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    write_file(&dir.join("config.toml"), &cfg.to_toml_string()?)
}

/// Runs the reference system only.
pub fn cmd_truth(cfg: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(cfg, opts);
    let dir = output_dir(&cfg, opts);
    ensure_dir(&dir)?;
    write_config(&cfg, &dir)?;
    let n_steps = cfg.time_grid().n_steps;
    let mut snaps = SnapshotWriter::new(&cfg, &dir);
    let (mut iters_u, mut iters_v) = (0usize, 0usize);
    let outcome = simulate_truth(&cfg, |frame| {
        log_frame(frame, n_steps);
        if let Some((iu, iv)) = frame.iterations {
            iters_u += iu;
            iters_v += iv;
        }
        if snaps.due(frame.step) {
            snaps.write("u", frame.step, &frame.truth.u);
            snaps.write("v", frame.step, &frame.truth.v);
        }
    })?;
    if let Some(e) = snaps.failure {
        return Err(e);
    }
    let s = &outcome.state;
    write_final(&dir, &[("", s)])?;

    let (incr_u, incr_v) = outcome.energy.increment_sums();
    let (grad_u, grad_v) = outcome.energy.gradient_sums();
    let variance_v = s.v.variance();
    let mut text = String::new();
    for (k, v) in [
        ("steps", s.step.to_string()),
        ("t_end", s.t.to_string()),
        ("min_u", s.u.min().to_string()),
        ("max_u", s.u.max().to_string()),
        ("min_v", s.v.min().to_string()),
        ("max_v", s.v.max().to_string()),
        ("variance_v", variance_v.to_string()),
        ("solver_iterations_u", iters_u.to_string()),
        ("solver_iterations_v", iters_v.to_string()),
        ("max_mass", outcome.energy.max_mass().to_string()),
        ("sum_increment_u", incr_u.to_string()),
        ("sum_increment_v", incr_v.to_string()),
        ("sum_dt_h1_u", grad_u.to_string()),
        ("sum_dt_h1_v", grad_v.to_string()),
    ] {
        let _ = writeln!(text, "{k} = {v}");
    }
    write_file(&dir.join("summary.txt"), &text)?;
    let _ = write!(out, "{text}");
    let _ = writeln!(out, "output: {}", dir.display());

    if opts.assert && variance_v <= cfg.assertions.min_pattern_variance {
        return Err(CliError::Assert(vec![format!(
            "variance of v {variance_v} does not exceed {}",
            cfg.assertions.min_pattern_variance
        )]));
    }
    Ok(())
}

/// Runs one paired simulation into `dir` and returns its summary.
fn assimilate_into(cfg: &RunConfig, dir: &Path) -> Result<Summary, CliError> {
    ensure_dir(dir)?;
    write_config(cfg, dir)?;
    let n_steps = cfg.time_grid().n_steps;
    let pair = cfg.transfer_pair();
    let mut snaps = SnapshotWriter::new(cfg, dir);
    let outcome = simulate_pair(cfg, |frame| {
        log_frame(frame, n_steps);
        if snaps.due(frame.step) {
            let nudged = frame.nudged.expect("paired runs carry both states");
            snaps.write("u", frame.step, &frame.truth.u);
            snaps.write("v", frame.step, &frame.truth.v);
            snaps.write("nudged_u", frame.step, &nudged.u);
            snaps.write("nudged_v", frame.step, &nudged.v);
            match observe_state(frame.truth, &pair) {
                Ok(obs) => {
                    snaps.write("obs_u", frame.step, &obs.u);
                    snaps.write("obs_v", frame.step, &obs.v);
                }
                Err(e) => warn!("observation snapshot skipped: {e}"),
            }
        }
    })?;
    if let Some(e) = snaps.failure {
        return Err(e);
    }
    write_final(dir, &[("", &outcome.truth), ("nudged", &outcome.nudged)])?;
    let csv = dir.join("errors.csv");
    outcome
        .series
        .thinned(cfg.io.csv_every)
        .write_csv(&csv)
        .map_err(io_err(&csv))?;
    let summary = summarize(cfg, &outcome);
    write_file(&dir.join("summary.txt"), &summary.to_text())?;
    Ok(summary)
}

fn gate(cfg: &RunConfig, summary: &Summary, label: &str) -> Option<String> {
    let a = &cfg.assertions;
    if summary.control {
        (summary.final_rel_err_v <= a.min_control_rel_err_v).then(|| {
            format!(
                "{label}: control run reached rel_err_v {} <= {}",
                summary.final_rel_err_v, a.min_control_rel_err_v
            )
        })
    } else {
        (summary.final_rel_err_v > a.max_final_rel_err_v).then(|| {
            format!(
                "{label}: final rel_err_v {} > {}",
                summary.final_rel_err_v, a.max_final_rel_err_v
            )
        })
    }
}

/// Runs the reference and nudged systems together.
pub fn cmd_assimilate(cfg: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(cfg, opts);
    let dir = output_dir(&cfg, opts);
    let summary = assimilate_into(&cfg, &dir)?;
    let _ = write!(out, "{}", summary.to_text());
    let _ = writeln!(out, "output: {}", dir.display());
    match opts.assert.then(|| gate(&cfg, &summary, &cfg.run.name)).flatten() {
        Some(msg) => Err(CliError::Assert(vec![msg])),
        None => Ok(()),
    }
}

/// Prints the synchronization conditions; informational only.
pub fn cmd_check(cfg: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(cfg, opts);
    let _ = writeln!(
        out,
        "{}: fine {}x{}, coarse {}x{}, dt {}",
        cfg.run.name, cfg.grid.fine_nx, cfg.grid.fine_nx, cfg.grid.coarse_nx, cfg.grid.coarse_nx, cfg.time.dt
    );
    let _ = writeln!(out, "{}", theory_report(&cfg));
    if let Some(sweep) = &cfg.sweep {
        for &value in &sweep.values {
            let c = cfg.with_sweep_value(sweep.parameter, value)?;
            let _ = writeln!(out, "\n{} = {value}", sweep.parameter);
            let _ = writeln!(out, "{}", theory_report(&c));
        }
    }
    Ok(())
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub value: f64,
    pub summary: Summary,
}

pub const SWEEP_CSV_HEADER: &str = "value,final_rel_err_u,final_rel_err_v,delta_emp,t_sync_1e-8";

pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in results {
        let s = &r.summary;
        let t = s.t_sync.map_or(String::new(), |t| t.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{t}",
            r.value, s.final_rel_err_u, s.final_rel_err_v, s.delta_emp
        );
    }
    out
}

/// Runs one paired simulation per swept value, each in its own subdirectory.
pub fn cmd_sweep(cfg: &RunConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(cfg, opts);
    let sweep = cfg.sweep.clone().ok_or_else(|| {
        CliError::Config(ConfigError::Invalid {
            field: "sweep".into(),
            reason: "the sweep command needs a [sweep] section".into(),
        })
    })?;
    let dir = output_dir(&cfg, opts);
    ensure_dir(&dir)?;
    write_config(&cfg, &dir)?;
    let runs: Vec<(f64, RunConfig)> = sweep
        .values
        .iter()
        .map(|&v| Ok((v, cfg.with_sweep_value(sweep.parameter, v)?)))
        .collect::<Result<_, ConfigError>>()?;
    let one = |(value, c): &(f64, RunConfig)| -> Result<SweepResult, CliError> {
        let sub = dir.join(subdir_name(sweep.parameter, *value));
        info!("sweep {} = {value}", sweep.parameter);
        Ok(SweepResult {
            value: *value,
            summary: assimilate_into(c, &sub)?,
        })
    };
    let results: Vec<SweepResult> = if cfg.run.deterministic {
        runs.iter().map(one).collect::<Result<_, _>>()?
    } else {
        runs.par_iter().map(one).collect::<Result<_, _>>()?
    };
    let table = sweep_csv(&results);
    write_file(&dir.join("sweep.csv"), &table)?;
    let _ = write!(out, "{table}");
    let _ = writeln!(out, "output: {}", dir.display());

    if opts.assert {
        let failures: Vec<String> = results
            .iter()
            .zip(&runs)
            .filter_map(|(r, (_, c))| gate(c, &r.summary, &format!("{} = {}", sweep.parameter, r.value)))
            .collect();
        if !failures.is_empty() {
            return Err(CliError::Assert(failures));
        }
    }
    Ok(())
}

fn subdir_name(parameter: SweepParameter, value: f64) -> String {
    format!("{parameter}={value}")
}

#[derive(Debug, Parser)]
#[command(
    name = "gsnudge",
    version,
    about = "Gray-Scott simulation with nudging data assimilation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the reference system and write snapshots.
    Truth(CommonArgs),
    /// Run the reference and nudged systems and measure their distance.
    Assimilate(CommonArgs),
    /// Evaluate the sufficient synchronization conditions without simulating.
    Check(CommonArgs),
    /// Run one assimilation per value of the config's [sweep] section.
    Sweep(CommonArgs),
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file (TOML).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled preset name instead of a file.
    #[arg(long)]
    pub preset: Option<String>,
    /// `desk` applies the config's reduced-size overrides.
    #[arg(long, default_value = "paper")]
    pub scale: Scale,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sequential execution everywhere.
    #[arg(long)]
    pub deterministic: bool,
    /// Exit with status 4 when the run misses the config's [assert] thresholds.
    #[arg(long)]
    pub assert: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<(RunConfig, RunOptions), CliError> {
        let cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_path(path)?,
            (None, Some(name)) => crate::presets::load(name)?,
            (None, None) => unreachable!("clap requires one of --config/--preset"),
        };
        let opts = RunOptions {
            scale: self.scale,
            out_dir: self.out.clone(),
            deterministic: self.deterministic,
            assert: self.assert,
        };
        Ok((cfg, opts))
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Presets { name: None } => {
            for name in crate::presets::names() {
                let _ = writeln!(out, "{name}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => match crate::presets::preset_text(name) {
            Some(text) => {
                let _ = write!(out, "{text}");
                Ok(())
            }
            None => Err(CliError::Config(ConfigError::UnknownPreset(name.clone()))),
        },
        Command::Truth(a) => a.load().and_then(|(c, o)| cmd_truth(&c, &o, out)),
        Command::Assimilate(a) => a.load().and_then(|(c, o)| cmd_assimilate(&c, &o, out)),
        Command::Check(a) => a.load().and_then(|(c, o)| cmd_check(&c, &o, out)),
        Command::Sweep(a) => a.load().and_then(|(c, o)| cmd_sweep(&c, &o, out)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("gsnudge: {e}");
            e.exit_code()
        }
    }
}

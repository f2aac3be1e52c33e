use std::path::Path;
use std::process::Command;

use gsnudge::cli::{self, RunOptions, CONTROL_FLAG};
use gsnudge::config::{RunConfig, SeedSpec, SweepParameter, SweepSection};
use gsnudge::metrics::ErrorSeries;
use gsnudge::snapshot;

/// Baseline parameters on a small grid and a short horizon.
fn small() -> RunConfig {
    let mut cfg = gsnudge::presets::load("baseline-da").unwrap();
    cfg.grid.fine_nx = 24;
    cfg.grid.coarse_nx = 6;
    cfg.time.t_end = 20.0;
    cfg.io.snapshot_every = 5.0;
    cfg.run.name = "small".into();
    cfg
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out_dir: Some(dir.to_path_buf()),
        deterministic: true,
        ..Default::default()
    }
}

fn summary_map(dir: &Path) -> std::collections::HashMap<String, String> {
    std::fs::read_to_string(dir.join("summary.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsnudge"))
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, cfg.to_toml_string().unwrap()).unwrap();
    p
}

#[test]
fn steady_truth_stays_put() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.truth_seed = SeedSpec::steady();
    cfg.time.t_end = 50.0; // 100 steps
    cli::cmd_truth(&cfg, &opts(tmp.path()), &mut Vec::new()).unwrap();
    let u = snapshot::read_csv(&tmp.path().join("final/u.csv"), 1.0).unwrap();
    let v = snapshot::read_csv(&tmp.path().join("final/v.csv"), 1.0).unwrap();
    assert!(u.values().iter().all(|x| (x - 1.0).abs() <= 1e-12));
    assert!(v.values().iter().all(|x| x.abs() <= 1e-12));
    let meta = std::fs::read_to_string(tmp.path().join("final/meta.txt")).unwrap();
    assert!(meta.contains("step = 100"));
}

#[test]
fn truth_snapshots_are_named_by_step_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cli::cmd_truth(&small(), &opts(a.path()), &mut Vec::new()).unwrap();
    cli::cmd_truth(&small(), &opts(b.path()), &mut Vec::new()).unwrap();
    for step in [0, 10, 20, 30, 40] {
        for field in ["u", "v"] {
            let name = format!("{field}_{step:08}");
            let pgm = std::fs::read_to_string(a.path().join(format!("{name}.pgm"))).unwrap();
            assert!(pgm.starts_with("P2\n24 24\n65535\n"));
            let ca = std::fs::read(a.path().join(format!("{name}.csv"))).unwrap();
            let cb = std::fs::read(b.path().join(format!("{name}.csv"))).unwrap();
            assert_eq!(ca, cb, "{name}");
        }
    }
    assert!(!a.path().join("u_00000005.pgm").exists());
    let s = summary_map(a.path());
    assert_eq!(s["steps"], "40");
}

#[test]
fn identical_seeds_stay_synchronized() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.nudged_seed = cfg.truth_seed.clone();
    cli::cmd_assimilate(&cfg, &opts(tmp.path()), &mut Vec::new()).unwrap();
    let series = ErrorSeries::from_csv_str(&std::fs::read_to_string(tmp.path().join("errors.csv")).unwrap()).unwrap();
    assert_eq!(series.len(), 41);
    for r in series.rows() {
        assert!(r.rel_err_u <= 1e-12 && r.rel_err_v <= 1e-12, "{r:?}");
    }
}

#[test]
fn assimilate_writes_series_summary_and_three_panels() {
    let tmp = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    cli::cmd_assimilate(&small(), &opts(tmp.path()), &mut out).unwrap();
    let s = summary_map(tmp.path());
    for key in [
        "delta_emp",
        "final_rel_err_u",
        "final_rel_err_v",
        "theory_coercivity",
        "theory_dt",
        "theory_gain",
    ] {
        assert!(s.contains_key(key), "missing {key}");
    }
    assert_eq!(s["theory_gain"], "false");
    for prefix in ["u", "v", "nudged_u", "nudged_v", "obs_u", "obs_v"] {
        assert!(tmp.path().join(format!("{prefix}_00000010.pgm")).exists(), "{prefix}");
    }
    assert!(tmp.path().join("final/nudged_v.csv").exists());
    let reparsed = RunConfig::from_path(&tmp.path().join("config.toml")).unwrap();
    let mut expected = small();
    expected.run.deterministic = true;
    assert_eq!(reparsed, expected);
    assert!(String::from_utf8(out).unwrap().contains("final_rel_err_v"));
}

#[test]
fn control_run_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.nudging.mu_v = 0.0;
    cli::cmd_assimilate(&cfg, &opts(tmp.path()), &mut Vec::new()).unwrap();
    let s = summary_map(tmp.path());
    assert_eq!(s["status"], CONTROL_FLAG);
    assert!(s["final_rel_err_u"].parse::<f64>().unwrap() > 1e-3);
    assert!(s["final_rel_err_v"].parse::<f64>().unwrap() > 1e-3);
}

#[test]
fn csv_thinning_keeps_the_last_row() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.io.csv_every = 7;
    cli::cmd_assimilate(&cfg, &opts(tmp.path()), &mut Vec::new()).unwrap();
    let series = ErrorSeries::from_csv_str(&std::fs::read_to_string(tmp.path().join("errors.csv")).unwrap()).unwrap();
    let steps: Vec<usize> = series.rows().iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 7, 14, 21, 28, 35, 40]);
}

#[test]
fn check_reports_condition_numbers() {
    let mut out = Vec::new();
    let cfg = gsnudge::presets::load("baseline-da").unwrap();
    cli::cmd_check(&cfg, &RunOptions::default(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let h: f64 = 1.0 / 24.0;
    let rhs = 0.25 * 2.0 / std::f64::consts::PI.powi(2) * h * h;
    assert!(text.contains("8e-6"), "{text}");
    assert!(text.contains(&format!("{rhs:e}")), "{text}");

    let mut cfg6 = cfg.clone();
    cfg6.nudging.mu_v = 6.1;
    let r = cli::theory_report(&cfg6);
    assert!(r.gain.holds);
    let mut cfg_dt = cfg.clone();
    cfg_dt.time.dt = 0.1;
    assert!(cli::theory_report(&cfg_dt).time_step.holds);
}

#[test]
fn sweep_runs_each_value_in_its_own_directory() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.io.snapshot_every = 0.0;
    cfg.sweep = Some(SweepSection {
        parameter: SweepParameter::CoarseNx,
        values: vec![3.0, 6.0, 12.0],
    });
    cli::cmd_sweep(&cfg, &opts(a.path()), &mut Vec::new()).unwrap();
    let parallel = RunOptions {
        deterministic: false,
        ..opts(b.path())
    };
    cli::cmd_sweep(&cfg, &parallel, &mut Vec::new()).unwrap();
    for v in ["3", "6", "12"] {
        let sub = format!("coarse_nx={v}");
        assert!(a.path().join(&sub).join("summary.txt").exists());
        assert!(!a.path().join(&sub).join("u_00000000.pgm").exists());
        let ea = std::fs::read(a.path().join(&sub).join("errors.csv")).unwrap();
        let eb = std::fs::read(b.path().join(&sub).join("errors.csv")).unwrap();
        assert_eq!(ea, eb);
    }
    let table = std::fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with(cli::SWEEP_CSV_HEADER));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), &small());

    let st = bin().args(["check", "--config"]).arg(&good).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("not necessary"));

    let out = tmp.path().join("out");
    let st = bin()
        .args(["assimilate", "--deterministic", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));

    // 20 tu is far too short to synchronize
    let st = bin()
        .args(["assimilate", "--assert", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(4));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(
        &bad,
        small()
            .to_toml_string()
            .unwrap()
            .replace("coarse_nx = 6", "coarse_nx = 5"),
    )
    .unwrap();
    let st = bin().args(["truth", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("grid.coarse_nx"));

    let st = bin().args(["check", "--preset", "no-such-preset"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["check"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["sweep", "--config"]).arg(&good).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    let mut blow = small();
    blow.nudging.mu_v = 50.0;
    let blow = {
        let p = tmp.path().join("blow.toml");
        std::fs::write(&p, blow.to_toml_string().unwrap()).unwrap();
        p
    };
    let st = bin()
        .args(["assimilate", "--config"])
        .arg(&blow)
        .arg("--out")
        .arg(tmp.path().join("blow"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));
    let err = String::from_utf8_lossy(&st.stderr);
    assert!(err.contains("non-finite") && err.contains("in step"), "{err}");
}

#[test]
fn presets_listing() {
    let st = bin().arg("presets").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let names: Vec<String> = String::from_utf8_lossy(&st.stdout)
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(names.len(), 7);
    let st = bin().args(["presets", "delayed-da"]).output().unwrap();
    let text = String::from_utf8_lossy(&st.stdout);
    assert!(RunConfig::from_toml_str(&text).is_ok());
}

#[test]
fn desk_scale_flag_applies_overrides() {
    let cfg = gsnudge::presets::load("delayed-da").unwrap();
    let o = RunOptions {
        scale: "desk".parse().unwrap(),
        deterministic: true,
        ..Default::default()
    };
    let r = cli::resolve(&cfg, &o);
    assert_eq!((r.grid.fine_nx, r.time.t_end), (120, 1500.0));
    assert_eq!(r.nudging.schedule.to_string(), "delayed:500");
    assert!(r.run.deterministic);
}

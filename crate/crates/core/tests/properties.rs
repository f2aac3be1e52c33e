use proptest::prelude::*;

use gsnudge::config::{Rect, RunConfig, SeedFill, SweepParameter, SweepSection};
use gsnudge::dynamics::{observe_state, Gains};
use gsnudge::grid::{apply_neumann_laplacian, discrete_h1_seminorm_sq, inner_product, l2_norm};
use gsnudge::metrics::ErrorRow;
use gsnudge::solver::{self, from_alpha, solve_in_place, CgWorkspace, Preconditioner};
use gsnudge::transfer::{observe, prolong, restrict};
use gsnudge::{ErrorSeries, Field, GridSpec, ModelParams, Schedule, SolverSettings, State, Stepper, TransferPair};

fn field(nx: usize, lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    prop::collection::vec(lo..=hi, nx * nx).prop_map(move |v| Field::new(GridSpec::unit(nx).unwrap(), v).unwrap())
}

fn sized_field(max_nx: usize) -> impl Strategy<Value = Field> {
    (1..=max_nx).prop_flat_map(|nx| field(nx, -10.0, 10.0))
}

fn field_pair(max_nx: usize) -> impl Strategy<Value = (Field, Field)> {
    (1..=max_nx).prop_flat_map(|nx| (field(nx, -10.0, 10.0), field(nx, -10.0, 10.0)))
}

/// Fine field with a compatible transfer pair.
fn observed_field() -> impl Strategy<Value = (Field, TransferPair)> {
    (1usize..=6, 1usize..=5).prop_flat_map(|(nc, r)| {
        let nx = nc * r;
        field(nx, -5.0, 5.0).prop_map(move |f| {
            let pair = TransferPair::new(GridSpec::unit(nx).unwrap(), GridSpec::unit(nc).unwrap()).unwrap();
            (f, pair)
        })
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_conserves_mass(f in sized_field(12)) {
        let lap = apply_neumann_laplacian(&f);
        let total: f64 = lap.values().iter().sum();
        let scale: f64 = f.values().iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        prop_assert!(total.abs() <= 1e-12 * scale);
    }

    #[test]
    fn laplacian_is_symmetric_and_matches_seminorm((a, b) in field_pair(10)) {
        let ab = inner_product(&apply_neumann_laplacian(&a), &b).unwrap();
        let ba = inner_product(&a, &apply_neumann_laplacian(&b)).unwrap();
        prop_assert!(close(ab, ba, 1e-12));
        // -(La, a) = h² |a|²_{1,h}
        let h = a.grid().h();
        let energy = -inner_product(&apply_neumann_laplacian(&a), &a).unwrap();
        prop_assert!(close(energy, h * h * discrete_h1_seminorm_sq(&a), 1e-12));
        prop_assert!(discrete_h1_seminorm_sq(&a) >= 0.0);
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear((a, b) in field_pair(8), s in -3.0f64..3.0) {
        prop_assert!(close(inner_product(&a, &b).unwrap(), inner_product(&b, &a).unwrap(), 1e-14));
        let sa = Field::new(*a.grid(), a.values().iter().map(|x| s * x).collect()).unwrap();
        prop_assert!(close(inner_product(&sa, &b).unwrap(), s * inner_product(&a, &b).unwrap(), 1e-12));
        let sum = a.add(&b).unwrap();
        let lhs = inner_product(&sum, &b).unwrap();
        let rhs = inner_product(&a, &b).unwrap() + inner_product(&b, &b).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn norm_axioms((a, b) in field_pair(8), s in -3.0f64..3.0) {
        let na = l2_norm(&a);
        prop_assert!(na >= 0.0);
        prop_assert!(l2_norm(&a.add(&b).unwrap()) <= na + l2_norm(&b) + 1e-12);
        let sa = Field::new(*a.grid(), a.values().iter().map(|x| s * x).collect()).unwrap();
        prop_assert!(close(l2_norm(&sa), s.abs() * na, 1e-12));
        prop_assert!(close(na * na, inner_product(&a, &a).unwrap(), 1e-12));
        let zero = Field::zeros(*a.grid());
        prop_assert_eq!(l2_norm(&zero), 0.0);
    }

    #[test]
    fn observation_is_idempotent_mean_preserving_and_bounded((f, pair) in observed_field()) {
        let o = observe(&f, &pair).unwrap();
        let oo = observe(&o, &pair).unwrap();
        for (x, y) in o.values().iter().zip(oo.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!(close(o.mean(), f.mean(), 1e-12));
        prop_assert!(o.min() >= f.min() - 1e-12 && o.max() <= f.max() + 1e-12);
        // injection followed by averaging recovers the coarse field
        let c = restrict(&f, &pair).unwrap();
        let back = restrict(&prolong(&c, &pair).unwrap(), &pair).unwrap();
        for (x, y) in c.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn implicit_operator_is_spd(f in sized_field(10), alpha in 1e-6f64..2.0) {
        let op = from_alpha(*f.grid(), alpha);
        let af = solver::apply(&op, &f).unwrap();
        let q = inner_product(&af, &f).unwrap();
        let n2 = inner_product(&f, &f).unwrap();
        // (Ax, x) = ‖x‖² + α h² |x|²_{1,h} ≥ ‖x‖²
        prop_assert!(q >= n2 * (1.0 - 1e-12));
        if n2 > 0.0 {
            prop_assert!(q > 0.0);
        }
    }

    #[test]
    fn preconditioned_and_plain_cg_agree(f in sized_field(16), alpha in 1e-6f64..2.0) {
        let op = from_alpha(*f.grid(), alpha);
        let mut ws = CgWorkspace::new(f.values().len());
        let solve = |pc: Preconditioner, ws: &mut CgWorkspace| {
            let settings = SolverSettings { tol: 1e-12, max_iter: None, preconditioner: pc };
            let mut x = f.values().to_vec();
            let report = solve_in_place(&op, f.values(), &mut x, &settings, ws).unwrap();
            (x, report)
        };
        let (xj, rj) = solve(Preconditioner::Jacobi, &mut ws);
        let (xi, ri) = solve(Preconditioner::Identity, &mut ws);
        prop_assert!(rj.converged && ri.converged);
        let scale = l2_vec(f.values()).max(1.0);
        let diff = xj.iter().zip(&xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-9 * scale, "diff {diff:e}");
    }

    /// On the invariant region u, v ≥ 0, u + v ≤ 1 one reference step keeps
    /// both species in [0, 1].
    #[test]
    fn truth_step_preserves_unit_bounds_on_invariant_region(
        cells in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 144)
    ) {
        let g = GridSpec::unit(12).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = cells.iter().map(|&(a, b)| (a, b * (1.0 - a))).unzip();
        let s = State::new(Field::new(g, u).unwrap(), Field::new(g, v).unwrap()).unwrap();
        let mut st = Stepper::new(g, ModelParams::LABYRINTH, 0.5, SolverSettings::default()).unwrap();
        let next = st.truth_step(&s).unwrap();
        prop_assert!(next.u.min() >= -1e-9 && next.u.max() <= 1.0 + 1e-9);
        prop_assert!(next.v.min() >= -1e-9 && next.v.max() <= 1.0 + 1e-9);
    }

    #[test]
    fn synchronized_nudged_step_equals_truth_step(
        cells in prop::collection::vec((0.0f64..=1.0, 0.0f64..=0.5), 144),
        mu_v in 0.0f64..2.0,
    ) {
        let g = GridSpec::unit(12).unwrap();
        let pair = TransferPair::new(g, GridSpec::unit(4).unwrap()).unwrap();
        let (u, v): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
        let s = State::new(Field::new(g, u).unwrap(), Field::new(g, v).unwrap()).unwrap();
        let mut st = Stepper::new(g, ModelParams::LABYRINTH, 0.5, SolverSettings::default()).unwrap();
        let truth = st.truth_step(&s).unwrap();
        let obs = observe_state(&s, &pair).unwrap();
        let nudged = st.nudged_step(&s, &obs, Gains { mu_u: 0.0, mu_v }, &pair).unwrap();
        prop_assert_eq!(truth, nudged);
    }

    #[test]
    fn schedule_text_roundtrip(kind in 0u8..3, a in 0.0f64..5000.0, b in 0.001f64..5000.0) {
        let s = match kind {
            0 => Schedule::FromStart,
            1 => Schedule::Delayed { t_on: a },
            _ => Schedule::Periodic { on: b, off: a },
        };
        prop_assert_eq!(s.to_string().parse::<Schedule>().unwrap(), s);
    }

    #[test]
    fn error_series_csv_roundtrip(errs in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, any::<bool>()), 1..50)) {
        let mut s = ErrorSeries::new();
        for (k, &(a, b, active)) in errs.iter().enumerate() {
            s.push(ErrorRow {
                step: k,
                t: k as f64 * 0.5,
                rel_err_u: a,
                rel_err_v: b,
                abs_err_u: a * 0.3,
                abs_err_v: b * 0.7,
                nudging_active: active,
            }).unwrap();
        }
        let back = ErrorSeries::from_csv_str(&s.to_csv_string()).unwrap();
        prop_assert_eq!(back.rows(), s.rows());
    }

    #[test]
    fn config_roundtrip(
        nc in 1usize..8, r in 1usize..6,
        dt in 0.01f64..1.0, t_end in 1.0f64..5000.0,
        mu_u in 0.0f64..3.0, mu_v in 0.0f64..3.0,
        sched in 0u8..3, t_on in 0.0f64..2000.0,
        rect in (0.0f64..0.5, 0.0f64..0.5, 0.0f64..1.0, 0.0f64..1.0),
        fill_avg in any::<bool>(),
        sweep in proptest::option::of(prop::collection::vec(0.01f64..2.0, 1..4)),
        max_iter in proptest::option::of(1usize..10_000),
        seed in 0..=i64::MAX as u64,
    ) {
        let mut cfg = gsnudge::presets::load("baseline-da").unwrap();
        cfg.grid.coarse_nx = nc;
        cfg.grid.fine_nx = nc * r;
        cfg.time.dt = dt;
        cfg.time.t_end = t_end;
        cfg.nudging.mu_u = mu_u;
        cfg.nudging.mu_v = mu_v;
        cfg.nudging.schedule = match sched {
            0 => Schedule::FromStart,
            1 => Schedule::Delayed { t_on },
            _ => Schedule::Periodic { on: t_on + 1.0, off: t_on },
        };
        cfg.truth_seed.rects.push(Rect { x0: rect.0, x1: rect.0 + 0.5, y0: rect.1, y1: rect.1 + 0.5, u: rect.2, v: rect.3 });
        cfg.truth_seed.fill = if fill_avg { SeedFill::CellAverage } else { SeedFill::Center };
        cfg.sweep = sweep.map(|values| SweepSection { parameter: SweepParameter::MuV, values });
        cfg.solver.max_iter = max_iter;
        cfg.run.rng_seed = seed;
        cfg.io.out_dir = Some("somewhere/else".into());
        cfg.desk.schedule = Some(Schedule::Delayed { t_on: 500.0 });
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn snapshot_csv_roundtrip(f in sized_field(9)) {
        let text = gsnudge::snapshot::to_csv_string(&f);
        prop_assert_eq!(gsnudge::snapshot::from_csv_str(&text, 1.0).unwrap(), f);
    }
}

fn l2_vec(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn interpolation_bound_is_resolution_independent() {
    let gamma0 = gsnudge::dynamics::TheoryConstants::default().gamma0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let grad_sq = 2.0 * std::f64::consts::PI.powi(2);
    let mut ratios = Vec::new();
    for nx in [48, 96, 192] {
        let fine = GridSpec::unit(nx).unwrap();
        let pair = TransferPair::new(fine, GridSpec::unit(nx / 2).unwrap()).unwrap();
        let f = Field::from_fn(fine, |x, y| (two_pi * x).sin() * (two_pi * y).sin());
        let d = f.sub(&observe(&f, &pair).unwrap()).unwrap();
        let h = pair.coarse_h();
        ratios.push(inner_product(&d, &d).unwrap() / (h * h * grad_sq));
    }
    for r in &ratios {
        assert!(*r < gamma0, "{ratios:?}");
    }
    // second-order behaviour: the ratio settles as the grids refine
    assert!((ratios[2] / ratios[1] - 1.0).abs() < (ratios[1] / ratios[0] - 1.0).abs());
    assert!((ratios[2] / ratios[1] - 1.0).abs() < 0.01);
}

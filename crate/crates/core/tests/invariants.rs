use std::sync::Arc;

use proptest::prelude::*;

use kscollapse::cli::Config;
use kscollapse::diagnostics::{absorption_iteration, mass_defect, monotonicity_defect, triple_norm};
use kscollapse::grid::{build_grid, Grading, Grid, LeftBoundary, WField};
use kscollapse::model::{accumulate_initial, cap_initial, unit_sphere_area, InitialData, InitialKind, ProblemParams};
use kscollapse::reconstruct::{density, emit_measure, CLOSURE_TOL};
use kscollapse::solver::{extract_theta, run, uniform_schedule, Regularization, RunOptions, RunSpec, ThetaTrace};

fn grid(m: usize) -> Arc<Grid> {
    Arc::new(build_grid(m, 1.0, 1e-6, Grading::Geometric).unwrap())
}

/// A nondecreasing field on `[s_min, 1]` from random nonnegative increments,
/// pinned to `cap` at the last node.
fn monotone_field(increments: &[f64], cap: f64) -> WField {
    let g = Arc::new(build_grid(increments.len(), 1.0, 1e-3, Grading::Geometric).unwrap());
    let total: f64 = increments.iter().sum();
    let mut acc = 0.0;
    let mut w: Vec<f64> = increments
        .iter()
        .map(|d| {
            acc += d;
            cap * acc / total
        })
        .collect();
    *w.last_mut().unwrap() = cap;
    WField::new(g, w, 0.0, LeftBoundary::DirichletZero)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn absorption_iterates_rise_to_the_cap(a0 in 0.0..1.0f64, cap in 1.0..10.0f64, k in 0usize..200) {
        let a = absorption_iteration(a0, cap, k);
        let b = absorption_iteration(a0, cap, k + 1);
        prop_assert!(a <= b && b <= cap);
        let expected = cap - (cap - a0) * (26.0f64 / 27.0).powi(k as i32);
        prop_assert!((a - expected).abs() <= 1e-12 * cap);
    }

    #[test]
    fn triple_norm_is_homogeneous(c in 0.1..10.0f64, gamma in 0.05..0.95f64) {
        let g = grid(128);
        let w: Vec<f64> = g.nodes().iter().map(|s| s.powf(gamma)).collect();
        let f = WField::new(g.clone(), w.clone(), 0.0, LeftBoundary::DirichletZero);
        let scaled = WField::new(g, w.iter().map(|v| c * v).collect(), 0.0, LeftBoundary::DirichletZero);
        prop_assert!((triple_norm(&f, gamma) - 1.0).abs() < 1e-12);
        prop_assert!((triple_norm(&scaled, gamma) - c).abs() < 1e-12 * c);
    }

    #[test]
    fn monotone_fields_have_nonnegative_density_and_close(
        increments in prop::collection::vec(0.0..1.0f64, 16..96),
        cap in 0.5..3.0f64,
    ) {
        prop_assume!(increments.iter().sum::<f64>() > 1e-3);
        let p = ProblemParams::new(3, 1.0, cap * unit_sphere_area(3)).unwrap();
        let f = monotone_field(&increments, p.mass_cap());
        prop_assert_eq!(mass_defect(&f, &p), 0.0);
        prop_assert!(monotonicity_defect(&f) >= 0.0);
        let probes: Vec<f64> = (1..=50).map(|k| k as f64 / 50.0).collect();
        prop_assert!(density(&f, &p, &probes).unwrap().iter().all(|&r| r >= 0.0));
        let m = emit_measure(&f, &p).unwrap();
        prop_assert!(m.rho.iter().all(|&r| r >= 0.0));
        prop_assert!(m.theta >= 0.0 && m.theta <= p.mass());
        prop_assert!(m.closes(&p), "closure {} > {}", m.closure_defect, CLOSURE_TOL * p.mass());
    }

    #[test]
    fn affine_profiles_give_back_their_atom(theta_w in 0.05..0.9f64) {
        let p = ProblemParams::new(3, 1.0, unit_sphere_area(3)).unwrap();
        let g = grid(256);
        let w = g.nodes().iter().map(|&s| theta_w + (1.0 - theta_w) * s).collect();
        let e = extract_theta(&WField::new(g, w, 0.0, LeftBoundary::Free), &p).unwrap();
        prop_assert!((e.theta_w - theta_w).abs() < 1e-9);
    }

    #[test]
    fn capped_data_lies_under_both_bounds(eps in 1e-4..0.5f64, s in 1e-6..1.0f64) {
        let w0 = |x: f64| x.sqrt();
        let v = cap_initial(w0, eps, s);
        prop_assert!(v <= s / eps && v <= w0(s));
        prop_assert!(v == s / eps || v == w0(s));
    }

    #[test]
    fn config_values_round_trip(key in "[a-z][a-z_]{0,8}", value in -1e6..1e6f64, line_pad in 0usize..3) {
        let text = format!("{}[solver]\n{key} = {value}\n", "\n".repeat(line_pad));
        let cfg = Config::parse(&text).unwrap();
        prop_assert_eq!(cfg.get::<f64>("solver", &key).unwrap(), Some(value));
    }
}

/// `u(r) = a + b r²`, whose mass is `ω_n(a Rⁿ/n + b R^{n+2}/(n+2))`.
fn quadratic_density(n: u32, a: f64, b: f64) -> (ProblemParams, impl Fn(f64) -> f64 + Send + Sync + Copy + 'static) {
    let nf = n as f64;
    let mass = unit_sphere_area(n) * (a / nf + b / (nf + 2.0));
    (ProblemParams::new(n, 1.0, mass).unwrap(), move |r: f64| a + b * r * r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn density_inverts_accumulation(n in 3u32..6, a in 0.1..3.0f64, b in 0.0..3.0f64) {
        let (p, u) = quadratic_density(n, a, b);
        let w0 = accumulate_initial(u, &p).unwrap();
        let g = Arc::new(build_grid(2048, 1.0, 1e-6, Grading::Geometric).unwrap());
        let w = g.nodes().iter().map(|&s| w0(s)).collect();
        let f = WField::new(g, w, 0.0, LeftBoundary::DirichletZero);
        let probes: Vec<f64> = (2..=18).map(|k| k as f64 / 20.0).collect();
        for (r, rho) in probes.iter().zip(density(&f, &p, &probes).unwrap()) {
            prop_assert!((rho - u(*r)).abs() < 1e-3 * u(*r), "r = {r}: {rho} vs {}", u(*r));
        }
    }

    #[test]
    fn solver_keeps_bounds_and_monotone_theta(c in 1.0..5.0f64, gamma in 0.05..0.3f64, log_delta in -5.0..-2.0f64) {
        let p = ProblemParams::new(3, 1.0, 5.0 * unit_sphere_area(3)).unwrap();
        let init = InitialData::new(InitialKind::CollapseFamily { c, gamma, delta: 10f64.powf(log_delta) }, p).unwrap();
        let spec = RunSpec {
            params: p,
            initial: init,
            reg: Regularization::capped(1e-3).unwrap(),
            grid: grid(256),
            left: LeftBoundary::DirichletZero,
            options: RunOptions::default(),
        };
        let traj = run(&spec, 0.05, &uniform_schedule(0.05, 25)).unwrap();
        let cap = p.mass_cap();
        for f in &traj.snapshots {
            prop_assert!(f.values().iter().all(|&w| (0.0..=cap * (1.0 + 1e-9)).contains(&w)));
            prop_assert_eq!(mass_defect(f, &p), 0.0);
        }
        prop_assert!(traj.clipped_total() < 1e-6 * p.mass());
        let theta = ThetaTrace::from_trajectory(&traj).unwrap();
        prop_assert!(theta.max_decrease() <= 1e-5 * p.mass());
    }
}

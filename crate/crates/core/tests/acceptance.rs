//! Acceptance suite: one line per criterion, then a nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines print in
//! order.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use kscollapse::barriers::compare::compare_runs;
use kscollapse::barriers::verify::{verify_barriers, VerifyConfig};
use kscollapse::barriers::LinearGrowth;
use kscollapse::diagnostics::{absorption_iteration, magic_windows, mass_defect, MagicWindow};
use kscollapse::grid::{build_grid, Grading, Grid, LeftBoundary, WField};
use kscollapse::model::{unit_sphere_area, InitialData, InitialKind, ProblemParams};
use kscollapse::oracle::{compare_with_reference, convergence_study, stability_bound, ConvergenceConfig};
use kscollapse::reconstruct::emit_measure;
use kscollapse::solver::{
    regularization_limit, run, run_from, uniform_schedule, LimitLevel, LimitResult, LimitSpec, Regularization,
    RunOptions, RunSpec, ThetaTrace, Trajectory,
};
use kscollapse::Result;

// Pinned tolerances, relative to m, m/ω_n or (m/ω_n)/S as noted.
const AC1_RUNTIME_S: f64 = 60.0;
const AC1_JUNCTION: f64 = 1e-10;
const AC2_STEPS: usize = 10_000;
const AC2_TOL: f64 = 1e-9;
const AC3_CLOSURE: f64 = 1e-4;
const AC3_CLIPPED: f64 = 1e-6;
const AC3_SLOPE: f64 = -1e-6;
const AC4_PAIRS: usize = 20;
const AC4_TOL: f64 = 1e-6;
const AC5_TOL: f64 = 1e-5;
const AC6_ONSET: f64 = 0.01;
const AC6_SLOW: f64 = 0.2;
const AC6_RUNTIME_S: f64 = 600.0;
const AC7_SLACK: f64 = 1.05;
const AC8_DECREASE: f64 = 1e-5;
const AC8_JUMP_FACTOR: f64 = 3.0;
const AC9_THETA: f64 = 0.9;
const AC9_INTERIOR: f64 = 0.95;
const AC9_ENVELOPE: f64 = 5e-3;
const AC10_Q: f64 = 0.5;
const AC11_SPATIAL: f64 = 1.5;
const AC11_TEMPORAL: f64 = 0.9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn geometric(params: &ProblemParams, m: usize) -> Arc<Grid> {
    let s = params.s_max();
    Arc::new(build_grid(m, s, 1e-6 * s, Grading::Geometric).unwrap())
}

/// `n = 3`, `R = 1`, `m = 5ω₃`, collapse-family data `c = 5`, `γ = 0.3`,
/// `δ = 1e−5`.
fn collapse_params() -> (ProblemParams, InitialData) {
    let p = ProblemParams::new(3, 1.0, 5.0 * unit_sphere_area(3)).unwrap();
    let init = InitialData::new(InitialKind::CollapseFamily { c: 5.0, gamma: 0.3, delta: 1e-5 }, p).unwrap();
    (p, init)
}

/// Dense snapshots over the onset, coarser ones afterwards.
fn collapse_schedule(t_end: f64) -> Vec<f64> {
    let mut s = uniform_schedule(0.02, 400);
    s.extend(uniform_schedule(t_end, 100));
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

fn spec(params: ProblemParams, initial: InitialData, reg: Regularization, grid: Arc<Grid>, left: LeftBoundary) -> RunSpec {
    RunSpec { params, initial, reg, grid, left, options: RunOptions::default() }
}

/// One finished run that the conservation, θ and magic checks audit.
struct Regression {
    name: &'static str,
    traj: Trajectory,
    theta: ThetaTrace,
    /// `γ` of a slow-onset envelope `w₀ ≤ (a s)^γ`, when the data has one.
    envelope_gamma: Option<f64>,
}

struct Shared {
    collapse_limit: LimitResult,
    regressions: Vec<Regression>,
}

fn ac1() -> Result<Verdict> {
    let start = Instant::now();
    let report = verify_barriers(&VerifyConfig::default())?;
    let secs = start.elapsed().as_secs_f64();
    let junction = report.families.iter().filter_map(|f| f.junction_defect).fold(0.0, f64::max);
    let failing: Vec<_> = report.families.iter().filter(|f| !f.passed).map(|f| f.family).collect();
    let probes = report.families.iter().map(|f| f.probes).max().unwrap_or(0);
    verdict(
        report.passed && report.families.len() == 7 && junction < AC1_JUNCTION && secs < AC1_RUNTIME_S,
        format!(
            "7 families x 200 draws x {probes} probes, failing {failing:?}, worst junction {junction:.2e}, {secs:.1} s"
        ),
    )
}

fn ac2() -> Result<Verdict> {
    let p = ProblemParams::new(3, 1.0, unit_sphere_area(3)).unwrap();
    let grid = geometric(&p, 512);
    let fixed = RunOptions { fixed_dt: Some(1e-3), ..RunOptions::default() };
    let t_end = AC2_STEPS as f64 * 1e-3;
    let lin = RunSpec {
        options: fixed.clone(),
        ..spec(p, InitialData::new(InitialKind::Linear, p)?, Regularization::capped(1e-3)?, grid.clone(), LeftBoundary::DirichletZero)
    };
    let traj = run(&lin, t_end, &[])?;
    let w0 = lin.initial_field()?;
    let lin_dev = max_gap(traj.last(), &w0);
    let flat = WField::new(grid.clone(), vec![p.mass_cap(); grid.len()], 0.0, LeftBoundary::Free);
    let free = RunSpec { left: LeftBoundary::Free, reg: Regularization::limit(), ..lin.clone() };
    let ftraj = run_from(&free, flat.clone(), t_end, &[])?;
    let flat_dev = max_gap(ftraj.last(), &flat);
    let tol = AC2_TOL * p.mass_cap();
    verdict(
        traj.steps() == AC2_STEPS && ftraj.steps() == AC2_STEPS && lin_dev <= tol && flat_dev <= tol,
        format!("w = s drift {lin_dev:.2e}, constant (free) drift {flat_dev:.2e} after {AC2_STEPS} steps"),
    )
}

fn max_gap(a: &WField, b: &WField) -> f64 {
    a.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn ac3(shared: &Shared) -> Result<Verdict> {
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
    let mut fails = Vec::new();
    for reg in &shared.regressions {
        let p = reg.traj.params;
        let (m, cap) = (p.mass(), p.mass_cap());
        let defect = reg.traj.snapshots.iter().map(|f| mass_defect(f, &p)).fold(0.0, f64::max);
        let closure = reg
            .traj
            .snapshots
            .iter()
            .map(|f| emit_measure(f, &p).map(|s| s.closure_defect / m))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let clipped = reg.traj.clipped_total() / m;
        let slope = reg.traj.min_slope / (cap / p.s_max());
        worst = (worst.0.max(defect), worst.1.max(closure), worst.2.max(clipped), worst.3.min(slope));
        if defect != 0.0 || closure > AC3_CLOSURE || clipped >= AC3_CLIPPED || slope < AC3_SLOPE {
            fails.push(reg.name);
        }
    }
    verdict(
        fails.is_empty(),
        format!(
            "{} runs, mass defect {:.1e}, closure {:.2e} m, clipped {:.2e} m, min slope {:.2e} (m/ω_n)/S, failing {fails:?}",
            shared.regressions.len(),
            worst.0,
            worst.1,
            worst.2,
            worst.3
        ),
    )
}

fn ac4() -> Result<Verdict> {
    let p = ProblemParams::new(3, 1.0, 2.0 * unit_sphere_area(3)).unwrap();
    let grid = geometric(&p, 256);
    let reg = Regularization::capped(1e-3)?;
    let schedule = uniform_schedule(1.0, 50);
    let tol = AC4_TOL * p.mass_cap();
    let results: Vec<Result<f64>> = (0..AC4_PAIRS)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE + k as u64);
            let gamma = rng.random_range(0.05..0.3);
            let delta = 10f64.powf(rng.random_range(-4.0..-1.0));
            let c_lo = rng.random_range(0.2..1.0);
            let c_hi = rng.random_range(c_lo..2.0);
            let lo = InitialData::new(InitialKind::CollapseFamily { c: c_lo, gamma, delta }, p)?;
            let hi = InitialData::new(InitialKind::CollapseFamily { c: c_hi, gamma, delta }, p)?;
            let a = spec(p, lo, reg, grid.clone(), LeftBoundary::DirichletZero);
            let b = spec(p, hi, reg, grid.clone(), LeftBoundary::DirichletZero);
            Ok(compare_runs(&a, &b, 1.0, &schedule, tol)?.worst)
        })
        .collect();
    let worst = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    verdict(worst <= tol, format!("{AC4_PAIRS} ordered pairs on [0, 1], worst max(lower − upper) {:.2e} m/ω_n", worst / p.mass_cap()))
}

fn ac5() -> Result<Verdict> {
    let (p, init) = collapse_params();
    let spec = LimitSpec {
        tolerance: AC5_TOL * p.mass_cap(),
        ..LimitSpec::on_grid(p, init, &[1e-2, 1e-3, 1e-4], geometric(&p, 512), 1.0, collapse_schedule(1.0))
    };
    let out = regularization_limit(&spec)?;
    let o = out.ordering;
    verdict(
        o.violations == 0 && o.worst <= spec.tolerance,
        format!("ε = 1e-2, 1e-3, 1e-4 on 512 nodes, worst breach {:.2e} m/ω_n, {} violations", o.worst / p.mass_cap(), o.violations),
    )
}

fn ac6(shared: &Shared, secs: f64) -> Result<Verdict> {
    let (p, _) = collapse_params();
    let trace = &shared.collapse_limit.extrapolated;
    let onset = trace.onset(AC6_ONSET * p.mass());
    let pass = matches!(onset, Some((t, th)) if t < 1.0 && th < AC6_SLOW * p.mass()) && secs < AC6_RUNTIME_S;
    let detail = match onset {
        Some((t, th)) => format!("onset t₀ = {t:.4} with θ = {:.3} m at detection, {secs:.1} s", th / p.mass()),
        None => format!("no onset, final θ = {:.3} m", trace.last() / p.mass()),
    };
    verdict(pass, detail)
}

/// `w₀ ≤ (a s)^γ`, `a = 2`, `γ = 0.5`: `w₀ = min{√(2s), m/ω_n}` with
/// `m/ω_n = 1.4 < √2`. In five dimensions `γ < 1 − 2/n`, so a Dirac mass
/// forms and the bound is exercised.
fn slow_onset_case() -> (ProblemParams, InitialData) {
    let p = ProblemParams::new(5, 1.0, 1.4 * unit_sphere_area(5)).unwrap();
    let cap = p.mass_cap();
    let init = InitialData::new(InitialKind::Custom(Arc::new(move |s: f64| (2.0 * s).sqrt().min(cap))), p).unwrap();
    (p, init)
}

fn ac7(shared: &Shared) -> Result<Verdict> {
    let (p, init) = slow_onset_case();
    let reg = shared.regressions.iter().find(|r| r.name == "slow-onset").unwrap();
    let tau = 0.5;
    let bar = LinearGrowth::new(&p, 2.0, 0.5, tau)?;
    let c = bar.onset_constant(tau);
    let s = p.s_max();
    let dominated = (1..=10_000).all(|k| {
        let x = s * k as f64 / 10_000.0;
        init.w0(x) <= (2.0 * x).sqrt() * (1.0 + 1e-12)
    });
    let mut worst = 0.0_f64;
    for (&t, &th) in reg.theta.times.iter().zip(&reg.theta.theta) {
        if t > 0.0 && t <= tau {
            worst = worst.max(th / p.omega() / (c * t.powf(0.5)));
        }
    }
    verdict(
        dominated && worst <= AC7_SLACK,
        format!("c(0.5) = {c:.3}, max θ_w/(c t^γ) = {worst:.3} on (0, 0.5], final θ = {:.3} m", reg.theta.last() / p.mass()),
    )
}

/// Smallest `a` with `w₀ ≤ (a s)^γ` on the grid nodes.
fn envelope_slope(traj: &Trajectory, gamma: f64) -> f64 {
    let f = &traj.snapshots[0];
    f.nodes().iter().zip(f.values()).map(|(&s, &w)| w.powf(1.0 / gamma) / s).fold(0.0, f64::max)
}

fn ac8(shared: &Shared) -> Result<Verdict> {
    let mut lines = Vec::new();
    let mut pass = true;
    for reg in &shared.regressions {
        let p = reg.traj.params;
        let decrease = reg.theta.max_decrease() / p.mass();
        pass &= decrease <= AC8_DECREASE;
        let mut jump_ratio = 0.0_f64;
        if let Some(gamma) = reg.envelope_gamma {
            let a = envelope_slope(&reg.traj, gamma);
            let times = &reg.theta.times;
            // Onset window: from the last θ = 0 sample to the first θ ≥ m/2.
            let first = reg.theta.theta.iter().position(|&t| t > 0.0);
            let half = reg.theta.theta.iter().position(|&t| t >= 0.5 * p.mass());
            if let Some(first) = first {
                let start = first.saturating_sub(1);
                let end = half.unwrap_or(times.len() - 1);
                let horizon = times[end].max(times[start + 1]);
                let c = LinearGrowth::new(&p, a, gamma, horizon)?.onset_constant(horizon);
                for k in start..end {
                    let dt = times[k + 1] - times[k];
                    let jump = reg.theta.theta[k + 1] - reg.theta.theta[k];
                    jump_ratio = jump_ratio.max(jump / (AC8_JUMP_FACTOR * p.omega() * c * dt.powf(gamma)));
                }
            }
        }
        pass &= jump_ratio <= 1.0;
        lines.push(format!("{} decrease {decrease:.1e} m, jump/envelope {jump_ratio:.3}", reg.name));
    }
    verdict(pass, lines.join("; "))
}

fn ac9(shared: &Shared) -> Result<Verdict> {
    let reg = shared.regressions.iter().find(|r| r.name == "long-run").unwrap();
    let p = reg.traj.params;
    let cap = p.mass_cap();
    let last = reg.traj.last();
    let theta_t = reg.theta.last() / p.mass();
    let interior = last
        .nodes()
        .iter()
        .zip(last.values())
        .filter(|(&s, _)| s >= 0.1 * p.s_max())
        .map(|(_, &w)| w / cap)
        .fold(f64::INFINITY, f64::min);
    // Envelope: θ_w(t₀ + kτ₀) ≥ a_k − 5e−3·m/ω_n, τ₀ = 1, read from the last
    // sample at or before t₀ + kτ₀ (θ is nondecreasing).
    let (times, theta) = (&reg.theta.times, &reg.theta.theta);
    let i0 = theta.iter().position(|&t| t > 0.0).unwrap_or(0);
    let (t0, a0) = (times[i0], theta[i0] / p.omega());
    let t_end = *times.last().unwrap();
    let mut envelope = f64::INFINITY;
    let mut k = 0;
    while t0 + k as f64 <= t_end + 1e-9 {
        let tk = t0 + k as f64;
        let j = times.partition_point(|&t| t <= tk + 1e-9) - 1;
        let slack = theta[j] / p.omega() - (absorption_iteration(a0, cap, k) - AC9_ENVELOPE * cap);
        envelope = envelope.min(slack / cap);
        k += 1;
    }
    verdict(
        theta_t >= AC9_THETA && interior >= AC9_INTERIOR && envelope >= 0.0,
        format!(
            "T = {t_end}, θ(T) = {theta_t:.4} m, min w/(m/ω_n) on s ≥ 0.1S = {interior:.4}, envelope margin {envelope:.3e} (m/ω_n) over {k} iterates"
        ),
    )
}

fn ac10(shared: &Shared) -> Result<Verdict> {
    let mut pre = (0usize, 0usize, 0.0_f64);
    let mut post = (0usize, 0usize);
    for reg in &shared.regressions {
        for &tau in &[1e-3, 0.05] {
            let windows: Vec<MagicWindow> = magic_windows(&reg.traj, &reg.theta.theta, AC10_Q, tau)?;
            let onset = reg.theta.onset(0.0).map(|(t, _)| t);
            for w in windows {
                let i = &w.integral;
                if w.theta_max == 0.0 {
                    pre.0 += 1;
                    pre.1 += usize::from(i.violated());
                    pre.2 = pre.2.max(i.value / i.bound);
                } else if onset.is_some_and(|t| i.t0 >= t) && tau >= 0.05 {
                    post.0 += 1;
                    post.1 += usize::from(i.violated());
                }
            }
        }
    }
    verdict(
        pre.0 > 0 && pre.1 == 0 && post.0 > 0 && post.1 == post.0,
        format!(
            "pre-onset windows {} with {} violations (max I/B {:.3}); post-onset windows {} with {} firing",
            pre.0, pre.1, pre.2, post.0, post.1
        ),
    )
}

fn smooth_cases() -> Vec<(&'static str, RunSpec)> {
    let mut cases = Vec::new();
    let grid = |p: &ProblemParams| Arc::new(build_grid(128, p.s_max(), 1e-3 * p.s_max(), Grading::Geometric).unwrap());
    let p3 = ProblemParams::new(3, 1.0, unit_sphere_area(3)).unwrap();
    let fam = InitialData::new(InitialKind::CollapseFamily { c: 0.9, gamma: 0.3, delta: 0.1 }, p3).unwrap();
    cases.push(("collapse-family n=3", spec(p3, fam, Regularization::capped(1e-2).unwrap(), grid(&p3), LeftBoundary::DirichletZero)));
    let p4 = ProblemParams::new(4, 1.0, unit_sphere_area(4)).unwrap();
    let fam4 = InitialData::new(InitialKind::CollapseFamily { c: 1.0, gamma: 0.2, delta: 0.05 }, p4).unwrap();
    cases.push(("collapse-family n=4", spec(p4, fam4, Regularization::capped(1e-2).unwrap(), grid(&p4), LeftBoundary::DirichletZero)));
    let p3b = ProblemParams::new(3, 1.2, 2.0 * unit_sphere_area(3)).unwrap();
    let (cap, s) = (p3b.mass_cap(), p3b.s_max());
    let quad = InitialData::new(InitialKind::Custom(Arc::new(move |x: f64| cap * (x / s) * (2.0 - x / s))), p3b).unwrap();
    cases.push(("concave quadratic R=1.2", spec(p3b, quad, Regularization::capped(1e-2).unwrap(), grid(&p3b), LeftBoundary::DirichletZero)));
    let sine = InitialData::new(
        InitialKind::Custom(Arc::new(move |x: f64| (std::f64::consts::FRAC_PI_2 * x).sin())),
        p3,
    )
    .unwrap();
    cases.push((
        "sine, ν = 0.05, free",
        spec(p3, sine, Regularization::capped(1e-2).unwrap().with_nu(0.05), grid(&p3), LeftBoundary::Free),
    ));
    let p5 = ProblemParams::new(5, 1.0, unit_sphere_area(5)).unwrap();
    let convex = InitialData::new(InitialKind::Custom(Arc::new(|x: f64| x * x)), p5).unwrap();
    cases.push(("convex quadratic n=5", spec(p5, convex, Regularization::capped(1e-2).unwrap(), grid(&p5), LeftBoundary::DirichletZero)));
    cases
}

fn ac11() -> Result<Verdict> {
    let rows: Vec<Result<String>> = smooth_cases()
        .into_par_iter()
        .map(|(name, spec)| {
            let dt = 0.9 * stability_bound(spec.grid.nodes(), &spec.params, spec.reg.nu);
            let a = compare_with_reference(&spec, 0.05, dt)?;
            Ok(format!(
                "{name}: {} ({:.1e} vs {:.1e})",
                if a.agrees() { "agree" } else { "DISAGREE" },
                a.extrapolated_deviation,
                a.truncation_estimate + a.roundoff
            ))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let agree = rows.iter().all(|r| !r.contains("DISAGREE"));
    let p = ProblemParams::new(3, 1.0, unit_sphere_area(3)).unwrap();
    let study = convergence_study(&ConvergenceConfig::new(p))?;
    let (sp, tm) = (study.spatial.min_order().unwrap_or(0.0), study.temporal.min_order().unwrap_or(0.0));
    verdict(
        agree && sp >= AC11_SPATIAL && tm >= AC11_TEMPORAL,
        format!("{}; spatial order {sp:.3}, temporal order {tm:.3}", rows.join("; ")),
    )
}

const AC12_CONFIG: &str = "\
[problem] n = 3  R = 1  m = 62.83185307179586
[initial] kind = collapse-family  c = 5  gamma = 0.3  delta = 1e-5
[solver] M = 256  eps = 1e-3  t_end = 0.05  snapshots = 20
[limit] eps_seq = 1e-2, 1e-3, 1e-4
[barriers] draws = 5  probes = 200  seed = 7
[sweep] key = initial.delta  values = 1e-2, 1e-3
";

fn invoke(cmd: &str, cfg: &Path, out: &Path) -> i32 {
    kscollapse::cli::run_cli([
        "kscollapse",
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
    ])
}

fn ac12() -> Result<Verdict> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, AC12_CONFIG)?;
    let mut compared = 0;
    let mut differing = Vec::new();
    for cmd in ["simulate", "verify-barriers", "sweep"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        let codes = (invoke(cmd, &cfg, &a), invoke(cmd, &cfg, &b));
        if codes != (0, 0) {
            return verdict(false, format!("{cmd} exited with {codes:?}"));
        }
        let mut names: Vec<_> = std::fs::read_dir(&a)?.map(|e| e.map(|e| e.file_name())).collect::<std::io::Result<_>>()?;
        names.sort();
        for name in names {
            compared += 1;
            if std::fs::read(a.join(&name))? != std::fs::read(b.join(&name))? {
                differing.push(name.to_string_lossy().into_owned());
            }
        }
    }
    verdict(compared > 0 && differing.is_empty(), format!("{compared} files compared, differing {differing:?}"))
}

fn regressions() -> Result<Shared> {
    let (p, init) = collapse_params();
    let levels = [(1e-2, 512), (1e-3, 1024), (1e-4, 2048)]
        .iter()
        .map(|&(eps, m)| LimitLevel { eps, nu: 0.0, grid: geometric(&p, m) })
        .collect();
    let limit_spec = LimitSpec {
        levels,
        ..LimitSpec::on_grid(p, init.clone(), &[], geometric(&p, 512), 1.0, collapse_schedule(1.0))
    };
    let (collapse_limit, rest) = rayon::join(
        || regularization_limit(&limit_spec),
        || -> Result<Vec<Regression>> {
            let jobs: Vec<(&'static str, RunSpec, f64, Vec<f64>, Option<f64>)> = vec![
                {
                    let q = ProblemParams::new(3, 1.0, unit_sphere_area(3)).unwrap();
                    let s = spec(q, InitialData::new(InitialKind::Linear, q)?, Regularization::capped(1e-3)?, geometric(&q, 512), LeftBoundary::DirichletZero);
                    ("steady-linear", s, 1.0, uniform_schedule(1.0, 50), None)
                },
                {
                    let (q, i) = slow_onset_case();
                    let s = spec(q, i, Regularization::capped(1e-4)?, geometric(&q, 1024), LeftBoundary::DirichletZero);
                    ("slow-onset", s, 0.5, uniform_schedule(0.5, 200), Some(0.5))
                },
                {
                    let s = spec(p, init.clone(), Regularization::capped(1e-4)?, geometric(&p, 512), LeftBoundary::DirichletZero);
                    let mut sched = uniform_schedule(50.0, 100);
                    sched.extend(collapse_schedule(1.0));
                    sched.sort_by(f64::total_cmp);
                    sched.dedup();
                    ("long-run", s, 50.0, sched, Some(0.3))
                },
            ];
            jobs.into_par_iter()
                .map(|(name, s, t_end, sched, envelope_gamma)| {
                    let tagged = |e: kscollapse::Error| kscollapse::Error::Parameter(format!("{name}: {e}"));
                    let traj = run(&s, t_end, &sched).map_err(tagged)?;
                    let theta = ThetaTrace::from_trajectory(&traj).map_err(tagged)?;
                    Ok(Regression { name, traj, theta, envelope_gamma })
                })
                .collect()
        },
    );
    let collapse_limit = collapse_limit?;
    let mut regressions = rest?;
    regressions.push(Regression {
        name: "collapse-finest",
        traj: collapse_limit.finest().clone(),
        theta: collapse_limit.traces.last().unwrap().clone(),
        envelope_gamma: Some(0.3),
    });
    Ok(Shared { collapse_limit, regressions })
}

fn main() -> ExitCode {
    let mut lines: Vec<(u8, &str, Result<Verdict>)> = Vec::new();
    let mut report = |id: u8, name: &'static str, v: Result<Verdict>| {
        let (status, detail) = match &v {
            Ok(v) => (if v.pass { "PASS" } else { "FAIL" }, v.detail.clone()),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        println!("AC{id:<2} {status} {name}: {detail}");
        lines.push((id, name, v));
    };
    report(1, "barrier residual suite", ac1());
    report(2, "steady-state exactness", ac2());
    let start = Instant::now();
    let shared = regressions();
    let secs = start.elapsed().as_secs_f64();
    match &shared {
        Ok(shared) => {
            report(3, "conservation and bounds", ac3(shared));
            report(4, "comparison principle", ac4());
            report(5, "ε-monotonicity", ac5());
            report(6, "Dirac onset", ac6(shared, secs));
            report(7, "slow-onset bound", ac7(shared));
            report(8, "monotone θ", ac8(shared));
            report(9, "total absorption", ac9(shared));
            report(10, "magic-functional bound", ac10(shared));
        }
        Err(e) => {
            for (id, name) in [(3, "conservation and bounds"), (6, "Dirac onset"), (7, "slow-onset bound"), (8, "monotone θ"), (9, "total absorption"), (10, "magic-functional bound")] {
                report(id, name, Err(kscollapse::Error::Parameter(format!("regression runs failed: {e}"))));
            }
            report(4, "comparison principle", ac4());
            report(5, "ε-monotonicity", ac5());
        }
    }
    report(11, "oracle agreement and order", ac11());
    report(12, "reproducibility", ac12());
    let failed = lines.iter().filter(|(_, _, v)| !matches!(v, Ok(v) if v.pass)).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

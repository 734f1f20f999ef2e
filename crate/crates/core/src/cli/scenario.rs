//! Scenarios built from a [`Config`] and the artifacts they produce.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::barriers::verify::VerifyConfig;
use crate::barriers::Family;
use crate::diagnostics::{self, DiagnosticsConfig, DiagnosticsRecord};
use crate::grid::{build_grid, Grading, Grid, LeftBoundary};
use crate::model::{InitialData, InitialKind, ProblemParams};
use crate::oracle::ConvergenceConfig;
use crate::reconstruct::{self, MeasureState};
use crate::solver::{
    regularization_limit, run, uniform_schedule, LimitLevel, LimitSpec, OrderingDefect, Regularization, RunOptions,
    RunSpec, ThetaTrace, Trajectory, Transport,
};
use crate::{Error, Result};

use super::config::Config;

const PROBLEM_KEYS: &[&str] = &["n", "R", "m"];
const INITIAL_KEYS: &[&str] = &["kind", "c", "gamma", "delta", "samples"];
const SOLVER_KEYS: &[&str] = &[
    "M", "s_min", "grading", "eps", "nu", "left", "t_end", "snapshots", "early_until", "early_snapshots", "transport",
    "change_tol", "dt_max", "dt",
];
const LIMIT_KEYS: &[&str] = &["eps_seq", "nodes_seq", "shared_steps", "tolerance"];
const DIAGNOSTICS_KEYS: &[&str] = &["gammas", "qs", "magic_tau", "onset_fraction"];
const BARRIER_KEYS: &[&str] = &["seed", "draws", "probes", "families", "power_rate_factor"];
const SWEEP_KEYS: &[&str] = &["key", "values"];
const CONVERGENCE_KEYS: &[&str] = &["t_end", "grids", "grid_dt", "dts", "dt_grid", "eps"];

/// Sections and keys every subcommand accepts.
pub fn check_layout(cfg: &Config) -> Result<()> {
    let known: [(&str, &[&str]); 8] = [
        ("problem", PROBLEM_KEYS),
        ("initial", INITIAL_KEYS),
        ("solver", SOLVER_KEYS),
        ("limit", LIMIT_KEYS),
        ("diagnostics", DIAGNOSTICS_KEYS),
        ("barriers", BARRIER_KEYS),
        ("sweep", SWEEP_KEYS),
        ("convergence", CONVERGENCE_KEYS),
    ];
    for sec in cfg.sections() {
        match known.iter().find(|(name, _)| name == sec) {
            Some((name, keys)) => cfg.check_keys(name, keys)?,
            None => return Err(Error::Config { line: None, key: None, msg: format!("unknown section [{sec}]") }),
        }
    }
    Ok(())
}

pub fn problem(cfg: &Config) -> Result<ProblemParams> {
    let n: u32 = cfg.require("problem", "n")?;
    let radius: f64 = cfg.require("problem", "R")?;
    let mass: f64 = cfg.require("problem", "m")?;
    ProblemParams::new(n, radius, mass).map_err(|e| Error::config("problem", e.to_string()))
}

/// `s:w` pairs.
fn samples(cfg: &Config) -> Result<Vec<(f64, f64)>> {
    let items: Vec<String> = cfg.list("initial", "samples")?.ok_or_else(|| cfg.invalid("initial", "samples", "missing"))?;
    items
        .iter()
        .map(|item| {
            let pair = item.split_once(':').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            pair.ok_or_else(|| cfg.invalid("initial", "samples", format!("expected `x:y`, got `{item}`")))
        })
        .collect()
}

pub fn initial(cfg: &Config, params: ProblemParams) -> Result<InitialData> {
    let kind: String = cfg.get_or("initial", "kind", "linear".to_string())?;
    let kind = match kind.as_str() {
        "linear" => InitialKind::Linear,
        "collapse-family" => InitialKind::CollapseFamily {
            c: cfg.require("initial", "c")?,
            gamma: cfg.require("initial", "gamma")?,
            delta: cfg.require("initial", "delta")?,
        },
        "tabulated-mass" => InitialKind::TabulatedMass(samples(cfg)?),
        "tabulated-density" => InitialKind::TabulatedDensity(samples(cfg)?),
        other => return Err(cfg.invalid("initial", "kind", format!("unknown kind `{other}`"))),
    };
    InitialData::new(kind, params).map_err(|e| Error::config("initial", e.to_string()))
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ProblemParams,
    pub initial: InitialData,
    pub reg: Regularization,
    pub left: LeftBoundary,
    pub grid: Arc<Grid>,
    pub options: RunOptions,
    pub t_end: f64,
    pub schedule: Vec<f64>,
    pub limit: Option<LimitSpec>,
    pub diagnostics: DiagnosticsConfig,
    pub magic_tau: f64,
    pub onset_fraction: f64,
}

fn grid_with(cfg: &Config, s_max: f64, m: usize) -> Result<Arc<Grid>> {
    let frac: f64 = cfg.get_or("solver", "s_min", 1e-6)?;
    let grading = match cfg.get_or("solver", "grading", "geometric".to_string())?.as_str() {
        "geometric" => Grading::Geometric,
        "uniform" => Grading::Uniform,
        other => return Err(cfg.invalid("solver", "grading", format!("unknown grading `{other}`"))),
    };
    build_grid(m, s_max, frac * s_max, grading).map(Arc::new).map_err(|e| cfg.invalid("solver", "M", e.to_string()))
}

pub fn scenario(cfg: &Config) -> Result<Scenario> {
    check_layout(cfg)?;
    let params = problem(cfg)?;
    let initial = initial(cfg, params)?;
    let t_end: f64 = cfg.require("solver", "t_end")?;
    if !(t_end > 0.0) {
        return Err(cfg.invalid("solver", "t_end", "must be positive"));
    }
    let m: usize = cfg.get_or("solver", "M", crate::grid::DEFAULT_NODES)?;
    let grid = grid_with(cfg, params.s_max(), m)?;
    let eps: Option<f64> = cfg.get("solver", "eps")?;
    let nu: f64 = cfg.get_or("solver", "nu", 0.0)?;
    let reg = match eps {
        Some(e) => Regularization::capped(e).map_err(|err| cfg.invalid("solver", "eps", err.to_string()))?,
        None => Regularization::limit(),
    }
    .with_nu(nu);
    let left = match cfg.get::<String>("solver", "left")?.as_deref() {
        Some("dirichlet") => LeftBoundary::DirichletZero,
        Some("free") => LeftBoundary::Free,
        None if eps.is_some() => LeftBoundary::DirichletZero,
        None => LeftBoundary::Free,
        Some(other) => return Err(cfg.invalid("solver", "left", format!("unknown boundary `{other}`"))),
    };
    let mut options = RunOptions::default();
    options.transport = match cfg.get_or("solver", "transport", "implicit".to_string())?.as_str() {
        "implicit" => Transport::Implicit,
        "explicit" => Transport::Explicit,
        other => return Err(cfg.invalid("solver", "transport", format!("unknown transport `{other}`"))),
    };
    options.change_tol = cfg.get_or("solver", "change_tol", options.change_tol)?;
    options.dt_max = cfg.get_or("solver", "dt_max", options.dt_max)?;
    options.fixed_dt = cfg.get("solver", "dt")?;

    let count: usize = cfg.get_or("solver", "snapshots", 100)?;
    let mut schedule = uniform_schedule(t_end, count);
    if let Some(until) = cfg.get::<f64>("solver", "early_until")? {
        if !(until > 0.0 && until <= t_end) {
            return Err(cfg.invalid("solver", "early_until", "must lie in (0, t_end]"));
        }
        let early: usize = cfg.get_or("solver", "early_snapshots", 100)?;
        schedule.extend(uniform_schedule(until, early));
        schedule.sort_by(f64::total_cmp);
        schedule.dedup();
    }

    let limit = if cfg.has_section("limit") {
        let eps_seq: Vec<f64> = cfg.list("limit", "eps_seq")?.ok_or_else(|| cfg.invalid("limit", "eps_seq", "missing"))?;
        let nodes: Vec<usize> = cfg.list("limit", "nodes_seq")?.unwrap_or_else(|| vec![m; eps_seq.len()]);
        if nodes.len() != eps_seq.len() {
            return Err(cfg.invalid("limit", "nodes_seq", "needs one node count per ε"));
        }
        let levels = eps_seq
            .iter()
            .zip(&nodes)
            .map(|(&eps, &m)| Ok(LimitLevel { eps, nu, grid: grid_with(cfg, params.s_max(), m)? }))
            .collect::<Result<Vec<_>>>()?;
        Some(LimitSpec {
            params,
            initial: initial.clone(),
            levels,
            options: options.clone(),
            t_end,
            schedule: schedule.clone(),
            tolerance: cfg.get_or("limit", "tolerance", 1e-6)? * params.mass_cap(),
            shared_steps: cfg.get_or("limit", "shared_steps", true)?,
        })
    } else {
        None
    };

    let defaults = DiagnosticsConfig::default();
    let diagnostics = DiagnosticsConfig {
        gammas: cfg.list("diagnostics", "gammas")?.unwrap_or(defaults.gammas),
        qs: cfg.list("diagnostics", "qs")?.unwrap_or(defaults.qs),
    };
    if let Some(q) = diagnostics.qs.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(cfg.invalid("diagnostics", "qs", format!("q = {q} outside (0, 1)")));
    }
    Ok(Scenario {
        params,
        initial,
        reg,
        left,
        grid,
        options,
        t_end,
        schedule,
        limit,
        diagnostics,
        magic_tau: cfg.get_or("diagnostics", "magic_tau", 0.05)?,
        onset_fraction: cfg.get_or("diagnostics", "onset_fraction", 0.01)?,
    })
}

impl Scenario {
    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            params: self.params,
            initial: self.initial.clone(),
            reg: self.reg,
            grid: self.grid.clone(),
            left: self.left,
            options: self.options.clone(),
        }
    }
}

/// The JSON summary of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub theta_onset_time: Option<f64>,
    pub theta_final: f64,
    pub mass_defect_max: f64,
    pub monotonicity_defect_min: f64,
    /// Windows of length `magic_tau` with `I > B` (first `q`).
    pub magic_violations: usize,
    pub clipped_total: f64,
    pub steps: usize,
    /// Worst ε-ordering breach when a limit was run.
    pub ordering_defect: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// The finest level when a limit was run.
    pub trajectory: Trajectory,
    /// Extrapolated when a limit was run.
    pub theta: ThetaTrace,
    pub records: Vec<DiagnosticsRecord>,
    pub measures: Vec<MeasureState>,
    pub ordering: Option<OrderingDefect>,
    pub summary: Summary,
}

pub fn simulate(sc: &Scenario) -> Result<Simulation> {
    let (trajectory, theta, ordering) = match &sc.limit {
        Some(spec) => {
            let mut out = regularization_limit(spec)?;
            let finest = out.runs.pop().expect("at least three levels");
            (finest, out.extrapolated, Some(out.ordering))
        }
        None => {
            let traj = run(&sc.run_spec(), sc.t_end, &sc.schedule)?;
            let theta = ThetaTrace::from_trajectory(&traj)?;
            (traj, theta, None)
        }
    };
    let records = diagnostics::diagnose(&trajectory, &sc.diagnostics)?;
    let measures = trajectory
        .snapshots
        .iter()
        .map(|f| reconstruct::emit_measure(f, &sc.params))
        .collect::<Result<Vec<_>>>()?;
    let magic_violations = match sc.diagnostics.qs.first() {
        Some(&q) if sc.magic_tau > 0.0 && sc.magic_tau <= sc.t_end => {
            diagnostics::magic_windows(&trajectory, &theta.theta, q, sc.magic_tau)?
                .iter()
                .filter(|w| w.integral.violated())
                .count()
        }
        _ => 0,
    };
    let summary = Summary {
        schema: 1,
        theta_onset_time: theta.onset(sc.onset_fraction * sc.params.mass()).map(|(t, _)| t),
        theta_final: theta.last(),
        mass_defect_max: records.iter().map(|r| r.mass_defect).fold(0.0, f64::max),
        monotonicity_defect_min: records.iter().map(|r| r.min_slope).fold(f64::INFINITY, f64::min),
        magic_violations,
        clipped_total: trajectory.clipped_total(),
        steps: trajectory.steps(),
        ordering_defect: ordering.map(|o| o.worst),
    };
    Ok(Simulation { trajectory, theta, records, measures, ordering, summary })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// `trajectory.csv`, `theta.csv`, `diagnostics.csv`, `measure.csv` and
/// `summary.json`.
pub fn write_simulation(dir: &Path, sc: &Scenario, sim: &Simulation) -> Result<()> {
    let mut f = create(dir, "trajectory.csv")?;
    writeln!(f, "t,s,w,ws,theta_est,clipped_mass")?;
    for (i, snap) in sim.trajectory.snapshots.iter().enumerate() {
        let (ws, _) = snap.differentiate();
        for ((s, w), ws) in snap.nodes().iter().zip(snap.values()).zip(&ws) {
            writeln!(f, "{},{},{},{},,", snap.t(), s, w, ws)?;
        }
        let theta = sim.theta.theta.get(i).copied().unwrap_or(f64::NAN);
        writeln!(f, "{},,,,{},{}", snap.t(), theta, sim.trajectory.clipped_at[i])?;
    }
    f.flush()?;
    let mut f = create(dir, "theta.csv")?;
    writeln!(f, "t,theta")?;
    for (t, th) in sim.theta.times.iter().zip(&sim.theta.theta) {
        writeln!(f, "{t},{th}")?;
    }
    f.flush()?;
    let mut f = create(dir, "diagnostics.csv")?;
    diagnostics::write_csv(&mut f, &sc.diagnostics, &sim.records)?;
    f.flush()?;
    let mut f = create(dir, "measure.csv")?;
    reconstruct::write_measure_csv(&mut f, &sim.measures)?;
    f.flush()?;
    write_json(dir, "summary.json", &sim.summary)
}

pub fn verify_config(cfg: &Config, seed: Option<u64>) -> Result<VerifyConfig> {
    check_layout(cfg)?;
    let d = VerifyConfig::default();
    let families = match cfg.list::<String>("barriers", "families")? {
        None => d.families,
        Some(names) => names
            .iter()
            .map(|n| Family::parse(n).ok_or_else(|| cfg.invalid("barriers", "families", format!("unknown family `{n}`"))))
            .collect::<Result<Vec<_>>>()?,
    };
    let power_rate_factor: f64 = cfg.get_or("barriers", "power_rate_factor", d.power_rate_factor)?;
    if !(power_rate_factor > 0.0) {
        return Err(cfg.invalid("barriers", "power_rate_factor", "must be positive"));
    }
    Ok(VerifyConfig {
        seed: match seed {
            Some(s) => s,
            None => cfg.get_or("barriers", "seed", d.seed)?,
        },
        draws: cfg.get_or("barriers", "draws", d.draws)?,
        probes: cfg.get_or("barriers", "probes", d.probes)?,
        families,
        power_rate_factor,
    })
}

pub fn convergence_config(cfg: &Config) -> Result<ConvergenceConfig> {
    check_layout(cfg)?;
    let params = problem(cfg)?;
    let mut c = ConvergenceConfig::new(params);
    if let Some(eps) = cfg.get::<f64>("convergence", "eps")? {
        c.reg = Regularization::capped(eps).map_err(|e| cfg.invalid("convergence", "eps", e.to_string()))?;
    }
    c.t_end = cfg.get_or("convergence", "t_end", c.t_end)?;
    c.grids = cfg.list("convergence", "grids")?.unwrap_or(c.grids);
    c.grid_dt = cfg.get_or("convergence", "grid_dt", c.grid_dt)?;
    c.dts = cfg.list("convergence", "dts")?.unwrap_or(c.dts);
    c.dt_grid = cfg.get_or("convergence", "dt_grid", c.dt_grid)?;
    if c.grids.len() < 3 {
        return Err(cfg.invalid("convergence", "grids", "need at least three levels"));
    }
    if c.dts.len() < 3 {
        return Err(cfg.invalid("convergence", "dts", "need at least three levels"));
    }
    Ok(c)
}

/// `section.key` and the values of a sweep.
pub fn sweep_points(cfg: &Config) -> Result<(String, String, Vec<String>)> {
    let key: String = cfg.require("sweep", "key")?;
    let (sec, k) = key.split_once('.').ok_or_else(|| cfg.invalid("sweep", "key", "expected `section.key`"))?;
    let values: Vec<String> = cfg.list("sweep", "values")?.unwrap_or_default();
    Ok((sec.to_string(), k.to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEADY: &str = "[problem]\nn = 3\nR = 1\nm = 12.566370614359172\n[solver]\nM = 64\neps = 0.1\nt_end = 0.01\nsnapshots = 4\n";

    #[test]
    fn steady_linear_summary() {
        let cfg = Config::parse(STEADY).unwrap();
        let sc = scenario(&cfg).unwrap();
        let sim = simulate(&sc).unwrap();
        assert_eq!(sim.summary.theta_final, 0.0);
        assert_eq!(sim.summary.mass_defect_max, 0.0);
        assert_eq!(sim.summary.theta_onset_time, None);
        assert_eq!(sim.records.len(), 5);
    }

    #[test]
    fn missing_dimension_names_the_key() {
        let cfg = Config::parse("[problem]\nR = 1\nm = 1\n[solver]\nt_end = 1\n").unwrap();
        let e = scenario(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("problem.n"), "{e}");
    }

    #[test]
    fn unknown_section_is_a_config_error() {
        let cfg = Config::parse(&format!("{STEADY}[extra]\nx = 1\n")).unwrap();
        assert_eq!(scenario(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn early_snapshots_are_merged() {
        let cfg = Config::parse(&format!("{STEADY}early_until = 0.005\nearly_snapshots = 5\n")).unwrap();
        let sc = scenario(&cfg).unwrap();
        assert!(sc.schedule.windows(2).all(|w| w[1] > w[0]));
        assert!(sc.schedule.contains(&0.001));
    }

    #[test]
    fn barrier_families_parse() {
        let cfg = Config::parse("[barriers]\nfamilies = power-collapse, linear-cap-super\nseed = 4\n").unwrap();
        let v = verify_config(&cfg, None).unwrap();
        assert_eq!(v.families, vec![Family::PowerCollapse, Family::LinearCapSuper]);
        assert_eq!(v.seed, 4);
        assert_eq!(verify_config(&cfg, Some(9)).unwrap().seed, 9);
        let bad = Config::parse("[barriers]\nfamilies = nope\n").unwrap();
        assert_eq!(verify_config(&bad, None).unwrap_err().exit_code(), 2);
    }
}

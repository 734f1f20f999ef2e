//! An independent explicit reference solver and convergence studies.
//!
//! The reference integrator assembles its own operator: forward Euler with
//! three-point centered differences for every term, no operator splitting and
//! no clipping. It shares only the problem definition (parameters, initial
//! data, `f_ε`) with the main solver, so a bug in the main stepping code
//! cannot hide in both.

use std::sync::Arc;

use serde::Serialize;

use crate::grid::{build_grid, Grading, LeftBoundary, WField};
use crate::model::{InitialData, InitialKind, ProblemParams};
use crate::solver::{run, RunOptions, RunSpec, Regularization, Source, Trajectory};
use crate::{Error, Result};

/// Largest stable forward-Euler step, `min_i Δs_i² / (2(ν + n² s_i^{2−2/n}))`
/// with `Δs_i` the smaller neighbouring cell.
pub fn stability_bound(x: &[f64], params: &ProblemParams, nu: f64) -> f64 {
    let n = params.nf();
    let alpha = params.diffusion_exponent();
    (0..x.len() - 1)
        .map(|i| {
            let hm = if i == 0 { x[0] } else { x[i] - x[i - 1] };
            let h = hm.min(x[i + 1] - x[i]);
            h * h / (2.0 * (nu + n * n * x[i].powf(alpha)))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Result of [`explicit_reference`].
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub trajectory: Trajectory,
    /// Largest excursion of `w` outside `[0, m/ω_n]`, in units of `w`.
    pub bound_violation: f64,
}

/// Forward-Euler integration with constant `dt` (shortened to land on the
/// snapshot times).
pub fn explicit_reference(spec: &RunSpec, t_end: f64, schedule: &[f64], dt: f64) -> Result<ReferenceRun> {
    explicit_reference_from(spec, spec.initial_field()?, t_end, schedule, dt)
}

/// Like [`explicit_reference`], starting from an arbitrary field on `spec.grid`.
pub fn explicit_reference_from(
    spec: &RunSpec,
    init: WField,
    t_end: f64,
    schedule: &[f64],
    dt: f64,
) -> Result<ReferenceRun> {
    let x = spec.grid.nodes().to_vec();
    if init.nodes() != &x[..] {
        return Err(Error::Parameter("start field must live on the run grid".into()));
    }
    let limit = stability_bound(&x, &spec.params, spec.reg.nu);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::Stability { dt, limit });
    }
    let p = &spec.params;
    let (n, mu, alpha, cap) = (p.nf(), p.mu(), p.diffusion_exponent(), p.mass_cap());
    let (nu, f) = (spec.reg.nu, spec.reg.nonlinearity);
    let source = spec.options.source.clone();
    let last = x.len() - 1;
    let init = init.with_time(0.0);
    let mut w = init.values().to_vec();
    let mut t = 0.0;
    let mut violation = 0.0_f64;

    let mut targets: Vec<f64> = schedule.iter().copied().filter(|&s| s > 0.0 && s < t_end).collect();
    targets.push(t_end);
    let mut traj = Trajectory {
        params: *p,
        reg: spec.reg,
        snapshots: vec![init.clone()],
        clipped_at: vec![0.0],
        step_times: vec![],
        step_sizes: vec![],
        rejected_steps: 0,
        min_slope: f64::INFINITY,
    };
    let mut rate = vec![0.0; x.len()];
    for &target in &targets {
        while t < target {
            let h = if t + dt >= target * (1.0 - 1e-12) { target - t } else { dt };
            for i in 0..last {
                let (xl, wl) = if i > 0 {
                    (x[i - 1], w[i - 1])
                } else {
                    match spec.left {
                        LeftBoundary::DirichletZero => (0.0, 0.0),
                        LeftBoundary::Free => (0.0, (w[0] - x[0] * (w[1] - w[0]) / (x[1] - x[0])).max(0.0)),
                    }
                };
                let (hm, hp) = (x[i] - xl, x[i + 1] - x[i]);
                let d1 = (hm * hm * (w[i + 1] - w[i]) + hp * hp * (w[i] - wl)) / (hm * hp * (hm + hp));
                let d2 = 2.0 * (hm * (w[i + 1] - w[i]) - hp * (w[i] - wl)) / (hm * hp * (hm + hp));
                let g = source.as_ref().map_or(0.0, |g| g(x[i], t));
                rate[i] = (nu + n * n * x[i].powf(alpha)) * d2 + n * f.flux(w[i], d1) - mu * x[i] * d1 + g;
            }
            for i in 0..last {
                w[i] += h * rate[i];
                violation = violation.max(-w[i]).max(w[i] - cap);
            }
            w[last] = cap;
            t = if h == dt { t + dt } else { target };
            traj.step_times.push(t);
            traj.step_sizes.push(h);
        }
        let field = WField::new(spec.grid.clone(), w.clone(), t, spec.left);
        traj.min_slope = traj.min_slope.min(min_slope(&field));
        traj.snapshots.push(field);
        traj.clipped_at.push(0.0);
    }
    Ok(ReferenceRun { trajectory: traj, bound_violation: violation.max(0.0) })
}

fn min_slope(f: &WField) -> f64 {
    let (x, w) = (f.nodes(), f.values());
    (0..w.len() - 1).map(|i| (w[i + 1] - w[i]) / (x[i + 1] - x[i])).fold(f64::INFINITY, f64::min)
}

fn max_gap(a: &WField, b: &WField) -> f64 {
    a.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Main solver against the reference on one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    /// `max |w_main − w_ref|` at `t_end`, both at step `dt/2`.
    pub max_deviation: f64,
    /// The same after first-order Richardson extrapolation `2w(dt/2) − w(dt)`
    /// of both solvers.
    pub extrapolated_deviation: f64,
    /// `|w(dt) − w(dt/2)|` summed over both solvers: the first-order
    /// time-truncation estimate of the finer runs.
    pub truncation_estimate: f64,
    pub bound_violation: f64,
    /// Rounding allowance, `64 ε_mach m/ω_n`.
    pub roundoff: f64,
}

impl Agreement {
    /// The extrapolated solutions differ by less than the estimated
    /// truncation error of the finer runs.
    pub fn agrees(&self) -> bool {
        self.extrapolated_deviation <= self.truncation_estimate + self.roundoff
    }
}

/// Runs both solvers with constant steps `dt` and `dt/2` to `t_end`.
pub fn compare_with_reference(spec: &RunSpec, t_end: f64, dt: f64) -> Result<Agreement> {
    let main_at = |h: f64| -> Result<WField> {
        let s = RunSpec { options: RunOptions { fixed_dt: Some(h), ..spec.options.clone() }, ..spec.clone() };
        Ok(run(&s, t_end, &[])?.last().clone())
    };
    let (m1, m2) = (main_at(dt)?, main_at(0.5 * dt)?);
    let r1 = explicit_reference(spec, t_end, &[], dt)?;
    let r2 = explicit_reference(spec, t_end, &[], 0.5 * dt)?;
    let (o1, o2) = (r1.trajectory.last(), r2.trajectory.last());
    let extrapolated_deviation = (0..m1.values().len())
        .map(|i| {
            let main = 2.0 * m2.values()[i] - m1.values()[i];
            let reference = 2.0 * o2.values()[i] - o1.values()[i];
            (main - reference).abs()
        })
        .fold(0.0, f64::max);
    Ok(Agreement {
        max_deviation: max_gap(&m2, o2),
        extrapolated_deviation,
        truncation_estimate: max_gap(&m1, &m2) + max_gap(o1, o2),
        bound_violation: r1.bound_violation.max(r2.bound_violation),
        roundoff: 64.0 * f64::EPSILON * spec.params.mass_cap(),
    })
}

/// Manufactured solution `w = (m/ω_n) s/S + κ s sin(πs/S) e^{−t}` with
/// `κ = (m/ω_n)/(4S)`, which keeps `w_s > 0` and both boundary values. The
/// sine keeps three-point differences from being exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    params: ProblemParams,
    kappa: f64,
}

impl Manufactured {
    pub fn new(params: ProblemParams) -> Self {
        Manufactured { params, kappa: 0.25 * params.mass_cap() / params.s_max() }
    }

    /// `(w, w_s, w_ss, w_t)`.
    pub fn jet(&self, s: f64, t: f64) -> (f64, f64, f64, f64) {
        let (cap, big_s) = (self.params.mass_cap(), self.params.s_max());
        let k = self.kappa * (-t).exp();
        let a = std::f64::consts::PI / big_s;
        let (sin, cos) = (a * s).sin_cos();
        let bump = k * s * sin;
        (
            cap * (s / big_s) + bump,
            cap / big_s + k * (sin + a * s * cos),
            k * (2.0 * a * cos - a * a * s * sin),
            -bump,
        )
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.jet(s, t).0
    }

    /// Forcing that makes [`Manufactured::value`] an exact solution of the
    /// regularized equation.
    pub fn source(&self, reg: Regularization) -> Source {
        let me = *self;
        let p = self.params;
        let (n, mu, alpha) = (p.nf(), p.mu(), p.diffusion_exponent());
        Arc::new(move |s, t| {
            let (w, ws, wss, wt) = me.jet(s, t);
            wt - (reg.nu + n * n * s.powf(alpha)) * wss - n * reg.nonlinearity.flux(w, ws) + mu * s * ws
        })
    }

    pub fn initial(&self) -> Result<InitialData> {
        let me = *self;
        InitialData::new(InitialKind::Custom(Arc::new(move |s| me.value(s, 0.0))), self.params)
    }
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    /// `h` or `dt`.
    pub size: f64,
    /// `max_i |w_i − w_exact(s_i, t_end)|`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Study {
    pub levels: Vec<Level>,
    /// `ln(e_k/e_{k+1}) / ln(size_k/size_{k+1})`; `None` for repeated sizes.
    pub orders: Vec<Option<f64>>,
    pub flags: Vec<String>,
}

impl Study {
    fn from_levels(levels: Vec<Level>) -> Self {
        let mut flags = Vec::new();
        let mut orders = Vec::new();
        for (k, p) in levels.windows(2).enumerate() {
            let ratio = p[0].size / p[1].size;
            if ratio == 1.0 {
                flags.push(format!("levels {k} and {} are identical; order undefined", k + 1));
                orders.push(None);
                continue;
            }
            if p[1].error >= p[0].error {
                flags.push(format!("error does not decrease from level {k} to {}", k + 1));
            }
            orders.push(Some((p[0].error / p[1].error).ln() / ratio.ln()));
        }
        Study { levels, orders, flags }
    }

    /// Smallest defined order, if any.
    pub fn min_order(&self) -> Option<f64> {
        self.orders.iter().flatten().copied().reduce(f64::min)
    }

    pub fn monotone(&self) -> bool {
        self.levels.windows(2).all(|p| p[1].error < p[0].error)
    }
}

/// Manufactured-solution refinement in space (uniform grids, tiny fixed
/// step) and in time (fixed fine grid).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub params: ProblemParams,
    pub reg: Regularization,
    pub t_end: f64,
    /// Node counts of the spatial study.
    pub grids: Vec<usize>,
    /// Step of the spatial study.
    pub grid_dt: f64,
    /// Steps of the temporal study.
    pub dts: Vec<f64>,
    /// Node count of the temporal study.
    pub dt_grid: usize,
}

impl ConvergenceConfig {
    pub fn new(params: ProblemParams) -> Self {
        ConvergenceConfig {
            params,
            reg: Regularization::capped(0.1).expect("positive ε"),
            t_end: 0.1,
            grids: vec![17, 33, 65, 129],
            grid_dt: 1e-5,
            dts: vec![0.02, 0.01, 0.005, 0.0025],
            dt_grid: 513,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub spatial: Study,
    pub temporal: Study,
}

/// Uniform grid with spacing `S/M`, so the virtual cell `[0, s_min]` has the
/// same width as the rest.
fn uniform(params: &ProblemParams, m: usize) -> Result<Arc<crate::grid::Grid>> {
    let s_max = params.s_max();
    Ok(Arc::new(build_grid(m, s_max, s_max / m as f64, Grading::Uniform)?))
}

fn mms_error(cfg: &ConvergenceConfig, mms: &Manufactured, m: usize, dt: f64) -> Result<f64> {
    let spec = RunSpec {
        params: cfg.params,
        initial: mms.initial()?,
        reg: cfg.reg,
        grid: uniform(&cfg.params, m)?,
        left: LeftBoundary::DirichletZero,
        options: RunOptions { fixed_dt: Some(dt), source: Some(mms.source(cfg.reg)), ..RunOptions::default() },
    };
    let last = run(&spec, cfg.t_end, &[])?;
    let f = last.last();
    Ok(f.nodes().iter().zip(f.values()).map(|(&s, &w)| (w - mms.value(s, cfg.t_end)).abs()).fold(0.0, f64::max))
}

pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.grids.len() < 3 || cfg.dts.len() < 3 {
        return Err(Error::Parameter("a convergence study needs at least three levels".into()));
    }
    let mms = Manufactured::new(cfg.params);
    let s_max = cfg.params.s_max();
    let spatial = cfg
        .grids
        .iter()
        .map(|&m| Ok(Level { size: s_max / m as f64, error: mms_error(cfg, &mms, m, cfg.grid_dt)? }))
        .collect::<Result<Vec<_>>>()?;
    let temporal = cfg
        .dts
        .iter()
        .map(|&dt| Ok(Level { size: dt, error: mms_error(cfg, &mms, cfg.dt_grid, dt)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { spatial: Study::from_levels(spatial), temporal: Study::from_levels(temporal) })
}

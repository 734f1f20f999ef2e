//! Time integration driver with adaptive steps and exact snapshot landing.

use std::sync::Arc;

use crate::grid::{Grid, LeftBoundary, WField};
use crate::model::{InitialData, ProblemParams};
use crate::{Error, Result};

use super::cap::Nonlinearity;
use super::step::{step, Regularization, Source, Transport};

/// Step-size policy.
#[derive(Clone)]
pub struct RunOptions {
    pub transport: Transport,
    /// Target for `max_i |Δw_i| / (m/ω_n)` per accepted step.
    pub change_tol: f64,
    pub dt_init: Option<f64>,
    pub dt_max: f64,
    /// Fraction of the CFL bound used in explicit-transport mode.
    pub cfl_safety: f64,
    /// Replays the accepted steps `(end time, size)` of an earlier run.
    pub replay: Option<Arc<Vec<(f64, f64)>>>,
    /// Constant step (the last step before each snapshot is shortened).
    pub fixed_dt: Option<f64>,
    pub source: Option<Source>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            transport: Transport::Implicit,
            change_tol: 2e-3,
            dt_init: None,
            dt_max: 0.05,
            cfl_safety: 0.9,
            replay: None,
            fixed_dt: None,
            source: None,
        }
    }
}

impl std::fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOptions")
            .field("transport", &self.transport)
            .field("change_tol", &self.change_tol)
            .field("dt_init", &self.dt_init)
            .field("dt_max", &self.dt_max)
            .field("cfl_safety", &self.cfl_safety)
            .field("replay", &self.replay.as_ref().map(|r| r.len()))
            .field("fixed_dt", &self.fixed_dt)
            .field("source", &self.source.is_some())
            .finish()
    }
}

/// Everything that defines one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub params: ProblemParams,
    pub initial: InitialData,
    pub reg: Regularization,
    pub grid: Arc<Grid>,
    pub left: LeftBoundary,
    pub options: RunOptions,
}

impl RunSpec {
    /// Initial field: `w0`, capped by `s/ε` in Dirichlet mode.
    pub fn initial_field(&self) -> Result<WField> {
        let data = match (self.left, self.reg.nonlinearity) {
            (LeftBoundary::DirichletZero, Nonlinearity::Capped(c)) => self.initial.capped(c.eps())?,
            _ => self.initial.clone(),
        };
        Ok(WField::new(self.grid.clone(), data.sample(self.grid.nodes()), 0.0, self.left))
    }
}

/// Snapshots of one run plus its step history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub reg: Regularization,
    pub snapshots: Vec<WField>,
    /// Cumulative clipped mass at each snapshot.
    pub clipped_at: Vec<f64>,
    /// End time of every accepted step.
    pub step_times: Vec<f64>,
    /// Size of every accepted step.
    pub step_sizes: Vec<f64>,
    pub rejected_steps: usize,
    /// Smallest discrete slope seen over all accepted steps.
    pub min_slope: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.t()).collect()
    }

    pub fn last(&self) -> &WField {
        self.snapshots.last().unwrap()
    }

    pub fn clipped_total(&self) -> f64 {
        *self.clipped_at.last().unwrap()
    }

    /// `(end time, size)` of every accepted step, for
    /// [`RunOptions::replay`].
    pub fn step_log(&self) -> Vec<(f64, f64)> {
        self.step_times.iter().copied().zip(self.step_sizes.iter().copied()).collect()
    }

    pub fn steps(&self) -> usize {
        self.step_times.len()
    }
}

/// Snapshot times: the schedule's entries in `(0, t_end]`, plus `t_end`.
fn snapshot_targets(schedule: &[f64], t_end: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = schedule.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect();
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("output schedule must be strictly increasing".into()));
    }
    if t_end > 0.0 {
        out.push(t_end);
    }
    Ok(out)
}

fn min_slope(field: &WField) -> f64 {
    let x = field.nodes();
    let w = field.values();
    let mut m = f64::INFINITY;
    for i in 0..w.len() - 1 {
        m = m.min((w[i + 1] - w[i]) / (x[i + 1] - x[i]));
    }
    m
}

pub fn run(spec: &RunSpec, t_end: f64, schedule: &[f64]) -> Result<Trajectory> {
    run_from(spec, spec.initial_field()?, t_end, schedule)
}

/// Like [`run`], starting from an arbitrary field on `spec.grid` instead of
/// `spec.initial` (states that are not admissible initial data, such as a
/// fully collapsed constant profile).
pub fn run_from(spec: &RunSpec, start: WField, t_end: f64, schedule: &[f64]) -> Result<Trajectory> {
    if !(t_end >= 0.0) {
        return Err(Error::Parameter(format!("t_end must be nonnegative, got {t_end}")));
    }
    if start.nodes() != spec.grid.nodes() {
        return Err(Error::Parameter("start field must live on the run grid".into()));
    }
    let targets = snapshot_targets(schedule, t_end)?;
    let mut field = start.with_time(0.0);
    let cap = spec.params.mass_cap();
    let opts = &spec.options;
    let mut traj = Trajectory {
        params: spec.params,
        reg: spec.reg,
        snapshots: vec![field.clone()],
        clipped_at: vec![0.0],
        step_times: Vec::new(),
        step_sizes: Vec::new(),
        rejected_steps: 0,
        min_slope: min_slope(&field),
    };
    let dt_floor = 1e-14 * t_end;
    let mut dt = opts.fixed_dt.or(opts.dt_init).unwrap_or(1e-7 * t_end.max(1e-300)).min(opts.dt_max);
    let mut clipped = 0.0;
    let mut replay_idx = 0;
    for &target in &targets {
        while field.t() < target {
            let t = field.t();
            let remaining = target - t;
            let (dt_try, lands) = if let Some(times) = &opts.replay {
                let (next, h) = times.get(replay_idx).copied().unwrap_or((target, remaining));
                replay_idx += 1;
                if next <= t {
                    continue;
                }
                if next >= target {
                    (remaining, true)
                } else {
                    (h, false)
                }
            } else if dt >= remaining * (1.0 - 1e-9) {
                (remaining, true)
            } else if dt > 0.5 * remaining && opts.fixed_dt.is_none() {
                (0.5 * remaining, false)
            } else {
                (dt, false)
            };
            let out = match step(&field, dt_try, &spec.reg, &spec.params, opts.transport, opts.source.as_ref()) {
                Ok(o) => o,
                Err(Error::Cfl { limit, .. }) if opts.replay.is_none() && opts.fixed_dt.is_none() => {
                    dt = opts.cfl_safety * limit;
                    if dt < dt_floor {
                        return Err(Error::NonConvergence { t, dt });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let change = out
                .field
                .values()
                .iter()
                .zip(field.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / cap;
            let adaptive = opts.replay.is_none() && opts.fixed_dt.is_none();
            if adaptive && change > 2.0 * opts.change_tol {
                dt = dt_try * (0.9 * opts.change_tol / change).max(0.1);
                traj.rejected_steps += 1;
                if dt < dt_floor {
                    return Err(Error::NonConvergence { t, dt });
                }
                continue;
            }
            let t_new = if lands { target } else { t + dt_try };
            field = out.field.with_time(t_new);
            clipped += out.clipped;
            traj.step_times.push(t_new);
            traj.step_sizes.push(dt_try);
            traj.min_slope = traj.min_slope.min(min_slope(&field));
            if adaptive {
                let grow = if change == 0.0 { 2.0 } else { (0.9 * opts.change_tol / change).clamp(0.2, 2.0) };
                let proposal = (dt_try * grow).min(opts.dt_max);
                dt = if lands { dt.max(proposal).min(opts.dt_max) } else { proposal };
                if opts.transport == Transport::Explicit {
                    dt = dt.min(opts.cfl_safety * out.cfl_limit);
                }
                if dt < dt_floor {
                    return Err(Error::NonConvergence { t: t_new, dt });
                }
            }
        }
        traj.snapshots.push(field.clone());
        traj.clipped_at.push(clipped);
    }
    Ok(traj)
}

/// `count` equally spaced snapshot times in `(0, t_end]`.
pub fn uniform_schedule(t_end: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| t_end * k as f64 / count as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Grading};
    use crate::model::InitialKind;

    fn linear_spec(left: LeftBoundary) -> RunSpec {
        let params = ProblemParams::unit(3);
        RunSpec {
            params,
            initial: InitialData::new(InitialKind::Linear, params).unwrap(),
            reg: Regularization::capped(1e-3).unwrap(),
            grid: Arc::new(build_grid(128, 1.0, 1e-6, Grading::Geometric).unwrap()),
            left,
            options: RunOptions::default(),
        }
    }

    #[test]
    fn zero_horizon_keeps_initial_snapshot_only() {
        let traj = run(&linear_spec(LeftBoundary::DirichletZero), 0.0, &[]).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.steps(), 0);
    }

    #[test]
    fn linear_profile_survives_unit_time() {
        let spec = linear_spec(LeftBoundary::DirichletZero);
        let traj = run(&spec, 1.0, &uniform_schedule(1.0, 4)).unwrap();
        assert_eq!(traj.snapshots.len(), 5);
        let first = &traj.snapshots[0];
        for (a, b) in traj.last().values().iter().zip(first.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(traj.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}

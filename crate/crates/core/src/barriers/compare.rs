//! Ordering audits: two solver runs from ordered data, or a barrier against
//! a run.

use std::sync::Arc;

use serde::Serialize;

use crate::solver::{run, RunOptions, RunSpec, Trajectory};
use crate::{Error, Result};

use super::Barrier;

/// `max (lower − upper)` over all snapshots and nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingReport {
    /// Zero or negative when the ordering holds everywhere.
    pub worst: f64,
    /// `(t, s)` of the first snapshot and node where `lower − upper > tolerance`.
    pub first_violation: Option<(f64, f64)>,
    pub snapshots: usize,
    pub tolerance: f64,
}

impl OrderingReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }

    fn scan(&mut self, t: f64, gaps: impl Iterator<Item = (f64, f64)>) {
        self.snapshots += 1;
        for (s, d) in gaps {
            if d > self.worst {
                self.worst = d;
            }
            if d > self.tolerance && self.first_violation.is_none() {
                self.first_violation = Some((t, s));
            }
        }
    }
}

/// Runs both specs on a shared time discretization and audits
/// `lower ≤ upper` at every snapshot.
pub fn compare_runs(
    lower: &RunSpec,
    upper: &RunSpec,
    t_end: f64,
    schedule: &[f64],
    tolerance: f64,
) -> Result<OrderingReport> {
    if lower.grid.nodes() != upper.grid.nodes() {
        return Err(Error::Parameter("compared runs must share the grid".into()));
    }
    if lower.params != upper.params || lower.reg != upper.reg || lower.left != upper.left {
        return Err(Error::Parameter("compared runs must share parameters and regularization".into()));
    }
    let (w_lo, w_up) = (lower.initial_field()?, upper.initial_field()?);
    if let Some(i) = w_lo.values().iter().zip(w_up.values()).position(|(a, b)| a > b) {
        return Err(Error::Domain(format!("initial data not ordered at s = {:e}", w_lo.nodes()[i])));
    }
    let top = run(upper, t_end, schedule)?;
    let replay = RunSpec {
        options: RunOptions { replay: Some(Arc::new(top.step_log())), ..lower.options.clone() },
        ..lower.clone()
    };
    let bottom = run(&replay, t_end, schedule)?;
    Ok(compare_trajectories(&bottom, &top, tolerance))
}

/// Audits two trajectories with matching snapshot times and grids.
pub fn compare_trajectories(lower: &Trajectory, upper: &Trajectory, tolerance: f64) -> OrderingReport {
    let mut out = OrderingReport { worst: f64::NEG_INFINITY, first_violation: None, snapshots: 0, tolerance };
    for (lo, up) in lower.snapshots.iter().zip(&upper.snapshots) {
        let gaps = lo.nodes().iter().zip(lo.values().iter().zip(up.values())).map(|(&s, (a, b))| (s, a - b));
        out.scan(lo.t(), gaps);
    }
    out
}

/// Audits `barrier ≤ run` (sub) or `run ≤ barrier` (super) at every
/// snapshot inside the barrier's window and on the nodes of its domain.
pub fn compare_barrier(barrier: &Barrier, traj: &Trajectory, tolerance: f64) -> OrderingReport {
    let (t_lo, t_hi) = barrier.window();
    let (s_lo, s_hi) = barrier.domain();
    let sign = match barrier.sense() {
        super::Sense::Sub => 1.0,
        super::Sense::Super => -1.0,
    };
    let mut out = OrderingReport { worst: f64::NEG_INFINITY, first_violation: None, snapshots: 0, tolerance };
    for f in traj.snapshots.iter().filter(|f| f.t() >= t_lo && f.t() < t_hi) {
        let t = f.t();
        let gaps = f
            .nodes()
            .iter()
            .zip(f.values())
            .filter(|(&s, _)| s > s_lo && s <= s_hi)
            .map(|(&s, &w)| (s, sign * (barrier.value(s, t) - w)));
        out.scan(t, gaps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Grading, LeftBoundary};
    use crate::model::{InitialData, InitialKind, ProblemParams};
    use crate::solver::{uniform_schedule, Regularization};

    fn spec(initial: InitialData) -> RunSpec {
        let params = *initial.params();
        RunSpec {
            params,
            initial,
            reg: Regularization::capped(1e-2).unwrap(),
            grid: Arc::new(build_grid(96, 1.0, 1e-5, Grading::Geometric).unwrap()),
            left: LeftBoundary::DirichletZero,
            options: RunOptions::default(),
        }
    }

    #[test]
    fn identical_data_has_zero_defect() {
        let p = ProblemParams::unit(3);
        let w0 = InitialData::new(InitialKind::CollapseFamily { c: 0.9, gamma: 0.3, delta: 1e-2 }, p).unwrap();
        let a = spec(w0);
        let rep = compare_runs(&a, &a.clone(), 0.1, &uniform_schedule(0.1, 4), 0.0).unwrap();
        assert_eq!(rep.worst, 0.0);
        assert!(rep.holds());
        assert_eq!(rep.snapshots, 5);
    }

    #[test]
    fn rejects_unordered_data() {
        let p = ProblemParams::unit(3);
        let hi = InitialData::new(InitialKind::CollapseFamily { c: 0.9, gamma: 0.3, delta: 1e-2 }, p).unwrap();
        let lo = InitialData::new(InitialKind::Linear, p).unwrap();
        assert!(compare_runs(&spec(hi), &spec(lo), 0.1, &[], 0.0).is_err());
    }
}

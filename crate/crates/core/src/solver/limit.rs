//! The monotone limit `w_ε ↗ w` as `ε ↓ 0`: a ladder of regularized runs,
//! an ordering audit between consecutive levels and an extrapolated `θ(t)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::grid::{Grid, LeftBoundary};
use crate::model::{InitialData, ProblemParams};
use crate::{Error, Result};

use super::run::{run, RunOptions, RunSpec, Trajectory};
use super::step::Regularization;
use super::theta::ThetaTrace;

/// One rung of the ladder.
#[derive(Debug, Clone)]
pub struct LimitLevel {
    pub eps: f64,
    pub nu: f64,
    pub grid: Arc<Grid>,
}

#[derive(Debug, Clone)]
pub struct LimitSpec {
    pub params: ProblemParams,
    pub initial: InitialData,
    /// Ordered from the coarsest regularization to the finest.
    pub levels: Vec<LimitLevel>,
    pub options: RunOptions,
    pub t_end: f64,
    pub schedule: Vec<f64>,
    /// Ordering violations below this size are ignored (mass-function units).
    pub tolerance: f64,
    /// Replays the finest level's accepted steps on every other level, so
    /// that all levels share one time discretization.
    pub shared_steps: bool,
}

impl LimitSpec {
    /// Levels `ε_k` with `ν = 0`, all on one grid; tolerance `1e−6·m/ω_n`.
    pub fn on_grid(
        params: ProblemParams,
        initial: InitialData,
        eps: &[f64],
        grid: Arc<Grid>,
        t_end: f64,
        schedule: Vec<f64>,
    ) -> Self {
        LimitSpec {
            params,
            initial,
            levels: eps.iter().map(|&e| LimitLevel { eps: e, nu: 0.0, grid: grid.clone() }).collect(),
            options: RunOptions::default(),
            t_end,
            schedule,
            tolerance: 1e-6 * params.mass_cap(),
            shared_steps: true,
        }
    }
}

/// Worst breach of `w_{ε_{k+1}} ≥ w_{ε_k}` over all probes and snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingDefect {
    /// `max (w_{ε_k} − w_{ε_{k+1}})`, zero when the ordering holds everywhere.
    pub worst: f64,
    /// `(level k, t, s)` of the worst offender.
    pub location: Option<(usize, f64, f64)>,
    /// Probe comparisons above the tolerance.
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct LimitResult {
    pub runs: Vec<Trajectory>,
    pub traces: Vec<ThetaTrace>,
    /// `θ(t)` from the finest level, corrected by Richardson extrapolation in `ε`.
    pub extrapolated: ThetaTrace,
    /// Observed ε-order per snapshot; `None` where the three finest levels
    /// do not support an estimate and the finest value is kept.
    pub richardson_order: Vec<Option<f64>>,
    pub ordering: OrderingDefect,
}

impl LimitResult {
    pub fn finest(&self) -> &Trajectory {
        self.runs.last().unwrap()
    }
}

pub fn regularization_limit(spec: &LimitSpec) -> Result<LimitResult> {
    let levels = &spec.levels;
    if levels.len() < 3 {
        return Err(Error::Parameter(format!("need at least three ε levels, got {}", levels.len())));
    }
    if levels.windows(2).any(|w| w[1].eps > w[0].eps) {
        return Err(Error::Parameter("ε sequence must be decreasing".into()));
    }
    let spec_for = |level: &LimitLevel, options: RunOptions| -> Result<RunSpec> {
        Ok(RunSpec {
            params: spec.params,
            initial: spec.initial.clone(),
            reg: Regularization::capped(level.eps)?.with_nu(level.nu),
            grid: level.grid.clone(),
            left: LeftBoundary::DirichletZero,
            options,
        })
    };
    let runs: Vec<Trajectory> = if spec.shared_steps {
        let finest = run(&spec_for(levels.last().unwrap(), spec.options.clone())?, spec.t_end, &spec.schedule)?;
        let replay = RunOptions { replay: Some(Arc::new(finest.step_log())), ..spec.options.clone() };
        let mut others = levels[..levels.len() - 1]
            .par_iter()
            .map(|l| run(&spec_for(l, replay.clone())?, spec.t_end, &spec.schedule))
            .collect::<Result<Vec<_>>>()?;
        others.push(finest);
        others
    } else {
        levels
            .par_iter()
            .map(|l| run(&spec_for(l, spec.options.clone())?, spec.t_end, &spec.schedule))
            .collect::<Result<Vec<_>>>()?
    };
    let traces = runs.par_iter().map(ThetaTrace::from_trajectory).collect::<Result<Vec<_>>>()?;
    let ordering = ordering_defect(&runs, spec.tolerance);
    let ratio = levels[levels.len() - 2].eps / levels[levels.len() - 1].eps;
    let (extrapolated, richardson_order) = extrapolate(&traces[traces.len() - 3..], ratio, spec.params.mass());
    Ok(LimitResult { runs, traces, extrapolated, richardson_order, ordering })
}

/// Compares consecutive levels at every snapshot on the nodes of the finest
/// grid that all grids cover.
pub fn ordering_defect(runs: &[Trajectory], tolerance: f64) -> OrderingDefect {
    let s_lo = runs.iter().map(|r| r.last().grid().s_min()).fold(0.0, f64::max);
    let probes: Vec<f64> = runs.last().unwrap().last().nodes().iter().copied().filter(|&s| s >= s_lo).collect();
    let mut out = OrderingDefect { worst: 0.0, location: None, violations: 0 };
    for (k, pair) in runs.windows(2).enumerate() {
        for (coarse, fine) in pair[0].snapshots.iter().zip(&pair[1].snapshots) {
            for &s in &probes {
                let d = coarse.interpolate(s) - fine.interpolate(s);
                if d > tolerance {
                    out.violations += 1;
                }
                if d > out.worst {
                    out.worst = d;
                    out.location = Some((k, fine.t(), s));
                }
            }
        }
    }
    out
}

/// Richardson step on the three finest traces with geometric ratio `r`.
///
/// The order comes from `p = ln(Δ₁/Δ₂)/ln r` with `Δ₁ = θ₂−θ₁`, `Δ₂ = θ₃−θ₂`;
/// the correction `Δ₂/(r^p − 1)` is applied only for `p ∈ [0.5, 3]`.
fn extrapolate(traces: &[ThetaTrace], r: f64, mass: f64) -> (ThetaTrace, Vec<Option<f64>>) {
    let fine = &traces[2];
    let mut out = fine.clone();
    let mut orders = Vec::with_capacity(fine.len());
    for i in 0..fine.len() {
        let d1 = traces[1].theta[i] - traces[0].theta[i];
        let d2 = fine.theta[i] - traces[1].theta[i];
        let p = if r > 1.0 && d1 * d2 > 0.0 && d2.abs() < d1.abs() { (d1 / d2).ln() / r.ln() } else { f64::NAN };
        if (0.5..=3.0).contains(&p) {
            out.theta[i] = (fine.theta[i] + d2 / (r.powf(p) - 1.0)).clamp(0.0, mass);
            orders.push(Some(p));
        } else {
            orders.push(None);
        }
    }
    (out, orders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Grading};
    use crate::model::InitialKind;
    use crate::solver::run::uniform_schedule;

    fn linear(eps: &[f64]) -> LimitSpec {
        let params = ProblemParams::unit(3);
        let initial = InitialData::new(InitialKind::Linear, params).unwrap();
        let grid = Arc::new(build_grid(96, 1.0, 1e-6, Grading::Geometric).unwrap());
        LimitSpec::on_grid(params, initial, eps, grid, 0.5, uniform_schedule(0.5, 5))
    }

    #[test]
    fn linear_state_has_no_dirac_mass() {
        let out = regularization_limit(&linear(&[1e-2, 1e-3, 1e-4])).unwrap();
        for tr in &out.traces {
            assert!(tr.theta.iter().all(|&th| th == 0.0));
        }
        assert!(out.extrapolated.theta.iter().all(|&th| th == 0.0));
    }

    #[test]
    fn repeated_eps_gives_identical_runs() {
        let out = regularization_limit(&linear(&[1e-3, 1e-3, 1e-3])).unwrap();
        assert_eq!(out.ordering.worst, 0.0);
        assert_eq!(out.runs[0].last().values(), out.runs[2].last().values());
    }

    #[test]
    fn rejects_short_or_increasing_ladders() {
        assert!(regularization_limit(&linear(&[1e-2, 1e-3])).is_err());
        assert!(regularization_limit(&linear(&[1e-3, 1e-2, 1e-4])).is_err());
    }

    #[test]
    fn richardson_recovers_a_first_order_sequence() {
        let mk = |th: f64| ThetaTrace { times: vec![1.0], theta: vec![th], order: vec![1.0], residual: vec![0.0] };
        // θ(ε) = 1 − ε with ε = 0.1, 0.01, 0.001: p = 1, limit 1.
        let traces = [mk(0.9), mk(0.99), mk(0.999)];
        let (out, orders) = extrapolate(&traces, 10.0, 2.0);
        assert!((orders[0].unwrap() - 1.0).abs() < 1e-9);
        assert!((out.theta[0] - 1.0).abs() < 1e-12);
    }
}

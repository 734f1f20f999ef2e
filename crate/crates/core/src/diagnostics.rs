//! Invariant monitors and the quantitative functionals of the collapse
//! analysis: the weighted sup norm `|||·|||_γ`, the magic integral
//! `∫∫ s^{−1+2/n} w^q w_s`, mass and monotonicity defects, and the
//! absorption recursion.

use std::io::Write;

use serde::Serialize;

use crate::barriers::{Jet, Operator};
use crate::grid::{LeftBoundary, WField};
use crate::model::ProblemParams;
use crate::solver::{extract_theta, Trajectory};
use crate::{Error, Result};

/// `max_i s_i^{−γ} |w_i|`.
pub fn triple_norm(field: &WField, gamma: f64) -> f64 {
    field.nodes().iter().zip(field.values()).map(|(&s, &w)| s.powf(-gamma) * w.abs()).fold(0.0, f64::max)
}

/// `ω_n |w(S) − m/ω_n|`; zero exactly when the boundary row holds the cap.
pub fn mass_defect(field: &WField, params: &ProblemParams) -> f64 {
    let w_s = *field.values().last().expect("non-empty field");
    params.omega() * (w_s - params.mass_cap()).abs()
}

/// Smallest forward-difference slope between neighbouring nodes.
pub fn monotonicity_defect(field: &WField) -> f64 {
    let (x, w) = (field.nodes(), field.values());
    (0..w.len() - 1).map(|i| (w[i + 1] - w[i]) / (x[i + 1] - x[i])).fold(f64::INFINITY, f64::min)
}

/// `a_{j+1} = a_j + (M − a_j)/27`, iterated `k` times from `a₀`.
pub fn absorption_iteration(a0: f64, cap: f64, k: usize) -> f64 {
    (0..k).fold(a0, |a, _| a + (cap - a) / 27.0)
}

/// Max `|n² s^{2−2/n} W_ss + n W W_s − μ s W_s|` over `probes` for a
/// stationary profile given as `s ↦ (W, W_s, W_ss)`.
pub fn stationary_residual(params: &ProblemParams, profile: impl Fn(f64) -> (f64, f64, f64), probes: &[f64]) -> f64 {
    let op = Operator::for_params(params);
    probes
        .iter()
        .map(|&s| {
            let (value, ds, dss) = profile(s);
            op.apply(s, &Jet { value, ds, dss, dt: 0.0 }).0.abs()
        })
        .fold(0.0, f64::max)
}

/// Stationary residual of the fully collapsed state `W ≡ m/ω_n` on 1000
/// uniform probes.
pub fn steady_residual(params: &ProblemParams) -> f64 {
    let cap = params.mass_cap();
    let s_max = params.s_max();
    let probes: Vec<f64> = (1..=1000).map(|k| s_max * k as f64 / 1000.0).collect();
    stationary_residual(params, |_| (cap, 0.0, 0.0), &probes)
}

/// `J(t) = ∫₀^S s^{−1+2/n} w^q w_s ds` for one snapshot.
///
/// Trapezoid over the nodes with `w_s` from the grid's derivative view. The
/// cell `[0, s₀]` uses the exact weight `(n/2) s₀^{2/n}` times the frozen
/// integrand `w̄^q (w₀ − w_ghost)/s₀`, where `w̄` is the cell average.
pub fn magic_density(field: &WField, q: f64, n: f64) -> f64 {
    let (x, w) = (field.nodes(), field.values());
    let (ws, _) = field.differentiate();
    let k = -1.0 + 2.0 / n;
    let ghost = match field.left() {
        LeftBoundary::DirichletZero => 0.0,
        LeftBoundary::Free => field.interpolate(0.0).max(0.0),
    };
    let mean = 0.5 * (ghost + w[0]);
    let mut total = 0.5 * n * x[0].powf(2.0 / n) * mean.max(0.0).powf(q) * (w[0] - ghost) / x[0];
    let g = |i: usize| x[i].powf(k) * w[i].max(0.0).powf(q) * ws[i];
    for i in 0..x.len() - 1 {
        total += 0.5 * (x[i + 1] - x[i]) * (g(i) + g(i + 1));
    }
    total
}

/// `B = ((m/ω_n)^q/q)(R²/2 + nτ + μR²τ/n)`.
pub fn magic_bound(params: &ProblemParams, q: f64, tau: f64) -> f64 {
    let r2 = params.radius().powi(2);
    let n = params.nf();
    params.mass_cap().powf(q) / q * (0.5 * r2 + n * tau + params.mu() * r2 * tau / n)
}

/// The magic integral over one time window with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagicIntegral {
    pub q: f64,
    pub t0: f64,
    pub tau: f64,
    pub value: f64,
    pub bound: f64,
}

impl MagicIntegral {
    pub fn violated(&self) -> bool {
        self.value > self.bound
    }
}

const WINDOW_SLACK: f64 = 1e-12;

/// Time trapezoid of [`magic_density`] over `[t₀, t₀ + τ]`; the window ends
/// are interpolated linearly between snapshots.
pub fn magic_integral(traj: &Trajectory, q: f64, t0: f64, tau: f64) -> Result<MagicIntegral> {
    if !(q > 0.0 && q < 1.0 && tau >= 0.0) {
        return Err(Error::Parameter(format!("magic integral needs q ∈ (0, 1) and τ ≥ 0 (q = {q}, τ = {tau})")));
    }
    let t1 = t0 + tau;
    let times = traj.times();
    let (first, last) = (times[0], *times.last().unwrap());
    if first > t0 + WINDOW_SLACK || last < t1 - WINDOW_SLACK {
        return Err(Error::Window { t0, t1 });
    }
    let n = traj.params.nf();
    let dens: Vec<f64> = traj.snapshots.iter().map(|f| magic_density(f, q, n)).collect();
    let value = trapezoid_window(&times, &dens, t0.max(first), t1.min(last));
    Ok(MagicIntegral { q, t0, tau, value, bound: magic_bound(&traj.params, q, tau) })
}

fn trapezoid_window(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let at = |x: f64| {
        let k = t.partition_point(|&v| v <= x).clamp(1, t.len() - 1);
        let (t0, t1) = (t[k - 1], t[k]);
        if t1 == t0 {
            return y[k];
        }
        y[k - 1] + (y[k] - y[k - 1]) * (x - t0) / (t1 - t0)
    };
    if t.len() < 2 || b <= a {
        return 0.0;
    }
    let mut pts = vec![(a, at(a))];
    pts.extend(t.iter().zip(y).filter(|(&s, _)| s > a && s < b).map(|(&s, &v)| (s, v)));
    pts.push((b, at(b)));
    pts.windows(2).map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1)).sum()
}

/// A magic-integral window tagged with the largest `θ` seen inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagicWindow {
    pub integral: MagicIntegral,
    pub theta_max: f64,
}

/// Windows `[t_k, t_k + τ]` starting at every snapshot that leaves room for
/// a full window.
pub fn magic_windows(traj: &Trajectory, theta: &[f64], q: f64, tau: f64) -> Result<Vec<MagicWindow>> {
    let times = traj.times();
    let t_end = *times.last().unwrap();
    let mut out = Vec::new();
    for &t0 in times.iter().filter(|&&t| t + tau <= t_end + WINDOW_SLACK) {
        let integral = magic_integral(traj, q, t0, tau)?;
        let theta_max = times
            .iter()
            .zip(theta)
            .filter(|(&t, _)| t >= t0 - WINDOW_SLACK && t <= t0 + tau + WINDOW_SLACK)
            .map(|(_, &th)| th)
            .fold(0.0, f64::max);
        out.push(MagicWindow { integral, theta_max });
    }
    Ok(out)
}

/// Which functionals to record per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub gammas: Vec<f64>,
    pub qs: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { gammas: vec![0.1, 0.2, 0.3], qs: vec![0.5] }
    }
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_defect: f64,
    pub min_slope: f64,
    /// Cumulative clipped mass.
    pub clipped: f64,
    pub triple_norm: Vec<f64>,
    /// Magic integral accumulated from the first snapshot.
    pub magic: Vec<f64>,
    /// Bound for the accumulated window.
    pub magic_bound: Vec<f64>,
    pub theta: f64,
}

pub fn diagnose(traj: &Trajectory, cfg: &DiagnosticsConfig) -> Result<Vec<DiagnosticsRecord>> {
    let n = traj.params.nf();
    let t_first = traj.snapshots[0].t();
    let mut acc = vec![0.0; cfg.qs.len()];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut out = Vec::with_capacity(traj.snapshots.len());
    for (f, &clipped) in traj.snapshots.iter().zip(&traj.clipped_at) {
        let dens: Vec<f64> = cfg.qs.iter().map(|&q| magic_density(f, q, n)).collect();
        if let Some((t_prev, d_prev)) = &prev {
            for ((a, d), dp) in acc.iter_mut().zip(&dens).zip(d_prev) {
                *a += 0.5 * (f.t() - t_prev) * (d + dp);
            }
        }
        out.push(DiagnosticsRecord {
            t: f.t(),
            mass_defect: mass_defect(f, &traj.params),
            min_slope: monotonicity_defect(f),
            clipped,
            triple_norm: cfg.gammas.iter().map(|&g| triple_norm(f, g)).collect(),
            magic: acc.clone(),
            magic_bound: cfg.qs.iter().map(|&q| magic_bound(&traj.params, q, f.t() - t_first)).collect(),
            theta: extract_theta(f, &traj.params)?.theta,
        });
        prev = Some((f.t(), dens));
    }
    Ok(out)
}

/// Header: `t,mass_defect,min_slope,clipped,triple_norm_g<γ>…,magic_I_q<q>,magic_B_q<q>…,theta`.
pub fn csv_header(cfg: &DiagnosticsConfig) -> String {
    let mut cols = vec!["t".to_string(), "mass_defect".into(), "min_slope".into(), "clipped".into()];
    cols.extend(cfg.gammas.iter().map(|g| format!("triple_norm_g{g}")));
    for q in &cfg.qs {
        cols.push(format!("magic_I_q{q}"));
        cols.push(format!("magic_B_q{q}"));
    }
    cols.push("theta".into());
    cols.join(",")
}

pub fn write_csv<W: Write>(out: &mut W, cfg: &DiagnosticsConfig, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(out, "{}", csv_header(cfg))?;
    for r in records {
        let mut row = vec![r.t, r.mass_defect, r.min_slope, r.clipped];
        row.extend(&r.triple_norm);
        for (i, b) in r.magic.iter().zip(&r.magic_bound) {
            row.push(*i);
            row.push(*b);
        }
        row.push(r.theta);
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

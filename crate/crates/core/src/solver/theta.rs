//! Dirac-mass extraction: `θ(t) = ω_n · lim_{s↓0} w(s, t)` estimated by an
//! extrapolating fit, since no node sits at `s = 0`. The same layer-aware
//! fit serves both left-boundary modes: in free mode the layer sits between
//! the first nodes instead of between `0` and `s_min`.

use serde::Serialize;

use crate::grid::WField;
use crate::model::ProblemParams;
use crate::{Error, Result};

use super::run::Trajectory;

/// Nodes used by the extrapolating fit.
pub const FIT_NODES: usize = 6;

/// Exponents tried in `w ≈ θ_w + A·s^p`: `p = 1` and `0.05, 0.10, …, 0.95`.
pub fn fit_exponents() -> impl Iterator<Item = f64> {
    std::iter::once(1.0).chain((1..20).map(|k| 0.05 * k as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    /// Dirac mass in mass units, clamped to `[0, m]`.
    pub theta: f64,
    /// Extrapolated `w(0⁺)`, unclamped.
    pub theta_w: f64,
    /// Weighted mean of the fitted exponents `p`.
    pub order: f64,
    /// Weighted mean root-mean-square fit residual, in units of `w`.
    pub residual: f64,
    /// First fitted node; `None` when no plateau was found.
    pub anchor: Option<usize>,
}

/// Largest log-slope `s·w_s/w` accepted as a plateau.
pub const PLATEAU_LOG_SLOPE: f64 = 0.1;

/// Smallest `w(edge)/w(anchor)` for a plateau reached through a layer. A
/// collapse layer carries a fixed share of the plateau value (about 0.5 to
/// 0.8 in practice); a power law `s^γ` walked out to a flat region does not.
pub const LAYER_FRACTION: f64 = 0.1;

/// Position of the plateau that carries a Dirac mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    /// Node with the smallest log-slope.
    pub anchor: usize,
    /// Vertex of the parabola through the neighbouring log-slopes, in node
    /// units relative to `anchor`, within `[−½, ½]`.
    pub offset: f64,
}

/// Locates the plateau outside the boundary layer, if there is one.
///
/// A Dirac mass shows up as a boundary layer: `w_s` peaks at the first node
/// and decays across the layer. The edge is the first node where `w_s` drops
/// below half its maximum; from there the search moves out to the local
/// minimum of the log-slope `s·w_s/w`. Without a layer the candidate is node
/// 0. The candidate is a plateau only if its log-slope is at most
/// [`PLATEAU_LOG_SLOPE`]; a profile like `c·s^γ` has log-slope `γ` throughout.
/// A candidate reached through a layer must also keep `w(edge)` above
/// [`LAYER_FRACTION`] of its own value.
pub fn find_plateau(field: &WField) -> Option<Plateau> {
    let x = field.nodes();
    let w = field.values();
    if x.len() < 4 {
        return Some(Plateau { anchor: 0, offset: 0.0 });
    }
    let (ws, _) = field.differentiate();
    let log_slope = |i: usize| if w[i] > 0.0 { x[i] * ws[i] / w[i] } else { f64::INFINITY };
    let peak = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let edge = if peak > 0.0 && ws[0] >= 0.5 * peak { ws.iter().position(|&d| d < 0.5 * peak) } else { None };
    let (anchor, lowest) = match edge {
        Some(mut i) => {
            let start = i;
            while i + 1 < x.len() && log_slope(i + 1) < log_slope(i) {
                i += 1;
            }
            (i, start)
        }
        None => (0, 0),
    };
    if !(log_slope(anchor) <= PLATEAU_LOG_SLOPE) {
        return None;
    }
    if edge.is_some() && !(w[lowest] >= LAYER_FRACTION * w[anchor]) {
        return None;
    }
    let mut offset = 0.0;
    if anchor >= 1 && anchor + 1 < x.len() {
        let (a, b, c) = (log_slope(anchor - 1), log_slope(anchor), log_slope(anchor + 1));
        let curv = a - 2.0 * b + c;
        if curv > 0.0 && a.is_finite() {
            offset = (0.5 * (a - c) / curv).clamp(if anchor > lowest { -0.5 } else { 0.0 }, 0.5);
        }
    }
    Some(Plateau { anchor, offset })
}

/// Fit of `θ_w + A·s^p` on `FIT_NODES` nodes from the plateau, for every
/// exponent of the scan, averaged with weights `1/residual`. A hard argmin
/// over `p` flips between neighbouring exponents from one snapshot to the
/// next; the weighted mean varies continuously with the data and still singles
/// out an exact power law. Fits from the two anchors around the log-slope
/// vertex are blended by [`Plateau::offset`], so the estimate does not jump
/// when the plateau moves by one node.
///
/// Without a plateau there is no Dirac mass and the estimate is exactly zero.
pub fn extract_theta(field: &WField, params: &ProblemParams) -> Result<ThetaEstimate> {
    let Some(plateau) = find_plateau(field) else {
        return Ok(ThetaEstimate { theta: 0.0, theta_w: 0.0, order: 1.0, residual: 0.0, anchor: None });
    };
    let x = field.nodes();
    let w = field.values();
    let here = fit_window(x, w, plateau.anchor)?;
    let (theta_w, order, residual) = if plateau.offset == 0.0 {
        here
    } else {
        let next = if plateau.offset > 0.0 { plateau.anchor + 1 } else { plateau.anchor - 1 };
        match fit_window(x, w, next) {
            Ok(other) => {
                let u = plateau.offset.abs();
                (
                    (1.0 - u) * here.0 + u * other.0,
                    (1.0 - u) * here.1 + u * other.1,
                    (1.0 - u) * here.2 + u * other.2,
                )
            }
            Err(_) => here,
        }
    };
    Ok(ThetaEstimate {
        theta: (params.omega() * theta_w).clamp(0.0, params.mass()),
        theta_w,
        order,
        residual,
        anchor: Some(plateau.anchor),
    })
}

/// `(θ_w, mean p, mean residual)` for the window starting at `anchor`.
fn fit_window(x: &[f64], w: &[f64], anchor: usize) -> Result<(f64, f64, f64)> {
    let end = (anchor + FIT_NODES).min(x.len() - 1);
    let usable = end.saturating_sub(anchor);
    if usable < 3 {
        return Err(Error::DegenerateFit { usable });
    }
    let xs = &x[anchor..end];
    let ys = &w[anchor..end];
    // Residuals at roundoff level are floored so an exact fit gets a finite
    // (dominant) weight.
    let floor = 1e-14 * ys.iter().fold(0.0_f64, |a, &y| a.max(y.abs())).max(f64::MIN_POSITIVE);
    let (mut sw, mut sc, mut sp, mut sr) = (0.0, 0.0, 0.0, 0.0);
    for p in fit_exponents() {
        let Some((c, r)) = fit_power(xs, ys, p) else { continue };
        let wt = 1.0 / (r + floor);
        sw += wt;
        sc += wt * c;
        sp += wt * p;
        sr += wt * r;
    }
    if sw == 0.0 {
        return Err(Error::DegenerateFit { usable });
    }
    Ok((sc / sw, sp / sw, sr / sw))
}

/// Returns `(θ_w, rms residual)` for a fixed exponent.
fn fit_power(xs: &[f64], ys: &[f64], p: f64) -> Option<(f64, f64)> {
    let k = xs.len() as f64;
    let zs: Vec<f64> = xs.iter().map(|s| s.powf(p)).collect();
    let zm = zs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let szz: f64 = zs.iter().map(|z| (z - zm) * (z - zm)).sum();
    if !(szz > 0.0) {
        return None;
    }
    let szy: f64 = zs.iter().zip(ys).map(|(z, y)| (z - zm) * (y - ym)).sum();
    let a = szy / szz;
    let c = ym - a * zm;
    let ss: f64 = zs.iter().zip(ys).map(|(z, y)| (c + a * z - y).powi(2)).sum();
    Some((c, (ss / k).sqrt()))
}

/// `θ(t)` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaTrace {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub order: Vec<f64>,
    pub residual: Vec<f64>,
}

impl ThetaTrace {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let mut trace = ThetaTrace { times: vec![], theta: vec![], order: vec![], residual: vec![] };
        for f in &traj.snapshots {
            let e = extract_theta(f, &traj.params)?;
            trace.times.push(f.t());
            trace.theta.push(e.theta);
            trace.order.push(e.order);
            trace.residual.push(e.residual);
        }
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First time with `θ > threshold`.
    pub fn onset(&self, threshold: f64) -> Option<(f64, f64)> {
        self.times.iter().zip(&self.theta).find(|(_, &th)| th > threshold).map(|(&t, &th)| (t, th))
    }

    /// Largest decrease between consecutive samples (0 for a nondecreasing trace).
    pub fn max_decrease(&self) -> f64 {
        self.theta.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        self.theta.last().copied().unwrap_or(0.0)
    }
}

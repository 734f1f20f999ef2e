//! The measure `θ δ₀ + ρ dx` and the chemoattractant gradient recovered from
//! a mass-function snapshot.
//!
//! `ρ(r) = n w_s(rⁿ)` and `v_r(r) = r^{1−n}(w(rⁿ) − (μ/n) rⁿ)`. Only the
//! gradient of `v` is exported; the potential normalized by `∫v = 0` is left
//! out because nothing consumes it.

use std::io::Write;

use serde::Serialize;

use crate::grid::WField;
use crate::model::ProblemParams;
use crate::numerics::interp::Pchip;
use crate::numerics::quad;
use crate::solver::extract_theta;
use crate::{Error, Result};

/// Probes in the default set: `r_k = kR/200`.
pub const DEFAULT_PROBES: usize = 200;
/// Closure tolerance relative to `m`.
pub const CLOSURE_TOL: f64 = 1e-4;

pub fn default_probes(params: &ProblemParams) -> Vec<f64> {
    let r = params.radius();
    (1..=DEFAULT_PROBES).map(|k| r * (k as f64 / DEFAULT_PROBES as f64)).collect()
}

fn check_probes(params: &ProblemParams, probes: &[f64]) -> Result<()> {
    let r_max = params.radius();
    match probes.iter().find(|&&r| !(r > 0.0 && r <= r_max)) {
        Some(&r) => Err(Error::Probe { r }),
        None => Ok(()),
    }
}

/// Monotone cubic interpolant of `w` from node `first` outward; its
/// derivative is `w_s`. Inside `s = x_first` the density is the constant
/// that carries the mass `w(x_first) − base` of the inner cell.
#[derive(Debug, Clone)]
struct Slope {
    pchip: Pchip,
    floor: f64,
    inner: f64,
    n: f64,
}

impl Slope {
    fn new(field: &WField, params: &ProblemParams, first: usize, base: f64) -> Self {
        let x = field.nodes()[first..].to_vec();
        let y = field.values()[first..].to_vec();
        let n = params.nf();
        Slope { floor: x[0], inner: n * (y[0] - base).max(0.0) / x[0], pchip: Pchip::new(x, y), n }
    }

    fn rho(&self, r: f64) -> f64 {
        let s = r.powf(self.n);
        if s < self.floor {
            self.inner
        } else {
            self.n * self.pchip.derivative(s)
        }
    }
}

/// `w(0⁺)` implied by the left boundary: 0 in Dirichlet mode, the clamped
/// linear extrapolation in free mode.
fn ghost(field: &WField) -> f64 {
    field.interpolate(0.0).max(0.0)
}

/// `ρ(r) = n w_s(rⁿ)`, with no atom split off: inside the first node `ρ` is
/// the mean density between the left ghost and `w(s_min)`.
pub fn density(field: &WField, params: &ProblemParams, probes: &[f64]) -> Result<Vec<f64>> {
    check_probes(params, probes)?;
    let slope = Slope::new(field, params, 0, ghost(field));
    Ok(probes.iter().map(|&r| slope.rho(r)).collect())
}

/// `v_r(r) = r^{1−n}(w(rⁿ) − (μ/n) rⁿ)`, written as `r^{1−n}(w − (m/ω_n) rⁿ/S)`
/// so that `v_r(R) = 0` exactly when `w(S) = m/ω_n`.
pub fn chemo_gradient(field: &WField, params: &ProblemParams, probes: &[f64]) -> Result<Vec<f64>> {
    check_probes(params, probes)?;
    let n = params.nf();
    let (radius, s_max, cap) = (params.radius(), params.s_max(), params.mass_cap());
    let w_end = *field.values().last().expect("non-empty field");
    Ok(probes
        .iter()
        .map(|&r| {
            let (s, w) = if r == radius { (s_max, w_end) } else { (r.powf(n), field.interpolate(r.powf(n))) };
            r.powf(1.0 - n) * (w - cap * (s / s_max))
        })
        .collect())
}

/// One reconstructed snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureState {
    pub t: f64,
    /// Dirac mass, mass units.
    pub theta: f64,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub v_r: Vec<f64>,
    /// `|θ + ω_n ∫₀^R ρ r^{n−1} dr − m|`.
    pub closure_defect: f64,
}

impl MeasureState {
    pub fn closes(&self, params: &ProblemParams) -> bool {
        self.closure_defect <= CLOSURE_TOL * params.mass()
    }
}

/// `θ`, `ρ` and `v_r` on [`default_probes`], plus the closure defect.
///
/// When a Dirac mass is detected, the boundary layer inside the plateau
/// anchor is the smeared atom: `ρ` follows the interpolant from the anchor
/// outward and inside it carries only the excess `w(anchor) − θ/ω_n`.
/// Without an atom the interpolant starts at the first node. The closure
/// integral runs over the same density, cell by cell in `r`.
pub fn emit_measure(field: &WField, params: &ProblemParams) -> Result<MeasureState> {
    emit_measure_at(field, params, &default_probes(params))
}

pub fn emit_measure_at(field: &WField, params: &ProblemParams, probes: &[f64]) -> Result<MeasureState> {
    check_probes(params, probes)?;
    let est = extract_theta(field, params)?;
    let (first, base) = if est.theta > 0.0 {
        (est.anchor.unwrap_or(0), est.theta / params.omega())
    } else {
        (0, ghost(field))
    };
    let slope = Slope::new(field, params, first, base);
    let n = params.nf();
    let x = &field.nodes()[first..];
    let radii: Vec<f64> = x.iter().map(|&s| s.powf(1.0 / n)).collect();
    let tol = 1e-12 * params.mass_cap();
    // Inner cell: ∫₀^{r_c} ρ r^{n−1} dr = ρ_inner r_cⁿ/n.
    let mut continuous = slope.inner * x[0] / n;
    for r in radii.windows(2) {
        continuous += quad::integrate(|r| slope.rho(r) * r.powf(n - 1.0), r[0], r[1], tol);
    }
    let closure_defect = (est.theta + params.omega() * continuous - params.mass()).abs();
    Ok(MeasureState {
        t: field.t(),
        theta: est.theta,
        r: probes.to_vec(),
        rho: probes.iter().map(|&r| slope.rho(r)).collect(),
        v_r: chemo_gradient(field, params, probes)?,
        closure_defect,
    })
}

/// Header `t,r,rho,v_r,theta,closure_defect`: one row per probe with the
/// last two columns empty, then one summary row per snapshot with `r`, `rho`
/// and `v_r` empty.
pub fn write_measure_csv<W: Write>(out: &mut W, states: &[MeasureState]) -> Result<()> {
    writeln!(out, "t,r,rho,v_r,theta,closure_defect")?;
    for m in states {
        for ((r, rho), v) in m.r.iter().zip(&m.rho).zip(&m.v_r) {
            writeln!(out, "{},{},{},{},,", m.t, r, rho, v)?;
        }
        writeln!(out, "{},,,,{},{}", m.t, m.theta, m.closure_defect)?;
    }
    Ok(())
}

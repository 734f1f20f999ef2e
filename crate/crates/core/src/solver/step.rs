//! One time step of the (regularized) mass-function equation.
//!
//! Diffusion `(ν + n² s^{2−2/n}) w_ss` is always implicit. The transport
//! `n w f(w_s) − μ s w_s` is written as `β·w_s` with the secant velocity
//! `β = n w f(w_s)/w_s − μ s` frozen at the old state. It is either
//!
//! * implicit: `β` enters the tridiagonal matrix, using central differences
//!   where they keep the matrix an M-matrix and upwinding elsewhere, or
//! * explicit: upwinded by the sign of the linearized wind
//!   `n w f′(w_s) − μ s`, subject to a CFL bound.
//!
//! The left ghost is `w(0) = 0` in Dirichlet mode and a linear extrapolation
//! in free mode. The right value `m/ω_n` is imposed exactly.

use std::sync::Arc;

use crate::grid::{LeftBoundary, WField};
use crate::model::ProblemParams;
use crate::numerics::tridiag;
use crate::{Error, Result};

use super::cap::Nonlinearity;

/// Nonlinearity and ellipticity lift of the equation being solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub nonlinearity: Nonlinearity,
    pub nu: f64,
}

impl Regularization {
    /// Slope cap `f_ε`, `ν = 0`.
    pub fn capped(eps: f64) -> Result<Self> {
        Ok(Regularization { nonlinearity: Nonlinearity::capped(eps)?, nu: 0.0 })
    }

    /// The unregularized limit operator.
    pub fn limit() -> Self {
        Regularization { nonlinearity: Nonlinearity::Identity, nu: 0.0 }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn eps(&self) -> Option<f64> {
        self.nonlinearity.eps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Implicit,
    Explicit,
}

/// Forcing `g(s, t)` added to the right-hand side (manufactured solutions).
pub type Source = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: WField,
    /// `ω_n · max_i |clip_i|`, mass units.
    pub clipped: f64,
    /// Largest stable explicit-transport step at the old state.
    pub cfl_limit: f64,
}

struct Row {
    lo: f64,
    up: f64,
    explicit: f64,
    ghost: f64,
}

pub fn step(
    field: &WField,
    dt: f64,
    reg: &Regularization,
    params: &ProblemParams,
    transport: Transport,
    source: Option<&Source>,
) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let x = field.nodes();
    let w = field.values();
    let m = x.len();
    let last = m - 1;
    let cap = params.mass_cap();
    let nf = params.nf();
    let mu = params.mu();
    let alpha = params.diffusion_exponent();
    let f = reg.nonlinearity;
    let t_new = field.t() + dt;

    let mut cfl_limit = f64::INFINITY;
    let mut cfl_node = 0;
    let mut rows = Vec::with_capacity(last);
    for i in 0..last {
        let s = x[i];
        let hp = x[i + 1] - s;
        let wr = w[i + 1];
        let row = if i == 0 && field.left() == LeftBoundary::Free {
            free_left_row(s, hp, w[0], wr, nf, mu, f, transport, &mut cfl_limit)
        } else {
            let (hm, wl) = if i == 0 { (s, 0.0) } else { (s - x[i - 1], w[i - 1]) };
            let d = reg.nu + nf * nf * s.powf(alpha);
            let lo_d = 2.0 * d / (hm * (hm + hp));
            let up_d = 2.0 * d / (hp * (hm + hp));
            let pc = (-hp / (hm * (hm + hp))) * wl + ((hp - hm) / (hm * hp)) * w[i] + (hm / (hp * (hm + hp))) * wr;
            match transport {
                Transport::Implicit => {
                    let beta = nf * f.secant(w[i], pc) - mu * s;
                    if beta != 0.0 {
                        cfl_limit = cfl_limit.min(if beta > 0.0 { hp } else { hm } / beta.abs());
                    }
                    let lo_c = -beta * hp / (hm * (hm + hp));
                    let up_c = beta * hm / (hp * (hm + hp));
                    let (lo_t, up_t) = if lo_d + lo_c >= 0.0 && up_d + up_c >= 0.0 {
                        (lo_c, up_c)
                    } else if beta > 0.0 {
                        (0.0, beta / hp)
                    } else {
                        (-beta / hm, 0.0)
                    };
                    Row { lo: lo_d + lo_t, up: up_d + up_t, explicit: 0.0, ghost: 0.0 }
                }
                Transport::Explicit => {
                    let wind = nf * f.flux_slope(w[i], pc) - mu * s;
                    let (p, h) = if wind >= 0.0 { ((wr - w[i]) / hp, hp) } else { ((w[i] - wl) / hm, hm) };
                    if wind != 0.0 && h / wind.abs() < cfl_limit {
                        cfl_limit = h / wind.abs();
                        cfl_node = i;
                    }
                    let tr = nf * f.flux(w[i], p) - mu * s * p;
                    Row { lo: lo_d, up: up_d, explicit: tr, ghost: 0.0 }
                }
            }
        };
        rows.push(row);
    }
    if transport == Transport::Explicit && dt > cfl_limit {
        return Err(Error::Cfl { dt, limit: cfl_limit, node: cfl_node });
    }

    let mut lower = vec![0.0; last];
    let mut diag = vec![0.0; last];
    let mut upper = vec![0.0; last];
    let mut rhs = vec![0.0; last];
    for (i, r) in rows.iter().enumerate() {
        lower[i] = -dt * r.lo;
        upper[i] = -dt * r.up;
        diag[i] = 1.0 + dt * (r.lo + r.up);
        rhs[i] = w[i] + dt * r.explicit;
        if i == 0 {
            rhs[i] += dt * r.lo * r.ghost;
            lower[i] = 0.0;
        }
        if let Some(g) = source {
            rhs[i] += dt * g(x[i], t_new);
        }
    }
    rhs[last - 1] += dt * rows[last - 1].up * cap;
    upper[last - 1] = 0.0;

    let sol = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    let mut values = Vec::with_capacity(m);
    let mut clip = 0.0_f64;
    for v in sol {
        let c = v.clamp(0.0, cap);
        clip = clip.max((v - c).abs());
        values.push(c);
    }
    values.push(cap);
    Ok(StepOutcome {
        field: WField::new(field.grid().clone(), values, t_new, field.left()),
        clipped: params.omega() * clip,
        cfl_limit,
    })
}

/// Free mode, first node: the ghost continues the first cell linearly, so
/// `w_ss = 0` there and transport is one-sided. Outflow (`β ≥ 0`) uses the
/// forward difference; inflow uses the ghost value at `s = 0`, lagged.
#[allow(clippy::too_many_arguments)]
fn free_left_row(
    s: f64,
    hp: f64,
    w0: f64,
    w1: f64,
    nf: f64,
    mu: f64,
    f: Nonlinearity,
    transport: Transport,
    cfl_limit: &mut f64,
) -> Row {
    let p = (w1 - w0) / hp;
    let ghost = (w0 - s * p).max(0.0);
    match transport {
        Transport::Implicit => {
            let beta = nf * f.secant(w0, p) - mu * s;
            if beta != 0.0 {
                *cfl_limit = cfl_limit.min(if beta > 0.0 { hp } else { s } / beta.abs());
            }
            if beta >= 0.0 {
                Row { lo: 0.0, up: beta / hp, explicit: 0.0, ghost }
            } else {
                Row { lo: -beta / s, up: 0.0, explicit: 0.0, ghost }
            }
        }
        Transport::Explicit => {
            let wind = nf * f.flux_slope(w0, p) - mu * s;
            let (q, h) = if wind >= 0.0 { (p, hp) } else { ((w0 - ghost) / s, s) };
            if wind != 0.0 {
                *cfl_limit = cfl_limit.min(h / wind.abs());
            }
            Row { lo: 0.0, up: 0.0, explicit: nf * f.flux(w0, q) - mu * s * q, ghost }
        }
    }
}

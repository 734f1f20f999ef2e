//! Supersolutions that bound how fast mass can reach the origin:
//! `(y(t) + a s)^γ` with `y' = a n (y + aS)^γ`, and the linear cap
//! `c₁ e^{κt} s` with `κ = n(1 + 1/ε)`.

use serde::Serialize;

use crate::model::ProblemParams;
use crate::numerics::ode::{self, DenseSolution};
use crate::solver::Nonlinearity;
use crate::{Error, Result};

use super::{Jet, Operator};

/// Relative tolerance of the `y` integration.
pub const ODE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearGrowth {
    a: f64,
    gamma: f64,
    n: f64,
    s_max: f64,
    horizon: f64,
    y: DenseSolution,
    operator: Operator,
}

impl LinearGrowth {
    /// Integrates `y` on `[0, horizon]`; the contract operator defaults to the
    /// limit operator of `params`.
    pub fn new(params: &ProblemParams, a: f64, gamma: f64, horizon: f64) -> Result<Self> {
        if !(a > 0.0 && gamma > 0.0 && gamma <= 1.0 && horizon > 0.0) {
            return Err(Error::Parameter(format!("linear growth needs a > 0, γ ∈ (0, 1], τ* > 0 (a = {a}, γ = {gamma})")));
        }
        let n = params.nf();
        let s_max = params.s_max();
        let y = ode::solve(|_, y| a * n * (y + a * s_max).powf(gamma), 0.0, 0.0, horizon, ODE_RTOL)?;
        Ok(LinearGrowth { a, gamma, n, s_max, horizon, y, operator: Operator::for_params(params) })
    }

    /// Checks the contract against another operator (capped `f`, `ν > 0`, ...).
    pub fn with_operator(mut self, operator: Operator) -> Self {
        self.operator = operator;
        self
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn y(&self, t: f64) -> f64 {
        self.y.eval(t)
    }

    pub fn ode_steps(&self) -> usize {
        self.y.steps()
    }

    /// `c(τ*) = (a n (y(τ*) + aS)^γ)^γ`, so that `θ(t) ≤ ω_n c t^γ` on `[0, τ*]`.
    pub fn onset_constant(&self, tau: f64) -> f64 {
        (self.a * self.n * (self.y(tau) + self.a * self.s_max).powf(self.gamma)).powf(self.gamma)
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let (a, g) = (self.a, self.gamma);
        let y = self.y(t);
        let base = y + a * s;
        let y_t = a * self.n * (y + a * self.s_max).powf(g);
        let lead = g * base.powf(g - 1.0);
        Jet {
            value: base.powf(g),
            ds: a * lead,
            dss: if g == 1.0 { 0.0 } else { a * a * g * (g - 1.0) * base.powf(g - 2.0) },
            dt: lead * y_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearCap {
    n: f64,
    eps: f64,
    c1: f64,
    kappa: f64,
    mu: f64,
    nu: f64,
    s_max: f64,
    horizon: f64,
}

impl LinearCap {
    /// `c₁ e^{κt} s` on `[0, s_max] × [0, horizon)`, checked against the
    /// `ε`-capped operator with the given drift `μ` and lift `ν`.
    pub fn new(n: u32, eps: f64, c1: f64) -> Result<Self> {
        if !(eps > 0.0 && c1 > 0.0) {
            return Err(Error::Parameter(format!("linear cap needs ε, c₁ > 0 (ε = {eps}, c₁ = {c1})")));
        }
        let nf = n as f64;
        Ok(LinearCap { n: nf, eps, c1, kappa: nf * (1.0 + 1.0 / eps), mu: 0.0, nu: 0.0, s_max: 1.0, horizon: 1.0 })
    }

    pub fn on(mut self, s_max: f64, horizon: f64) -> Self {
        self.s_max = s_max;
        self.horizon = horizon;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn operator(&self) -> Operator {
        let nonlinearity = Nonlinearity::capped(self.eps).expect("ε checked at construction");
        Operator { n: self.n, mu: self.mu, nu: self.nu, nonlinearity }
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let e = self.c1 * (self.kappa * t).exp();
        Jet { value: e * s, ds: e, dss: 0.0, dt: self.kappa * e * s }
    }
}

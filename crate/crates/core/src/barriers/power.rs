//! The collapse subsolution `y(t)·s²/(s^{2−γ}+δ)` with `y' = −C y^β`.

use serde::Serialize;

use crate::{Error, Result};

use super::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerCollapse {
    n: f64,
    gamma: f64,
    mu: f64,
    y0: f64,
    delta: f64,
    s_max: f64,
    beta: f64,
    rate: f64,
    lifetime: f64,
}

impl PowerCollapse {
    /// Builds the barrier on `[0, s_max]` with the rate constant
    /// `C = max{4μ y₀^{1−β}, 6n²(1−γ)(3n(1−γ))^{2/(n−2−nγ)}}`.
    pub fn new(n: u32, gamma: f64, mu: f64, y0: f64, delta: f64, s_max: f64) -> Result<Self> {
        let nf = n as f64;
        if n < 3 {
            return Err(Error::Parameter(format!("power-collapse needs n ≥ 3, got {n}")));
        }
        let upper = 1.0 - 2.0 / nf;
        if !(gamma > 0.0 && gamma < upper) {
            return Err(Error::Parameter(format!("γ = {gamma} outside (0, {upper})")));
        }
        if !(y0 > 0.0 && delta > 0.0 && mu >= 0.0 && s_max > 0.0) {
            return Err(Error::Parameter("power-collapse needs y₀, δ, S > 0 and μ ≥ 0".into()));
        }
        let gap = nf - 2.0 - nf * gamma;
        let beta = 1.0 - 2.0 / gap;
        let spread = 6.0 * nf * nf * (1.0 - gamma) * (3.0 * nf * (1.0 - gamma)).powf(2.0 / gap);
        let rate = (4.0 * mu * y0.powf(1.0 - beta)).max(spread);
        let mut b = PowerCollapse { n: nf, gamma, mu, y0, delta, s_max, beta, rate, lifetime: 0.0 };
        b.lifetime = b.y0.powf(1.0 - beta) / ((1.0 - beta) * rate);
        Ok(b)
    }

    /// Same profile with a caller-chosen rate `C` (for falsification runs).
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self.lifetime = self.y0.powf(1.0 - self.beta) / ((1.0 - self.beta) * rate);
        self
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The rate constant `C`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `T = y₀^{1−β}/((1−β) C)`.
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// `y(t) = (y₀^{1−β} − (1−β) C t)^{1/(1−β)}`, zero from `T` on.
    pub fn y(&self, t: f64) -> f64 {
        let base = self.y0.powf(1.0 - self.beta) - (1.0 - self.beta) * self.rate * t;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(1.0 / (1.0 - self.beta))
        }
    }

    /// `φ_δ` and its first two derivatives.
    pub fn profile(&self, s: f64) -> (f64, f64, f64) {
        let (g, d) = (self.gamma, self.delta);
        if s <= 0.0 {
            return (0.0, 0.0, 2.0 / d);
        }
        let p = s.powf(2.0 - g);
        let q = p + d;
        let phi = s * s / q;
        let phi_s = (g * s * p + 2.0 * d * s) / (q * q);
        let phi_ss = (-g * (1.0 - g) * p * p - (1.0 - g) * (6.0 - g) * d * p + 2.0 * d * d) / (q * q * q);
        (phi, phi_s, phi_ss)
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let y = self.y(t);
        let (phi, phi_s, phi_ss) = self.profile(s);
        let y_t = -self.rate * y.powf(self.beta);
        let y_t = if y > 0.0 { y_t } else { 0.0 };
        Jet { value: y * phi, ds: y * phi_s, dss: y * phi_ss, dt: y_t * phi }
    }
}

//! The traveling profile `ψ(s,t) = (s₀/2)·s/(s + φ(s + A(t−t₀))) + s/2` with
//! `φ(y) = (2√s₀ − y)₊²`, a subsolution of the frozen-transport equation.

use serde::Serialize;

use crate::{Error, Result};

use super::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TravelingProfile {
    n: f64,
    mu: f64,
    a0: f64,
    tau: f64,
    t0: f64,
    speed: f64,
    s_star: f64,
    s0: f64,
    lifetime: f64,
}

impl TravelingProfile {
    /// `A = n a₀/4`, `s*` as the six-way minimum and `s₀ = min{s*, override}`.
    /// `s_max` is `S = Rⁿ`.
    pub fn new(n: u32, mu: f64, a0: f64, tau: f64, t0: f64, s_max: f64, s0_override: Option<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("traveling profile needs n ≥ 3, got {n}")));
        }
        if !(a0 > 0.0 && tau > 0.0 && t0 >= 0.0 && mu >= 0.0 && s_max > 0.0) {
            return Err(Error::Parameter("traveling profile needs a₀, τ, S > 0 and t₀, μ ≥ 0".into()));
        }
        if let Some(o) = s0_override {
            if !(o > 0.0) {
                return Err(Error::Parameter(format!("s₀ override must be positive, got {o}")));
            }
        }
        let nf = n as f64;
        let alpha = 2.0 - 2.0 / nf;
        let speed = nf * a0 / 4.0;
        let drift_bound = if mu > 0.0 { nf * a0 / (4.0 * mu) } else { f64::INFINITY };
        let small = a0 / (8.0 * nf);
        let s_star = [
            s_max / 2.0,
            drift_bound,
            small.powf(1.0 / alpha),
            small.powf(1.0 / (alpha - 1.0)),
            1.0,
            speed * speed * tau * tau / 4.0,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        let s0 = s0_override.map_or(s_star, |o| o.min(s_star));
        let lifetime = 2.0 * s0.sqrt() / speed;
        Ok(TravelingProfile { n: nf, mu, a0, tau, t0, speed, s_star, s0, lifetime })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `A = n a₀/4`.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn s_star(&self) -> f64 {
        self.s_star
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// `τ₀ = 2√s₀/A`.
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.lifetime)
    }

    /// The kink of `φ` seen at time `t`, if it lies in `[0, s₀]`.
    pub fn exceptional_point(&self, t: f64) -> Option<f64> {
        let p = 2.0 * self.s0.sqrt() - self.speed * (t - self.t0);
        (0.0..=self.s0).contains(&p).then_some(p)
    }

    /// `(φ, φ', φ'')` at `y`.
    fn phi(&self, y: f64) -> (f64, f64, f64) {
        let gap = 2.0 * self.s0.sqrt() - y;
        if gap > 0.0 {
            (gap * gap, -2.0 * gap, 2.0)
        } else {
            (0.0, 0.0, 0.0)
        }
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let half = 0.5 * self.s0;
        let (phi, dphi, ddphi) = self.phi(s + self.speed * (t - self.t0));
        if s <= 0.0 {
            let ds = if phi > 0.0 { half / phi + 0.5 } else { 0.5 };
            return Jet { value: 0.0, ds, dss: 0.0, dt: 0.0 };
        }
        let q = s + phi;
        let num = phi - s * dphi;
        Jet {
            value: half * s / q + 0.5 * s,
            ds: half * num / (q * q) + 0.5,
            dss: half * (-s * ddphi / (q * q) - 2.0 * num * (1.0 + dphi) / (q * q * q)),
            dt: half * (-self.speed * s * dphi) / (q * q),
        }
    }
}

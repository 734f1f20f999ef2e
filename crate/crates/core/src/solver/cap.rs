//! The slope cap `f_ε` and the nonlinearity selector.

use crate::{Error, Result};

/// Regularization parameter `ε` of the slope cap.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SlopeCap(f64);

impl SlopeCap {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(SlopeCap(eps))
        } else {
            Err(Error::Parameter(format!("ε must be positive, got {eps}")))
        }
    }

    pub fn eps(self) -> f64 {
        self.0
    }

    /// Width of the smoothed corner on each side of `0.95/ε … 1.05/ε`.
    pub fn corner_width(self) -> f64 {
        0.05 / self.0
    }

    fn knee(self) -> f64 {
        0.95 / self.0
    }

    fn span(self) -> f64 {
        0.1 / self.0
    }

    /// `f_ε(ξ)`: identity up to `0.95/ε`, constant `1/ε` beyond `1.05/ε`,
    /// joined by the integral of a cubic smoothstep (a C² transition).
    pub fn value(self, xi: f64) -> f64 {
        let a = self.knee();
        if xi <= a {
            return xi;
        }
        let l = self.span();
        let u = ((xi - a) / l).min(1.0);
        a + l * (u - u * u * u + 0.5 * u * u * u * u)
    }

    pub fn derivative(self, xi: f64) -> f64 {
        let a = self.knee();
        if xi <= a {
            return 1.0;
        }
        let u = ((xi - a) / self.span()).min(1.0);
        (1.0 - u) * (1.0 - u) * (1.0 + 2.0 * u)
    }

    pub fn second_derivative(self, xi: f64) -> f64 {
        let a = self.knee();
        let l = self.span();
        if xi <= a || xi >= a + l {
            return 0.0;
        }
        let u = (xi - a) / l;
        6.0 * u * (u - 1.0) / l
    }

    /// Supremum of `f_ε`.
    pub fn ceiling(self) -> f64 {
        1.0 / self.0
    }
}

/// The flux nonlinearity `f` in `n·w·f(w_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// The limit problem, `f(ξ) = ξ`.
    Identity,
    /// The regularized problem, `f = f_ε`.
    Capped(SlopeCap),
    /// `n·w·f(w_s)` replaced by the frozen transport `n·a₀·w_s`.
    Frozen { a0: f64 },
}

impl Nonlinearity {
    pub fn capped(eps: f64) -> Result<Self> {
        Ok(Nonlinearity::Capped(SlopeCap::new(eps)?))
    }

    /// Flux term `n·w·f(w_s)` without the factor `n`.
    pub fn flux(self, w: f64, ws: f64) -> f64 {
        match self {
            Nonlinearity::Identity => w * ws,
            Nonlinearity::Capped(c) => w * c.value(ws),
            Nonlinearity::Frozen { a0 } => a0 * ws,
        }
    }

    /// `∂/∂w_s` of [`Nonlinearity::flux`].
    pub fn flux_slope(self, w: f64, ws: f64) -> f64 {
        match self {
            Nonlinearity::Identity => w,
            Nonlinearity::Capped(c) => w * c.derivative(ws),
            Nonlinearity::Frozen { a0 } => a0,
        }
    }

    /// Secant velocity `flux / w_s` (equal to `flux_slope` at `w_s = 0`).
    pub fn secant(self, w: f64, ws: f64) -> f64 {
        match self {
            Nonlinearity::Identity => w,
            Nonlinearity::Capped(c) if ws > c.knee() => w * c.value(ws) / ws,
            Nonlinearity::Capped(_) => w,
            Nonlinearity::Frozen { a0 } => a0,
        }
    }

    pub fn eps(self) -> Option<f64> {
        match self {
            Nonlinearity::Capped(c) => Some(c.eps()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_below_knee_and_bounded() {
        let c = SlopeCap::new(1e-2).unwrap();
        assert_eq!(c.value(50.0), 50.0);
        assert_eq!(c.value(95.0), 95.0);
        assert_eq!(c.value(1e9), 100.0);
        assert!((c.value(105.0) - 100.0).abs() < 1e-12);
        let mut prev = c.value(90.0);
        for k in 1..=2000 {
            let xi = 90.0 + k as f64 * 0.01;
            let v = c.value(xi);
            assert!(v <= c.ceiling() + 1.0);
            assert!(c.derivative(xi) >= 0.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn smooth_corner_matches_derivatives() {
        let c = SlopeCap::new(0.1).unwrap();
        let h = 1e-6;
        for xi in [9.3, 9.5, 9.51, 10.0, 10.4, 10.49, 10.6] {
            let fd = (c.value(xi + h) - c.value(xi - h)) / (2.0 * h);
            assert!((fd - c.derivative(xi)).abs() < 1e-6, "ξ={xi}");
            let fd2 = (c.derivative(xi + h) - c.derivative(xi - h)) / (2.0 * h);
            assert!((fd2 - c.second_derivative(xi)).abs() < 1e-5, "ξ={xi}");
        }
    }

    #[test]
    fn caps_are_ordered() {
        let big = SlopeCap::new(1e-2).unwrap();
        let small = SlopeCap::new(1e-3).unwrap();
        for k in 0..5000 {
            let xi = k as f64 * 0.5;
            assert!(big.value(xi) <= small.value(xi));
        }
    }
}

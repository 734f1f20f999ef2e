//! The static three-piece subsolution `W̲`: a rational head on `[0, s*]`,
//! exponential growth `c e^{λs} + k` up to `s₁` and `d e^{κs} + l` up to `S`.

use serde::Serialize;

use crate::model::ProblemParams;
use crate::{Error, Result};

use super::Jet;

/// Upper end of the bracket for `κ`.
pub const KAPPA_MAX: f64 = 1e6;

/// Constants of the pipeline, in the order they are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticConstants {
    pub s_star: f64,
    pub lambda: f64,
    pub kappa0: f64,
    pub delta: f64,
    pub b: f64,
    pub a: f64,
    pub c: f64,
    pub k: f64,
    pub kappa: f64,
    pub d: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticSubsolution {
    #[serde(skip)]
    params: ProblemParams,
    s0: f64,
    s1: f64,
    m0: f64,
    m1: f64,
    constants: StaticConstants,
    /// `c e^{λ s*}`, the middle piece's scale without under/overflow.
    c_star: f64,
    /// `W̲_s(s₁)/κ`, the outer piece's scale relative to `s₁`.
    d_one: f64,
    junctions: [f64; 2],
}

/// `ln((e^{κL} − 1)/κ)` without overflow.
fn log_growth(kappa: f64, len: f64) -> f64 {
    let x = kappa * len;
    let log_num = if x < 30.0 { x.exp_m1().ln() } else { x + (-(-x).exp()).ln_1p() };
    log_num - kappa.ln()
}

impl StaticSubsolution {
    pub fn new(params: ProblemParams, s0: f64, s1: f64, m0: f64, m1: f64) -> Result<Self> {
        let s_max = params.s_max();
        let cap = params.mass_cap();
        if params.n() < 3 {
            return Err(Error::Parameter("static subsolution needs n ≥ 3".into()));
        }
        if !(0.0 < s0 && s0 < s1 && s1 < s_max) || !(0.0 < m0 && m0 < m1 && m1 < cap) {
            return Err(Error::Parameter(format!(
                "need 0 < s₀ < s₁ < S and 0 < M₀ < M₁ < m/ω_n (s₀ = {s0}, s₁ = {s1}, M₀ = {m0}, M₁ = {m1})"
            )));
        }
        let n = params.nf();
        let mu = params.mu();
        let q = 1.0 - 2.0 / n;

        let s_star = largest_feasible(|s| 2.0 * n * s.powf(q) + mu / n * (s + s * s) - m0, s0)?;
        let lambda = mu / (n * n * s_star.powf(q));
        let kappa0 = mu / (n * n * s1.powf(q));
        let first = (m1 - m0) / (m0 * (s1 - s_star)) * (lambda * (s_star - s1)).exp();
        // κ₀ e^{κ₀ s₁}/(e^{κ₀ S} − e^{κ₀ s₁}) = κ₀/expm1(κ₀ (S − s₁)).
        let second = (cap - m1) / m0 * kappa0 / (kappa0 * (s_max - s1)).exp_m1() * (lambda * (s_star - s1)).exp();
        let delta = first.min(second).min(1.0);
        if !(delta > 0.0) {
            return Err(Error::Infeasible(format!("δ underflows to {delta:e}")));
        }
        let b = delta * s_star * s_star;
        let a = m0 * (s_star + b) / s_star;
        let c_star = a * b / (lambda * (s_star + b) * (s_star + b));
        let c = c_star * (-lambda * s_star).exp();
        let k = m0 - c_star;

        let mid_s1 = c_star * (lambda * (s1 - s_star)).exp();
        let w_s1 = mid_s1 + k;
        let slope_s1 = lambda * mid_s1;
        let target = ((cap - w_s1) / slope_s1).ln();
        let len = s_max - s1;
        let h = |kappa: f64| log_growth(kappa, len) - target;
        let kappa = if h(kappa0) >= 0.0 {
            kappa0
        } else {
            let mut lo = kappa0;
            let mut hi = 2.0 * kappa0.max(1.0 / len);
            while h(hi) < 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > KAPPA_MAX {
                    return Err(Error::RootFind(format!("κ exceeds κ_max = {KAPPA_MAX:e}")));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-15 * hi {
                    break;
                }
                if h(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let d_one = slope_s1 / kappa;
        let d = d_one * (-kappa * s1).exp();
        let l = cap - d_one * (kappa * len).exp();

        let constants = StaticConstants { s_star, lambda, kappa0, delta, b, a, c, k, kappa, d, l };
        let out = StaticSubsolution { params, s0, s1, m0, m1, constants, c_star, d_one, junctions: [s_star, s1] };
        let [(v0, d0), (v1, d1)] = out.junction_defects();
        if v0.max(d0).max(v1).max(d1) > 1e-8 {
            return Err(Error::Infeasible(format!("junction mismatch ({v0:e}, {d0:e}, {v1:e}, {d1:e})")));
        }
        Ok(out)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn constants(&self) -> &StaticConstants {
        &self.constants
    }

    pub fn junctions(&self) -> &[f64; 2] {
        &self.junctions
    }

    pub fn s_max(&self) -> f64 {
        self.params.s_max()
    }

    /// The anchors `(s₀, s₁, M₀, M₁)`.
    pub fn anchors(&self) -> (f64, f64, f64, f64) {
        (self.s0, self.s1, self.m0, self.m1)
    }

    fn head(&self, s: f64) -> Jet {
        let StaticConstants { a, b, .. } = self.constants;
        let p = s + b;
        Jet { value: a * s / p, ds: a * b / (p * p), dss: -2.0 * a * b / (p * p * p), dt: 0.0 }
    }

    fn middle(&self, s: f64) -> Jet {
        let StaticConstants { lambda, k, s_star, .. } = self.constants;
        let e = self.c_star * (lambda * (s - s_star)).exp();
        Jet { value: e + k, ds: lambda * e, dss: lambda * lambda * e, dt: 0.0 }
    }

    fn outer(&self, s: f64) -> Jet {
        let kappa = self.constants.kappa;
        let e = self.d_one * (kappa * (s - self.s1)).exp();
        // m/ω_n − d (e^{κS} − e^{κs}), written to avoid the huge e^{κS}.
        let top = self.d_one * (kappa * (self.s_max() - self.s1)).exp();
        let value = self.params.mass_cap() - top * -(-kappa * (self.s_max() - s)).exp_m1();
        Jet { value, ds: kappa * e, dss: kappa * kappa * e, dt: 0.0 }
    }

    pub fn jet(&self, s: f64) -> Jet {
        let [s_star, s1] = self.junctions;
        if s <= s_star {
            self.head(s)
        } else if s < s1 {
            self.middle(s)
        } else {
            self.outer(s)
        }
    }

    /// Relative jumps `(value, slope)` at `s*` and at `s₁`.
    pub fn junction_defects(&self) -> [(f64, f64); 2] {
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        let [s_star, s1] = self.junctions;
        let (l0, r0) = (self.head(s_star), self.middle(s_star));
        let (l1, r1) = (self.middle(s1), self.outer(s1));
        [(rel(l0.value, r0.value), rel(l0.ds, r0.ds)), (rel(l1.value, r1.value), rel(l1.ds, r1.ds))]
    }
}

/// Largest `s ∈ (0, s_hi]` with `g(s) ≤ 0` for increasing `g`, `g(0⁺) < 0`.
/// The returned point is always on the feasible side.
fn largest_feasible<G: Fn(f64) -> f64>(g: G, s_hi: f64) -> Result<f64> {
    if g(s_hi) <= 0.0 {
        return Ok(s_hi);
    }
    let (mut lo, mut hi) = (0.0_f64, s_hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 && g(lo) <= 0.0 {
        Ok(lo)
    } else {
        Err(Error::Infeasible("no positive s* satisfies the smallness condition".into()))
    }
}

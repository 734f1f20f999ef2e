//! Convex under- and concave over-estimates of a monotone profile, and the
//! two barriers built from them.
//!
//! The convex envelope `φ̲` has derivative `ϕ` that climbs through a dyadic
//! ladder `ξ_j = a + (b−a)2^{1−j}` with levels `η_j`, joined by bridges `χ`
//! whose slopes equal 1 at both ends. The concave envelope `φ̄` inverts the
//! convex envelope of `φ⁻¹` and continues with an exponential tail.

use std::fmt;
use std::sync::Arc;

use crate::numerics::interp::Pchip;
use crate::{Error, Result};

use super::traveling::TravelingProfile;
use super::{Jet, Operator};

/// Samples of `φ'` per dyadic interval when computing the `η_j`.
const SAMPLES_PER_LEVEL: usize = 64;

/// Deepest level of the ladder.
const MAX_LEVELS: usize = 60;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A nondecreasing `C¹` profile `φ` on `[lo, hi]` with its derivative.
#[derive(Clone)]
pub struct MonotoneProfile {
    lo: f64,
    hi: f64,
    value: Scalar,
    slope: Scalar,
}

impl fmt::Debug for MonotoneProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneProfile").field("lo", &self.lo).field("hi", &self.hi).finish_non_exhaustive()
    }
}

impl MonotoneProfile {
    pub fn from_fn<V, D>(lo: f64, hi: f64, value: V, slope: D) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi) {
            return Err(Error::Parameter(format!("empty profile interval [{lo}, {hi}]")));
        }
        Ok(MonotoneProfile { lo, hi, value: Arc::new(value), slope: Arc::new(slope) })
    }

    /// Monotone cubic interpolant of nondecreasing samples.
    pub fn from_samples(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("profile samples need ≥ 2 strictly increasing abscissae".into()));
        }
        if y.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Hypothesis("profile samples decrease".into()));
        }
        let (lo, hi) = (x[0], x[x.len() - 1]);
        let p = Arc::new(Pchip::new(x, y));
        let q = p.clone();
        MonotoneProfile::from_fn(lo, hi, move |t| p.eval(t), move |t| q.derivative(t))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        (self.slope)(x)
    }
}

/// A bridge `χ` on `[x₀, x_last]`: `χ'` is piecewise linear through
/// `(x_k, v_k)` with `v = 1` at both ends.
#[derive(Debug, Clone)]
struct Bridge {
    x: Vec<f64>,
    v: Vec<f64>,
    /// `χ(x_k)`.
    c: Vec<f64>,
    /// `∫_{x₀}^{x_k} χ`.
    q: Vec<f64>,
}

impl Bridge {
    /// Rises from `from` to `to` over `[start, end]`.
    fn new(start: f64, end: f64, from: f64, to: f64) -> Bridge {
        let len = end - start;
        let m = (to - from) / len;
        let (x, v) = if m > 0.5 {
            (vec![start, start + 0.5 * len, end], vec![1.0, 2.0 * m - 1.0, 1.0])
        } else {
            let plateau = 0.5 * m;
            let ramp = (m - plateau) * len / (1.0 - plateau);
            (vec![start, start + ramp, end - ramp, end], vec![1.0, plateau, plateau, 1.0])
        };
        let mut c = vec![from];
        let mut q = vec![0.0];
        for k in 0..x.len() - 1 {
            let h = x[k + 1] - x[k];
            let r = (v[k + 1] - v[k]) / h;
            q.push(q[k] + c[k] * h + v[k] * h * h / 2.0 + r * h * h * h / 6.0);
            c.push(c[k] + v[k] * h + r * h * h / 2.0);
        }
        Bridge { x, v, c, q }
    }

    /// `(∫_{x₀}^x χ, χ(x), χ'(x))`.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let last = self.x.len() - 2;
        let k = self.x[1..=last].partition_point(|&p| p <= x);
        let h = self.x[k + 1] - self.x[k];
        let r = (self.v[k + 1] - self.v[k]) / h;
        let u = x - self.x[k];
        let int = self.q[k] + self.c[k] * u + self.v[k] * u * u / 2.0 + r * u * u * u / 6.0;
        (int, self.c[k] + self.v[k] * u + r * u * u / 2.0, self.v[k] + r * u)
    }
}

/// Strictly convex, increasing `C¹` underestimate `φ̲` of a profile.
#[derive(Debug, Clone)]
pub struct ConvexEnvelope {
    lo: f64,
    hi: f64,
    base: f64,
    /// `ξ₁ = hi > ξ₂ > … > ξ_{J+1}`.
    knots: Vec<f64>,
    /// `η₁, …, η_{J+2}`.
    etas: Vec<f64>,
    /// Bridge on `(ξ_{j+1}, ξ_j]`.
    bridges: Vec<Bridge>,
    /// `φ̲(ξ_j) − φ̲(lo)`.
    integral: Vec<f64>,
}

impl ConvexEnvelope {
    /// Envelope on `[φ.lo, φ.hi]` with `φ̲(lo) = φ(lo)` and `φ̲(hi) ≤ φ(lo) + η`.
    pub fn new(phi: &MonotoneProfile, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Parameter(format!("η must be positive, got {eta}")));
        }
        let (a, b) = (phi.lo(), phi.hi());
        let width = b - a;
        let floor = 1e-11 * a.abs().max(b.abs()).max(width);
        let positive = |x: f64, d: f64| {
            if d > 0.0 && d.is_finite() {
                Ok(d)
            } else {
                Err(Error::Hypothesis(format!("φ' = {d:e} at ξ = {x:e} is not positive")))
            }
        };
        let mut knots = vec![b];
        let mut etas = vec![(positive(b, phi.slope(b))? / 2.0).min(eta / width)];
        let mut running = f64::INFINITY;
        // Each pass adds η_{j+1} and then ξ_{j+1}; the final η is one level deeper
        // than the final knot.
        loop {
            let upper = *knots.last().unwrap();
            let next = a + 0.5 * (upper - a);
            for i in 0..=SAMPLES_PER_LEVEL {
                let x = next + (upper - next) * i as f64 / SAMPLES_PER_LEVEL as f64;
                running = running.min(positive(x, phi.slope(x))?);
            }
            etas.push((etas.last().unwrap() / 2.0).min(running / 2.0));
            if knots.len() > MAX_LEVELS || (next - a < floor && knots.len() > 1) {
                break;
            }
            knots.push(next);
        }
        let levels = knots.len() - 1;
        let bridges: Vec<Bridge> =
            (0..levels).map(|i| Bridge::new(knots[i + 1], knots[i], etas[i + 2], etas[i + 1])).collect();
        let mut integral = vec![0.0; knots.len()];
        integral[levels] = 0.5 * etas[levels + 1] * (knots[levels] - a);
        for i in (0..levels).rev() {
            integral[i] = integral[i + 1] + bridges[i].eval(knots[i]).0;
        }
        Ok(ConvexEnvelope { lo: a, hi: b, base: phi.value(a), knots, etas, bridges, integral })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `φ̲(lo)`.
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// `(φ̲, φ̲', φ̲'')` at `x`. Beyond `hi` the envelope continues with
    /// `φ̲'' = 1`; below `ξ_{J+1}` its slope is linear from 0.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let levels = self.knots.len() - 1;
        if x > self.hi {
            let u = x - self.hi;
            let slope = self.etas[1];
            return (self.base + self.integral[0] + slope * u + u * u / 2.0, slope + u, 1.0);
        }
        let count = self.knots.partition_point(|&k| k >= x);
        if count > levels {
            let depth = self.knots[levels] - self.lo;
            let rate = self.etas[levels + 1] / depth;
            let u = (x - self.lo).max(0.0);
            return (self.base + 0.5 * rate * u * u, rate * u, rate);
        }
        let i = count - 1;
        let (int, slope, curve) = self.bridges[i].eval(x);
        (self.base + self.integral[i + 1] + int, slope, curve)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Solves `φ̲(y) = target` for `y ∈ [lo, hi]`; `target ≤ φ̲(hi)`.
    fn invert(&self, target: f64) -> f64 {
        let (mut lo, mut y) = (self.lo, self.hi);
        for _ in 0..400 {
            let (v, d, _) = self.eval(y);
            let r = v - target;
            if r <= 0.0 {
                lo = y;
                if r == 0.0 {
                    break;
                }
            }
            let newton = if d > 0.0 { y - r / d } else { f64::NAN };
            let next = if newton.is_finite() && newton > lo && newton <= y.max(lo) { newton } else { 0.5 * (lo + y) };
            if next == y {
                break;
            }
            y = next;
        }
        y
    }
}

/// Strictly concave, increasing, bounded overestimate `φ̄` on `[a, ∞)`.
#[derive(Debug, Clone)]
pub struct ConcaveEnvelope {
    a: f64,
    a0: f64,
    b: f64,
    top: f64,
    /// `true` when `φ + (ξ − a)` replaced a profile with vanishing slope.
    lifted: bool,
    inverse: ConvexEnvelope,
    xi0: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl ConcaveEnvelope {
    pub fn new(phi: &MonotoneProfile) -> Result<Self> {
        let (a, b) = (phi.lo(), phi.hi());
        let probes = 4096;
        let mut lifted = false;
        for i in 1..=probes {
            let x = a + (b - a) * i as f64 / probes as f64;
            let d = phi.slope(x);
            if d < 0.0 || !d.is_finite() {
                return Err(Error::Hypothesis(format!("φ' = {d:e} at ξ = {x:e}")));
            }
            lifted |= d == 0.0;
        }
        let base = phi.clone();
        let dominant = if lifted {
            let (p, q) = (base.clone(), base.clone());
            MonotoneProfile::from_fn(a, b, move |x| p.value(x) + (x - a), move |x| q.slope(x) + 1.0)?
        } else {
            base
        };
        let a0 = dominant.value(a);
        let top = dominant.value(b);
        if !(top > a0) {
            return Err(Error::Hypothesis("φ is constant".into()));
        }
        let (f, g) = (dominant.clone(), dominant.clone());
        let rho = MonotoneProfile::from_fn(
            a0,
            top,
            move |y| invert_increasing(&f, y),
            move |y| 1.0 / g.slope(invert_increasing(&g, y)),
        )?;
        let inverse = ConvexEnvelope::new(&rho, 0.5 * (b - a))?;
        let (xi0, d_rho, dd_rho) = inverse.eval(top);
        let c1 = top;
        let c2 = 1.0 / d_rho;
        let c3 = dd_rho / (d_rho * d_rho * d_rho);
        Ok(ConcaveEnvelope { a, a0, b, top, lifted, inverse, xi0, c1, c2, c3 })
    }

    pub fn lo(&self) -> f64 {
        self.a
    }

    pub fn hi(&self) -> f64 {
        self.b
    }

    /// `φ̄(a)`.
    pub fn base(&self) -> f64 {
        self.a0
    }

    pub fn lifted(&self) -> bool {
        self.lifted
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// Tail constants `(c₁, c₂, c₃)`.
    pub fn tail(&self) -> (f64, f64, f64) {
        (self.c1, self.c2, self.c3)
    }

    /// `sup φ̄ = c₁ + c₂²/c₃`.
    pub fn sup(&self) -> f64 {
        self.c1 + self.c2 * self.c2 / self.c3
    }

    /// `(φ̄, φ̄', φ̄'')` at `x ≥ a`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        if x > self.xi0 {
            let k = self.c3 / self.c2;
            let e = (-k * (x - self.xi0)).exp();
            return (self.c1 - self.c2 * self.c2 / self.c3 * (-k * (x - self.xi0)).exp_m1(), self.c2 * e, -self.c3 * e);
        }
        let y = self.inverse.invert(x).clamp(self.a0, self.top);
        let (_, d, dd) = self.inverse.eval(y);
        (y, 1.0 / d, -dd / (d * d * d))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

/// Inverse of a strictly increasing profile by bisection.
fn invert_increasing(phi: &MonotoneProfile, y: f64) -> f64 {
    let (mut lo, mut hi) = (phi.lo(), phi.hi());
    while hi - lo > 1e-15 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi.value(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The supersolution `w̄(s,t) = φ̄(s + A(t − t₀))` with `A = n sup φ̄`.
#[derive(Debug, Clone)]
pub struct ConcaveSuper {
    envelope: ConcaveEnvelope,
    speed: f64,
    t0: f64,
    horizon: f64,
    s_max: f64,
    operator: Operator,
}

impl ConcaveSuper {
    /// Needs `a = 0` and `φ(0) ≥ 0`; the operator may carry `f_ε`, `ν` and `μ`.
    pub fn new(envelope: ConcaveEnvelope, operator: Operator, s_max: f64, t0: f64, horizon: f64) -> Result<Self> {
        if envelope.lo() != 0.0 || envelope.base() < 0.0 {
            return Err(Error::Hypothesis("concave supersolution needs a = 0 and φ(0) ≥ 0".into()));
        }
        if !(s_max > 0.0 && horizon > 0.0 && t0 >= 0.0) {
            return Err(Error::Parameter("concave supersolution needs S, T > 0 and t₀ ≥ 0".into()));
        }
        let speed = operator.n * envelope.sup();
        Ok(ConcaveSuper { envelope, speed, t0, horizon, s_max, operator })
    }

    pub fn envelope(&self) -> &ConcaveEnvelope {
        &self.envelope
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.horizon)
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let (v, d, dd) = self.envelope.eval(s + self.speed * (t - self.t0));
        Jet { value: v, ds: d, dss: dd, dt: self.speed * d }
    }
}

/// The subsolution `w̲ = φ̲(ψ(s,t))` for the traveling profile `ψ` with
/// `a₀ = φ̲(0)`.
#[derive(Debug, Clone)]
pub struct ConvexSub {
    envelope: ConvexEnvelope,
    profile: TravelingProfile,
}

impl ConvexSub {
    /// `s₀` is capped by the envelope's right end so that `ψ` stays inside it.
    pub fn new(
        envelope: ConvexEnvelope,
        n: u32,
        mu: f64,
        tau: f64,
        t0: f64,
        s_max: f64,
        s0_override: Option<f64>,
    ) -> Result<Self> {
        if envelope.lo() != 0.0 || !(envelope.base() > 0.0) {
            return Err(Error::Hypothesis("convex subsolution needs a = 0 and φ(0) > 0".into()));
        }
        let cap = s0_override.map_or(envelope.hi(), |o| o.min(envelope.hi()));
        let profile = TravelingProfile::new(n, mu, envelope.base(), tau, t0, s_max, Some(cap))?;
        Ok(ConvexSub { envelope, profile })
    }

    pub fn envelope(&self) -> &ConvexEnvelope {
        &self.envelope
    }

    pub fn profile(&self) -> &TravelingProfile {
        &self.profile
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        let p = self.profile.jet(s, t);
        let (v, d, dd) = self.envelope.eval(p.value);
        Jet { value: v, ds: d * p.ds, dss: dd * p.ds * p.ds + d * p.dss, dt: d * p.dt }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> MonotoneProfile {
        MonotoneProfile::from_fn(0.0, 1.0, |x| x, |_| 1.0).unwrap()
    }

    fn square() -> MonotoneProfile {
        MonotoneProfile::from_fn(0.0, 1.0, |x| x * x, |x| 2.0 * x).unwrap()
    }

    #[test]
    fn bridge_hits_both_levels() {
        for (from, to) in [(0.1, 0.9), (0.1, 0.2), (1e-3, 5.0)] {
            let b = Bridge::new(0.5, 1.0, from, to);
            let (_, lo, d_lo) = b.eval(0.5);
            let (_, hi, d_hi) = b.eval(1.0);
            assert!((lo - from).abs() < 1e-15 && (hi - to).abs() < 1e-14, "{hi} vs {to}");
            assert!((d_lo - 1.0).abs() < 1e-15 && (d_hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convex_envelope_of_the_identity() {
        let e = ConvexEnvelope::new(&identity(), 1.0).unwrap();
        assert_eq!(e.value(0.0), 0.0);
        assert!(e.value(1.0) <= 1.0);
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            let (v, d, dd) = e.eval(x);
            assert!(v < x && d > 0.0 && dd > 0.0, "x = {x}");
        }
    }

    #[test]
    fn convex_envelope_respects_eta() {
        let e = ConvexEnvelope::new(&square(), 0.1).unwrap();
        assert!(e.value(1.0) <= 0.1);
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            assert!(e.value(x) < x * x);
        }
    }

    #[test]
    fn convex_envelope_is_c1_across_knots() {
        let e = ConvexEnvelope::new(&square(), 0.5).unwrap();
        for &k in &e.knots()[..10] {
            let h = 1e-9 * k;
            let (vl, dl, _) = e.eval(k - h);
            let (vr, dr, _) = e.eval(k + h);
            assert!((vl - vr).abs() < 1e-8 * vr.abs().max(1e-12) + 2.0 * h * dr);
            assert!((dl - dr).abs() < 1e-6 * dr);
        }
    }

    #[test]
    fn rejects_decreasing_profiles() {
        let down = MonotoneProfile::from_fn(0.0, 1.0, |x| 1.0 - x, |_| -1.0).unwrap();
        assert!(matches!(ConvexEnvelope::new(&down, 1.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn concave_envelope_of_the_identity() {
        let e = ConcaveEnvelope::new(&identity()).unwrap();
        assert!(e.sup().is_finite());
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            let (v, d, dd) = e.eval(x);
            assert!(v > x && d > 0.0 && dd < 0.0, "x = {x}: {v} {d} {dd}");
            assert!(v < e.sup());
        }
    }

    #[test]
    fn concave_tail_junction() {
        let e = ConcaveEnvelope::new(&square()).unwrap();
        let (c1, c2, c3) = e.tail();
        let x0 = e.xi0();
        let (v, d, dd) = e.eval(x0 + 1e-300);
        assert!((v - c1).abs() < 1e-14 && (d - c2).abs() < 1e-12 * c2 && (dd + c3).abs() < 1e-12 * c3);
        let (vl, dl, ddl) = e.eval(x0);
        assert!((vl - c1).abs() < 1e-12 && (dl - c2).abs() < 1e-9 * c2 && (ddl + c3).abs() < 1e-9 * c3);
        assert!((e.value(1e6) - e.sup()).abs() < 1e-12 * e.sup());
    }

    #[test]
    fn flat_profile_is_lifted() {
        let flat = MonotoneProfile::from_fn(0.0, 1.0, |x: f64| (x - 0.5).max(0.0).powi(2), |x: f64| 2.0 * (x - 0.5).max(0.0))
            .unwrap();
        let e = ConcaveEnvelope::new(&flat).unwrap();
        assert!(e.lifted());
        for i in 1..=200 {
            let x = i as f64 / 200.0;
            assert!(e.value(x) > flat.value(x));
        }
    }

    #[test]
    fn samples_give_a_profile() {
        let x: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 + v.sqrt()).collect();
        let p = MonotoneProfile::from_samples(x, y).unwrap();
        assert!((p.value(0.0) - 0.5).abs() < 1e-15);
        assert!(ConcaveEnvelope::new(&p).is_ok());
    }
}

//! Problem parameters, initial-data families and the density ↔ mass transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::numerics::interp::Pchip;
use crate::numerics::quad;
use crate::{Error, Result};

/// Surface area `ω_n = n·|B₁|` of the unit sphere in `ℝⁿ`.
///
/// Uses `|B₁| = π^{n/2} / Γ(n/2 + 1)` through the functional equation
/// `ω_{n+2} = 2π ω_n / n`, which keeps `ω₃ = 4π` exact in floating point.
pub fn unit_sphere_area(n: u32) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    let mut omega = if n % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

/// `μ = m·n / (ω_n Rⁿ)`.
pub fn derive_mu(n: u32, radius: f64, mass: f64) -> Result<f64> {
    Ok(ProblemParams::new(n, radius, mass)?.mu())
}

/// Dimension, ball radius and total mass. Everything else is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    n: u32,
    radius: f64,
    mass: f64,
}

impl ProblemParams {
    pub fn new(n: u32, radius: f64, mass: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension n must be ≥ 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        Ok(ProblemParams { n, radius, mass })
    }

    /// Parameters with `m/ω_n = 1` on the unit ball.
    pub fn unit(n: u32) -> Self {
        ProblemParams::new(n, 1.0, unit_sphere_area(n)).expect("valid")
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        unit_sphere_area(self.n)
    }

    /// Right endpoint `S = Rⁿ` of the mass coordinate.
    pub fn s_max(&self) -> f64 {
        // Repeated products, not `powi`: `powi` may be folded differently at
        // different call sites, and `S` must be bit-identical everywhere.
        (0..self.n).fold(1.0, |acc, _| acc * self.radius)
    }

    /// Boundary value `m/ω_n` of the mass function.
    pub fn mass_cap(&self) -> f64 {
        self.mass / self.omega()
    }

    pub fn mu(&self) -> f64 {
        self.mass_cap() * self.nf() / self.s_max()
    }

    /// Exponent `2 − 2/n` of the degenerate diffusion coefficient.
    pub fn diffusion_exponent(&self) -> f64 {
        2.0 - 2.0 / self.nf()
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How an initial mass profile was specified.
#[derive(Clone)]
pub enum InitialKind {
    /// Radial density samples `(r, u0(r))`, linearly interpolated.
    TabulatedDensity(Vec<(f64, f64)>),
    /// Mass-function samples `(s, w0(s))`, monotone-cubic interpolated.
    TabulatedMass(Vec<(f64, f64)>),
    /// `max{c s²/(s^{2−γ}+δ), (m/ω_n) s/S}`.
    CollapseFamily { c: f64, gamma: f64, delta: f64 },
    /// Uniform density: `w0(s) = (m/ω_n) s/S`.
    Linear,
    /// Caller-supplied mass profile, rescaled to meet the boundary value.
    Custom(Profile),
}

impl fmt::Debug for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialKind::TabulatedDensity(v) => write!(f, "TabulatedDensity({} samples)", v.len()),
            InitialKind::TabulatedMass(v) => write!(f, "TabulatedMass({} samples)", v.len()),
            InitialKind::CollapseFamily { c, gamma, delta } => {
                write!(f, "CollapseFamily {{ c: {c}, gamma: {gamma}, delta: {delta} }}")
            }
            InitialKind::Linear => write!(f, "Linear"),
            InitialKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A validated initial mass function `w0` on `[0, S]`.
///
/// Construction checks monotonicity on a probe grid, `w0(0) = 0`, and makes
/// `w0(S) = m/ω_n` exact by multiplicative renormalization.
#[derive(Clone)]
pub struct InitialData {
    kind: InitialKind,
    params: ProblemParams,
    profile: Profile,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData").field("kind", &self.kind).field("params", &self.params).finish()
    }
}

const PROBES: usize = 10_000;

impl InitialData {
    pub fn new(kind: InitialKind, params: ProblemParams) -> Result<Self> {
        let cap = params.mass_cap();
        let s_max = params.s_max();
        let raw: Profile = match &kind {
            InitialKind::Linear => Arc::new(move |s: f64| cap * s / s_max),
            InitialKind::CollapseFamily { c, gamma, delta } => {
                family_collapse_lower(*c, *gamma, *delta, &params)?
            }
            InitialKind::TabulatedDensity(samples) => {
                let u0 = tabulated_density(samples)?;
                accumulate_initial(u0, &params)?
            }
            InitialKind::TabulatedMass(samples) => {
                if samples.len() < 2 {
                    return Err(Error::Domain("need at least two mass samples".into()));
                }
                let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Domain("mass samples must have increasing s".into()));
                }
                let p = Pchip::new(x, y);
                Arc::new(move |s: f64| p.eval(s))
            }
            InitialKind::Custom(f) => f.clone(),
        };
        let end = raw(s_max);
        if !(end > 0.0) {
            return Err(Error::Domain(format!("profile vanishes at S (w0(S) = {end})")));
        }
        let scale = cap / end;
        let profile: Profile = Arc::new(move |s: f64| {
            if s >= s_max {
                cap
            } else if s <= 0.0 {
                0.0
            } else {
                scale * raw(s)
            }
        });
        let data = InitialData { kind, params, profile };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        let s_max = self.params.s_max();
        let cap = self.params.mass_cap();
        let at_zero = self.eval_raw_at_zero();
        if at_zero.abs() > 1e-12 * cap {
            return Err(Error::Domain(format!("w0(0) = {at_zero:e} ≠ 0")));
        }
        let mut prev = 0.0;
        for i in 1..=PROBES {
            let s = s_max * i as f64 / PROBES as f64;
            let v = self.w0(s);
            if !v.is_finite() || v < prev - 1e-12 * cap {
                return Err(Error::Domain(format!("w0 not nondecreasing near s = {s:e}")));
            }
            prev = v;
        }
        Ok(())
    }

    fn eval_raw_at_zero(&self) -> f64 {
        (self.profile)(self.params.s_max() * 1e-300)
    }

    pub fn kind(&self) -> &InitialKind {
        &self.kind
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn w0(&self, s: f64) -> f64 {
        (self.profile)(s)
    }

    /// Samples `w0` at the given nodes.
    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&s| self.w0(s)).collect()
    }

    /// The capped datum `min{s/ε, w0(s)}` of the regularized problem.
    pub fn capped(&self, eps: f64) -> Result<InitialData> {
        let limit = self.params.s_max() / self.params.mass_cap();
        if !(eps > 0.0 && eps < limit) {
            return Err(Error::Domain(format!("ε = {eps} outside (0, {limit})")));
        }
        let base = self.profile.clone();
        Ok(InitialData {
            kind: self.kind.clone(),
            params: self.params,
            profile: Arc::new(move |s: f64| cap_initial(|x| base(x), eps, s)),
        })
    }
}

/// `min{s/ε, w0(s)}`.
pub fn cap_initial<F: Fn(f64) -> f64>(w0: F, eps: f64, s: f64) -> f64 {
    (s / eps).min(w0(s))
}

/// Turns a radial density into its mass function by adaptive quadrature.
///
/// Fails if `ω_n w0(S)` misses `m` by more than `1e−6·m`; otherwise the
/// returned profile is exactly renormalized at `S`.
pub fn accumulate_initial<U>(u0: U, params: &ProblemParams) -> Result<Profile>
where
    U: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let n = params.n();
    let s_max = params.s_max();
    let cap = params.mass_cap();
    let tol = 1e-13 * cap.max(1.0);
    let integrand = move |r: f64| r.powi(n as i32 - 1) * u0(r);
    let total = quad::integrate(&integrand, 0.0, params.radius(), tol);
    if (params.omega() * total - params.mass()).abs() > 1e-6 * params.mass() {
        return Err(Error::MassMismatch { got: params.omega() * total, expected: params.mass() });
    }
    let scale = cap / total;
    let nf = params.nf();
    Ok(Arc::new(move |s: f64| {
        if s >= s_max {
            return cap;
        }
        if s <= 0.0 {
            return 0.0;
        }
        scale * quad::integrate(&integrand, 0.0, s.powf(1.0 / nf), tol)
    }))
}

fn tabulated_density(samples: &[(f64, f64)]) -> Result<impl Fn(f64) -> f64 + Send + Sync + 'static> {
    if samples.len() < 2 {
        return Err(Error::Domain("need at least two density samples".into()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) || samples.iter().any(|p| p.1 < 0.0) {
        return Err(Error::Domain("density samples must have increasing r and u ≥ 0".into()));
    }
    let table = samples.to_vec();
    Ok(move |r: f64| {
        let k = table.partition_point(|p| p.0 <= r);
        if k == 0 {
            table[0].1
        } else if k == table.len() {
            table[k - 1].1
        } else {
            let (r0, u0) = table[k - 1];
            let (r1, u1) = table[k];
            u0 + (u1 - u0) * (r - r0) / (r1 - r0)
        }
    })
}

/// The collapse-family lower profile `c s²/(s^{2−γ}+δ)`.
pub fn collapse_family_value(c: f64, gamma: f64, delta: f64, s: f64) -> f64 {
    c * s * s / (s.powf(2.0 - gamma) + delta)
}

/// Admissible initial datum dominating `c s²/(s^{2−γ}+δ)`.
///
/// The family is increasing in `s`, so its maximum with the uniform profile
/// `(m/ω_n) s/S` is nondecreasing, dominates the family and meets `m/ω_n` at
/// `S` whenever the family value at `S` does not exceed it.
pub fn family_collapse_lower(c: f64, gamma: f64, delta: f64, params: &ProblemParams) -> Result<Profile> {
    let upper = 1.0 - 2.0 / params.nf();
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::Parameter(format!("γ = {gamma} outside (0, {upper})")));
    }
    if !(c > 0.0 && delta > 0.0) {
        return Err(Error::Parameter("c and δ must be positive".into()));
    }
    let s_max = params.s_max();
    let cap = params.mass_cap();
    let end = collapse_family_value(c, gamma, delta, s_max);
    if end > cap {
        return Err(Error::Infeasible(format!(
            "family value {end} at S exceeds the boundary value {cap}"
        )));
    }
    Ok(Arc::new(move |s: f64| collapse_family_value(c, gamma, delta, s).max(cap * s / s_max)))
}

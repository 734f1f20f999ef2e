//! Closed-form sub- and supersolutions with their constant pipelines, and
//! the machinery that samples their differential inequalities.
//!
//! Every family evaluates a [`Jet`] (value, `∂_s`, `∂_ss`, `∂_t`) from
//! analytic formulas. [`residual`] plugs the jet into
//!
//! ```text
//! L[b] = b_t − (ν + n² s^{2−2/n}) b_ss − n·b·f(b_s) + μ s b_s
//! ```
//!
//! and a subsolution must give `L[b] ≤ 0`, a supersolution `L[b] ≥ 0`, up to
//! `1e−9` times the largest of the four terms at that probe.

pub mod compare;
pub mod envelope;
pub mod growth;
pub mod power;
pub mod static_sub;
pub mod traveling;
pub mod verify;

use serde::Serialize;

use crate::model::ProblemParams;
use crate::solver::Nonlinearity;
use crate::{Error, Result};

pub use compare::{compare_runs, OrderingReport};
pub use envelope::{ConcaveEnvelope, ConcaveSuper, ConvexEnvelope, ConvexSub, MonotoneProfile};
pub use growth::{LinearCap, LinearGrowth};
pub use power::PowerCollapse;
pub use static_sub::StaticSubsolution;
pub use traveling::TravelingProfile;

/// Relative slack of the sign contracts.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Probes closer than this to an exceptional point are rejected.
pub const EXCEPTIONAL_GAP: f64 = 1e-12;

/// Value and derivatives of a barrier at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub ds: f64,
    pub dss: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Sub,
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PowerCollapse,
    StaticPiecewise,
    TravelingProfile,
    LinearGrowthSuper,
    LinearCapSuper,
    ConcaveEnvelopeSuper,
    ConvexEnvelopeSub,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::PowerCollapse,
        Family::StaticPiecewise,
        Family::TravelingProfile,
        Family::LinearGrowthSuper,
        Family::LinearCapSuper,
        Family::ConcaveEnvelopeSuper,
        Family::ConvexEnvelopeSub,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::PowerCollapse => "power-collapse",
            Family::StaticPiecewise => "static-piecewise",
            Family::TravelingProfile => "traveling-profile",
            Family::LinearGrowthSuper => "linear-growth-super",
            Family::LinearCapSuper => "linear-cap-super",
            Family::ConcaveEnvelopeSuper => "concave-envelope-super",
            Family::ConvexEnvelopeSub => "convex-envelope-sub",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn sense(self) -> Sense {
        match self {
            Family::PowerCollapse | Family::StaticPiecewise | Family::TravelingProfile | Family::ConvexEnvelopeSub => {
                Sense::Sub
            }
            _ => Sense::Super,
        }
    }
}

/// The parabolic operator a contract refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator {
    pub n: f64,
    pub mu: f64,
    pub nu: f64,
    pub nonlinearity: Nonlinearity,
}

impl Operator {
    /// The limit operator `f = id`, `ν = 0`.
    pub fn limit(n: f64, mu: f64) -> Self {
        Operator { n, mu, nu: 0.0, nonlinearity: Nonlinearity::Identity }
    }

    pub fn for_params(params: &ProblemParams) -> Self {
        Operator::limit(params.nf(), params.mu())
    }

    /// `(L[b], scale)` at `s` for the given jet.
    pub fn apply(&self, s: f64, jet: &Jet) -> (f64, f64) {
        let diff = (self.nu + self.n * self.n * s.powf(2.0 - 2.0 / self.n)) * jet.dss;
        let flux = self.n * self.nonlinearity.flux(jet.value, jet.ds);
        let drift = self.mu * s * jet.ds;
        let r = jet.dt - diff - flux + drift;
        let scale = jet.dt.abs().max(diff.abs()).max(flux.abs()).max(drift.abs());
        (r, scale)
    }
}

/// A barrier from any family.
#[derive(Debug, Clone)]
pub enum Barrier {
    PowerCollapse(PowerCollapse),
    StaticPiecewise(StaticSubsolution),
    TravelingProfile(TravelingProfile),
    LinearGrowth(LinearGrowth),
    LinearCap(LinearCap),
    ConcaveEnvelope(ConcaveSuper),
    ConvexEnvelope(ConvexSub),
}

impl Barrier {
    pub fn family(&self) -> Family {
        match self {
            Barrier::PowerCollapse(_) => Family::PowerCollapse,
            Barrier::StaticPiecewise(_) => Family::StaticPiecewise,
            Barrier::TravelingProfile(_) => Family::TravelingProfile,
            Barrier::LinearGrowth(_) => Family::LinearGrowthSuper,
            Barrier::LinearCap(_) => Family::LinearCapSuper,
            Barrier::ConcaveEnvelope(_) => Family::ConcaveEnvelopeSuper,
            Barrier::ConvexEnvelope(_) => Family::ConvexEnvelopeSub,
        }
    }

    pub fn sense(&self) -> Sense {
        self.family().sense()
    }

    pub fn jet(&self, s: f64, t: f64) -> Jet {
        match self {
            Barrier::PowerCollapse(b) => b.jet(s, t),
            Barrier::StaticPiecewise(b) => b.jet(s),
            Barrier::TravelingProfile(b) => b.jet(s, t),
            Barrier::LinearGrowth(b) => b.jet(s, t),
            Barrier::LinearCap(b) => b.jet(s, t),
            Barrier::ConcaveEnvelope(b) => b.jet(s, t),
            Barrier::ConvexEnvelope(b) => b.jet(s, t),
        }
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.jet(s, t).value
    }

    /// Points of `N(t)` where second derivatives may jump.
    pub fn exceptional_points(&self, t: f64) -> Vec<f64> {
        match self {
            Barrier::StaticPiecewise(b) => b.junctions().to_vec(),
            Barrier::TravelingProfile(b) => b.exceptional_point(t).into_iter().collect(),
            Barrier::ConvexEnvelope(b) => b.profile().exceptional_point(t).into_iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Spatial interval `(s_lo, s_hi]` on which the contract is stated.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Barrier::PowerCollapse(b) => (0.0, b.s_max()),
            Barrier::StaticPiecewise(b) => (0.0, b.s_max()),
            Barrier::TravelingProfile(b) => (0.0, b.s0()),
            Barrier::LinearGrowth(b) => (0.0, b.s_max()),
            Barrier::LinearCap(b) => (0.0, b.s_max()),
            Barrier::ConcaveEnvelope(b) => (0.0, b.s_max()),
            Barrier::ConvexEnvelope(b) => (0.0, b.profile().s0()),
        }
    }

    /// Time window `[t_lo, t_hi)` on which the contract is stated.
    pub fn window(&self) -> (f64, f64) {
        match self {
            Barrier::PowerCollapse(b) => (0.0, b.lifetime()),
            Barrier::StaticPiecewise(_) => (0.0, f64::INFINITY),
            Barrier::TravelingProfile(b) => b.window(),
            Barrier::LinearGrowth(b) => (0.0, b.horizon()),
            Barrier::LinearCap(b) => (0.0, b.horizon()),
            Barrier::ConcaveEnvelope(b) => b.window(),
            Barrier::ConvexEnvelope(b) => b.profile().window(),
        }
    }

    /// The operator the family's inequality is proved for.
    pub fn operator(&self) -> Operator {
        match self {
            Barrier::PowerCollapse(b) => Operator::limit(b.n(), b.mu()),
            Barrier::StaticPiecewise(b) => Operator::for_params(b.params()),
            Barrier::TravelingProfile(b) => Operator {
                nonlinearity: Nonlinearity::Frozen { a0: b.a0() },
                ..Operator::limit(b.n(), b.mu())
            },
            Barrier::LinearGrowth(b) => b.operator(),
            Barrier::LinearCap(b) => b.operator(),
            Barrier::ConcaveEnvelope(b) => b.operator(),
            Barrier::ConvexEnvelope(b) => Operator::limit(b.profile().n(), b.profile().mu()),
        }
    }
}

/// One probe of [`residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub s: f64,
    pub t: f64,
    pub residual: f64,
    pub scale: f64,
}

impl ResidualSample {
    /// Signed breach of the contract relative to the probe scale: positive
    /// means the inequality fails. Probes whose terms are all subnormal carry
    /// too few significant bits for a relative test and count as zero.
    pub fn breach(&self, sense: Sense) -> f64 {
        let r = if self.scale >= f64::MIN_POSITIVE { self.residual / self.scale } else { 0.0 };
        match sense {
            Sense::Sub => r,
            Sense::Super => -r,
        }
    }
}

/// Evaluates `L[b]` at every probe `(s, t)`.
pub fn residual(barrier: &Barrier, op: &Operator, probes: &[(f64, f64)]) -> Result<Vec<ResidualSample>> {
    probes
        .iter()
        .map(|&(s, t)| {
            if barrier.exceptional_points(t).iter().any(|&p| (s - p).abs() <= EXCEPTIONAL_GAP * p.abs().max(1.0)) {
                return Err(Error::ExceptionalPoint { s, t });
            }
            let (r, scale) = op.apply(s, &barrier.jet(s, t));
            Ok(ResidualSample { s, t, residual: r, scale })
        })
        .collect()
}

/// Worst breach over a sample set together with where it happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Worst {
    pub breach: f64,
    pub s: f64,
    pub t: f64,
}

pub fn worst_breach(samples: &[ResidualSample], sense: Sense) -> Option<Worst> {
    samples
        .iter()
        .map(|p| Worst { breach: p.breach(sense), s: p.s, t: p.t })
        .max_by(|a, b| a.breach.total_cmp(&b.breach))
}

/// Fourth-order central differences of a barrier with step `h`, used to
/// cross-check the analytic jets.
pub fn fd_jet(barrier: &Barrier, s: f64, t: f64, h: f64) -> Jet {
    let f = |x: f64, y: f64| barrier.value(x, y);
    let ds = (-f(s + 2.0 * h, t) + 8.0 * f(s + h, t) - 8.0 * f(s - h, t) + f(s - 2.0 * h, t)) / (12.0 * h);
    let dss = (-f(s + 2.0 * h, t) + 16.0 * f(s + h, t) - 30.0 * f(s, t) + 16.0 * f(s - h, t) - f(s - 2.0 * h, t))
        / (12.0 * h * h);
    let dt = (-f(s, t + 2.0 * h) + 8.0 * f(s, t + h) - 8.0 * f(s, t - h) + f(s, t - 2.0 * h)) / (12.0 * h);
    Jet { value: f(s, t), ds, dss, dt }
}

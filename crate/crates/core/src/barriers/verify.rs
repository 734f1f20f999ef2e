//! Seeded random sweeps over every family: draw valid parameters, build the
//! barrier, sample its residual and collect the worst breach.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::model::{unit_sphere_area, ProblemParams};
use crate::solver::Nonlinearity;
use crate::Result;

use super::{
    residual, worst_breach, Barrier, ConcaveEnvelope, ConcaveSuper, ConvexEnvelope, ConvexSub, Family, LinearCap,
    LinearGrowth, MonotoneProfile, Operator, PowerCollapse, Sense, StaticSubsolution, TravelingProfile,
    EXCEPTIONAL_GAP, RESIDUAL_TOL,
};

/// Largest relative value or slope jump tolerated at static junctions.
pub const JUNCTION_TOL: f64 = 1e-10;

/// Draws that fail to construct are redrawn up to this many times.
const MAX_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub draws: usize,
    pub probes: usize,
    pub families: Vec<Family>,
    /// Multiplies the power-collapse rate `C` (falsification runs use < 1).
    pub power_rate_factor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, draws: 200, probes: 10_000, families: Family::ALL.to_vec(), power_rate_factor: 1.0 }
    }
}

/// The draw with the largest breach.
#[derive(Debug, Clone, Serialize)]
pub struct WorstDraw {
    pub draw: usize,
    pub breach: f64,
    pub s: f64,
    pub t: f64,
    pub constants: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub family: &'static str,
    pub sense: Sense,
    pub draws: usize,
    pub probes: usize,
    /// Constructions rejected and redrawn.
    pub redraws: usize,
    /// Draws whose worst breach exceeds the tolerance.
    pub failures: usize,
    pub worst: Option<WorstDraw>,
    /// Largest relative junction jump over all draws (static family only).
    pub junction_defect: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub seed: u64,
    pub tolerance: f64,
    pub junction_tolerance: f64,
    pub power_rate_factor: f64,
    pub families: Vec<FamilyReport>,
    pub passed: bool,
}

struct DrawOutcome {
    breach: f64,
    s: f64,
    t: f64,
    junction: Option<f64>,
    redraws: usize,
    constants: Value,
}

pub fn verify_barriers(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let families = cfg
        .families
        .iter()
        .map(|&f| verify_family(f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let passed = families.iter().all(|f| f.passed);
    Ok(VerifyReport {
        schema: 1,
        seed: cfg.seed,
        tolerance: RESIDUAL_TOL,
        junction_tolerance: JUNCTION_TOL,
        power_rate_factor: cfg.power_rate_factor,
        families,
        passed,
    })
}

fn stream(cfg: &VerifyConfig, family: Family, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let index = Family::ALL.iter().position(|&f| f == family).unwrap() as u64;
    rng.set_stream((index << 32) | draw as u64);
    rng
}

pub fn verify_family(family: Family, cfg: &VerifyConfig) -> Result<FamilyReport> {
    let outcomes = (0..cfg.draws)
        .into_par_iter()
        .map(|k| run_draw(family, cfg, &mut stream(cfg, family, k)))
        .collect::<Result<Vec<_>>>()?;
    let sense = family.sense();
    let failures = outcomes.iter().filter(|o| o.breach > RESIDUAL_TOL).count();
    let junction_defect = outcomes.iter().filter_map(|o| o.junction).reduce(f64::max);
    let worst = outcomes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.breach.total_cmp(&b.1.breach))
        .map(|(k, o)| WorstDraw { draw: k, breach: o.breach, s: o.s, t: o.t, constants: o.constants.clone() });
    let passed = failures == 0 && junction_defect.is_none_or(|d| d < JUNCTION_TOL);
    Ok(FamilyReport {
        family: family.name(),
        sense,
        draws: cfg.draws,
        probes: cfg.probes,
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
        failures,
        worst,
        junction_defect,
        passed,
    })
}

/// Rebuilds draw `index` of a sweep, together with the number of redraws it took.
pub fn draw_barrier(family: Family, cfg: &VerifyConfig, index: usize) -> Result<(Barrier, usize)> {
    build(family, cfg, &mut stream(cfg, family, index))
}

fn build(family: Family, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(Barrier, usize)> {
    let mut redraws = 0;
    loop {
        match draw(family, cfg, rng) {
            Ok(b) => return Ok((b, redraws)),
            Err(e) if redraws + 1 >= MAX_ATTEMPTS => return Err(e),
            Err(_) => redraws += 1,
        }
    }
}

fn run_draw(family: Family, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<DrawOutcome> {
    let (barrier, redraws) = build(family, cfg, rng)?;
    let probes = probe_set(&barrier, cfg.probes, rng);
    let samples = residual(&barrier, &barrier.operator(), &probes)?;
    let w = worst_breach(&samples, barrier.sense()).expect("probe set is not empty");
    let junction = match &barrier {
        Barrier::StaticPiecewise(b) => {
            Some(b.junction_defects().iter().map(|&(v, d)| v.max(d)).fold(0.0, f64::max))
        }
        _ => None,
    };
    Ok(DrawOutcome { breach: w.breach, s: w.s, t: w.t, junction, redraws, constants: constants(&barrier) })
}

/// Half uniform in `s`, half log-uniform down to `1e−8` of the domain, so
/// the degenerate end is well covered. Probes near `N(t)` are redrawn.
fn probe_set(barrier: &Barrier, count: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let (s_lo, s_hi) = barrier.domain();
    let (t_lo, t_hi) = barrier.window();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = if t_hi.is_finite() { rng.random_range(t_lo..t_hi) } else { t_lo };
        let s = if out.len() % 2 == 0 {
            s_hi - rng.random_range(0.0..1.0) * (s_hi - s_lo)
        } else {
            s_hi * 10f64.powf(-8.0 * rng.random_range(0.0..1.0))
        };
        if !(s > s_lo && s <= s_hi) || (barrier.family() == Family::PowerCollapse && t <= 0.0) {
            continue;
        }
        let near = |p: f64| (s - p).abs() <= 1e3 * EXCEPTIONAL_GAP * p.abs().max(1.0);
        if barrier.exceptional_points(t).into_iter().any(near) {
            continue;
        }
        out.push((s, t));
    }
    out
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> Result<ProblemParams> {
    let n = rng.random_range(3..=5u32);
    let s_max: f64 = rng.random_range(0.5..2.0);
    let cap = rng.random_range(0.5..3.0);
    ProblemParams::new(n, s_max.powf(1.0 / n as f64), cap * unit_sphere_area(n))
}

/// `f = id` or `f_ε`, with a random lift `ν`.
fn random_operator(rng: &mut ChaCha8Rng, n: f64, mu: f64) -> Operator {
    let nonlinearity = if rng.random_bool(0.5) {
        Nonlinearity::Identity
    } else {
        Nonlinearity::capped(log_uniform(rng, 1e-3, 1.0)).expect("positive ε")
    };
    let nu = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) };
    Operator { n, mu, nu, nonlinearity }
}

/// `φ = a₀ + Σ c_k g_k` with `g ∈ {ξ^p, tanh(λξ)}`, strictly increasing on `(0, b]`.
fn random_profile(rng: &mut ChaCha8Rng, a0: f64, b: f64) -> Result<MonotoneProfile> {
    let terms: Vec<(bool, f64, f64)> = (0..rng.random_range(1..=3))
        .map(|_| (rng.random_bool(0.5), rng.random_range(0.1..2.0), rng.random_range(0.3..2.0) * 5f64.powi(rng.random_range(0..=1))))
        .collect();
    let t2 = terms.clone();
    MonotoneProfile::from_fn(
        0.0,
        b,
        move |x| {
            a0 + terms
                .iter()
                .map(|&(power, c, p)| if power { c * x.max(0.0).powf(p) } else { c * (p * x).tanh() })
                .sum::<f64>()
        },
        move |x| {
            t2.iter()
                .map(|&(power, c, p)| {
                    if power {
                        c * p * x.max(0.0).powf(p - 1.0)
                    } else {
                        let ch = (p * x).cosh();
                        c * p / (ch * ch)
                    }
                })
                .sum::<f64>()
        },
    )
}

fn draw(family: Family, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Barrier> {
    Ok(match family {
        Family::PowerCollapse => {
            let n = rng.random_range(3..=5u32);
            let upper = 1.0 - 2.0 / n as f64;
            let gamma = upper * rng.random_range(0.05..0.95);
            let b = PowerCollapse::new(
                n,
                gamma,
                rng.random_range(0.0..10.0),
                rng.random_range(0.1..10.0),
                log_uniform(rng, 1e-6, 1.0),
                rng.random_range(0.5..2.0),
            )?;
            let b = if cfg.power_rate_factor != 1.0 { b.with_rate(cfg.power_rate_factor * b.rate()) } else { b };
            Barrier::PowerCollapse(b)
        }
        Family::StaticPiecewise => {
            let p = random_params(rng)?;
            let (s_max, cap) = (p.s_max(), p.mass_cap());
            let m0 = cap * rng.random_range(0.05..0.4);
            let m1 = rng.random_range(m0 + 0.1 * cap..0.9 * cap);
            Barrier::StaticPiecewise(StaticSubsolution::new(
                p,
                s_max * rng.random_range(0.05..0.3),
                s_max * rng.random_range(0.4..0.8),
                m0,
                m1,
            )?)
        }
        Family::TravelingProfile => Barrier::TravelingProfile(TravelingProfile::new(
            rng.random_range(3..=5u32),
            rng.random_range(0.1..10.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.01..2.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.5..2.0),
            None,
        )?),
        Family::LinearGrowthSuper => {
            let p = random_params(rng)?;
            let a = rng.random_range(0.1..5.0);
            let gamma = 1.0 - rng.random_range(0.0..1.0);
            let horizon = rng.random_range(0.1..1.0);
            let op = random_operator(rng, p.nf(), p.mu());
            Barrier::LinearGrowth(LinearGrowth::new(&p, a, gamma, horizon)?.with_operator(op))
        }
        Family::LinearCapSuper => {
            let n = rng.random_range(3..=5u32);
            let cap = LinearCap::new(n, log_uniform(rng, 1e-3, 2.0), rng.random_range(0.1..10.0))?;
            let horizon = rng.random_range(0.05..20.0) / cap.kappa();
            Barrier::LinearCap(
                cap.on(rng.random_range(0.5..2.0), horizon)
                    .with_mu(rng.random_range(0.0..10.0))
                    .with_nu(rng.random_range(0.0..1.0)),
            )
        }
        Family::ConcaveEnvelopeSuper => {
            let (a0, b) = (rng.random_range(0.0..2.0), rng.random_range(0.2..2.0));
            let phi = random_profile(rng, a0, b)?;
            let env = ConcaveEnvelope::new(&phi)?;
            let n = rng.random_range(3..=5u32) as f64;
            let mu = rng.random_range(0.0..10.0);
            let op = random_operator(rng, n, mu);
            Barrier::ConcaveEnvelope(ConcaveSuper::new(
                env,
                op,
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.1..2.0),
            )?)
        }
        Family::ConvexEnvelopeSub => {
            let (a0, b) = (rng.random_range(0.05..2.0), rng.random_range(0.05..1.0));
            let phi = random_profile(rng, a0, b)?;
            let eta = rng.random_range(0.01..1.0);
            let env = ConvexEnvelope::new(&phi, eta)?;
            Barrier::ConvexEnvelope(ConvexSub::new(
                env,
                rng.random_range(3..=5u32),
                rng.random_range(0.1..10.0),
                rng.random_range(0.01..2.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.5..2.0),
                None,
            )?)
        }
    })
}

/// The constants a family computed, for the report.
pub fn constants(barrier: &Barrier) -> Value {
    let to = |v: std::result::Result<Value, serde_json::Error>| v.unwrap_or(Value::Null);
    match barrier {
        Barrier::PowerCollapse(b) => to(serde_json::to_value(b)),
        Barrier::StaticPiecewise(b) => {
            let (s0, s1, m0, m1) = b.anchors();
            json!({ "s0": s0, "s1": s1, "M0": m0, "M1": m1, "pipeline": to(serde_json::to_value(b.constants())) })
        }
        Barrier::TravelingProfile(b) => to(serde_json::to_value(b)),
        Barrier::LinearGrowth(b) => json!({
            "a": b.a(),
            "gamma": b.gamma(),
            "horizon": b.horizon(),
            "y_horizon": b.y(b.horizon()),
            "onset_constant": b.onset_constant(b.horizon()),
            "ode_steps": b.ode_steps(),
        }),
        Barrier::LinearCap(b) => to(serde_json::to_value(b)),
        Barrier::ConcaveEnvelope(b) => {
            let e = b.envelope();
            let (c1, c2, c3) = e.tail();
            json!({
                "a0": e.base(),
                "b": e.hi(),
                "xi0": e.xi0(),
                "c1": c1,
                "c2": c2,
                "c3": c3,
                "sup": e.sup(),
                "speed": b.speed(),
                "lifted": e.lifted(),
            })
        }
        Barrier::ConvexEnvelope(b) => {
            let (e, p) = (b.envelope(), b.profile());
            json!({
                "a0": e.base(),
                "b": e.hi(),
                "levels": e.knots().len(),
                "eta1": e.etas()[0],
                "s0": p.s0(),
                "speed": p.speed(),
                "lifetime": p.lifetime(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(families: Vec<Family>) -> VerifyConfig {
        VerifyConfig { seed: 7, draws: 6, probes: 400, families, power_rate_factor: 1.0 }
    }

    #[test]
    fn small_sweep_passes_every_family() {
        let rep = verify_barriers(&small(Family::ALL.to_vec())).unwrap();
        for f in &rep.families {
            assert!(f.passed, "{}: {:?}", f.family, f.worst);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small(vec![Family::StaticPiecewise, Family::ConvexEnvelopeSub]);
        let a = serde_json::to_string(&verify_barriers(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_barriers(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn a_tiny_rate_is_caught_with_its_location() {
        let cfg = VerifyConfig { power_rate_factor: 1e-7, draws: 20, ..small(vec![Family::PowerCollapse]) };
        let rep = verify_barriers(&cfg).unwrap();
        let f = &rep.families[0];
        assert!(!f.passed && f.failures > 0);
        let w = f.worst.as_ref().unwrap();
        assert!(w.breach > RESIDUAL_TOL && w.s > 0.0 && w.t > 0.0);
    }

    #[test]
    fn empty_family_list_gives_an_empty_report() {
        let rep = verify_barriers(&small(Vec::new())).unwrap();
        assert!(rep.families.is_empty() && rep.passed);
    }
}

//! Randomized brute-force checks of the inequalities behind Ψ and the width bound.
//!
//! Every check reports the worst margin (positive means slack) together with the
//! inputs that produced it, serialized so the case can be re-evaluated later.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::birkhoff::{psi_stages, reparam_identity, PsiConfig};
use crate::comparison::{cosq, cosq_zero_limit, quadruple_stats, residual_from_stats, Quadruple, QuadrupleStats};
use crate::curves::{random_polygon, sampled_energy, w12_of_samples, DiscreteClosedCurve};
use crate::error::{Error, Result};
use crate::geometry::{stream_rng, ModelSpace, Point, SpaceKind};

pub const ENERGY_CONVEXITY: &str = "energy_convexity";
pub const LEMMA34: &str = "lemma34";
pub const COSQ_BOUND: &str = "cosq_bound";
pub const COSQ_LIMIT: &str = "cosq_limit";
pub const REPARAM_IDENTITY: &str = "reparam_identity";
pub const WIRTINGER: &str = "wirtinger";
pub const POINCARE_COR47: &str = "poincare_cor47";

/// Check names with the margin each one may fall below zero by.
pub const TOLERANCES: [(&str, f64); 7] = [
    (ENERGY_CONVEXITY, 1e-6),
    (LEMMA34, 1e-12),
    (COSQ_BOUND, 1e-10),
    (COSQ_LIMIT, 0.0),
    (REPARAM_IDENTITY, 1e-8),
    (WIRTINGER, 1e-8),
    (POINCARE_COR47, 1e-8),
];

pub fn tolerance(name: &str) -> Result<f64> {
    TOLERANCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown check {name:?}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub worst_margin: f64,
    pub worst_case: Value,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl CheckResult {
    fn new(name: &str, samples: usize, worst_margin: f64, worst_case: Value, details: Option<Value>) -> Result<Self> {
        let passed = worst_margin >= -tolerance(name)?;
        Ok(CheckResult {
            name: name.to_string(),
            samples,
            worst_margin,
            worst_case,
            passed,
            details,
        })
    }
}

/// Summary CSV with columns `name,samples,worst_margin,passed`.
pub fn checks_csv(results: &[CheckResult]) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "samples", "worst_margin", "passed"])
        .map_err(io)?;
    for r in results {
        w.serialize((&r.name, r.samples, r.worst_margin, r.passed))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Radius of the sampling ball used by the curve checks.
///
/// `safe_radius` for `K > 0`; the flat cap is unusable as a ball, so Euclidean and
/// hyperbolic use 1 and the torus an eighth of its shorter period.
pub fn check_ball_radius(space: &ModelSpace) -> f64 {
    match space.kind() {
        SpaceKind::Sphere => space.safe_radius().rho(),
        SpaceKind::Euclidean | SpaceKind::Hyperbolic => 1.0,
        SpaceKind::FlatTorus => {
            let p = space.periods().unwrap_or([1.0, 1.0]);
            p[0].min(p[1]) / 8.0
        }
    }
}

/// Index of the smallest margin, NaN counting as `−∞`; ties go to the lowest index.
fn worst<T>(items: &[(f64, T)]) -> Option<usize> {
    let key = |m: f64| if m.is_nan() { f64::NEG_INFINITY } else { m };
    let mut best: Option<usize> = None;
    for (i, (m, _)) in items.iter().enumerate() {
        if best.is_none_or(|b| key(*m) < key(items[b].0)) {
            best = Some(i);
        }
    }
    best
}

fn to_value<T: Serialize>(case: &T) -> Result<Value> {
    serde_json::to_value(case).map_err(|e| Error::Io(e.to_string()))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    T::deserialize(v).map_err(|e| Error::Config(format!("bad worst case: {e}")))
}

/// Runs `eval` for every index and keeps the worst case.
fn batch<C, F>(name: &str, n: usize, details: Option<Value>, eval: F) -> Result<CheckResult>
where
    C: Serialize + Send,
    F: Fn(usize) -> Result<(f64, C)> + Sync,
{
    let items = (0..n).into_par_iter().map(&eval).collect::<Result<Vec<_>>>()?;
    match worst(&items) {
        Some(i) => CheckResult::new(name, n, items[i].0, to_value(&items[i].1)?, details),
        None => CheckResult::new(name, 0, 0.0, Value::Null, details),
    }
}

/// Recomputes the margin of a serialized worst case.
pub fn reevaluate(name: &str, case: &Value) -> Result<f64> {
    match name {
        ENERGY_CONVEXITY => from_value::<ConvexityCase>(case)?.margin(),
        LEMMA34 => from_value::<QuadCase>(case)?.lemma34_margin(),
        COSQ_BOUND => from_value::<QuadCase>(case)?.cosq_margin(),
        COSQ_LIMIT => Ok(from_value::<LimitCase>(case)?.evaluate()?.margin),
        REPARAM_IDENTITY => from_value::<ReparamCase>(case)?.margin(),
        WIRTINGER => wirtinger_margin(&from_value::<WirtingerCase>(case)?.f),
        POINCARE_COR47 => from_value::<ArcCase>(case)?.margin(),
        _ => Err(Error::Config(format!("unknown check {name:?}"))),
    }
}

/// Constant-speed random polygon inside `B_r(center)` with `m` breaks.
pub fn random_ball_curve<R: Rng + ?Sized>(
    space: &ModelSpace,
    center: &Point,
    r: f64,
    m: usize,
    rng: &mut R,
) -> Result<DiscreteClosedCurve> {
    let c = random_polygon(space, center, r, m, false, rng)?;
    if c.is_point() {
        return Ok(c);
    }
    c.reparametrize_constant_speed()
}

/// A random member of Λ for `cfg`: 3 to 16 breaks, chords inside `ρ` and speed inside the Lipschitz bound.
pub fn random_lambda_curve<R: Rng + ?Sized>(
    space: &ModelSpace,
    cfg: &PsiConfig,
    rng: &mut R,
) -> Result<DiscreteClosedCurve> {
    let m = rng.gen_range(3..=16);
    // chords are at most 2r, so the length is at most 2mr
    let r = (0.18 * PI * cfg.lipschitz / m as f64)
        .min(0.45 * cfg.rho.rho())
        .min(0.4 * space.sampling_guard());
    random_ball_curve(space, &space.origin(), r, m, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCase {
    pub u: DiscreteClosedCurve,
    pub v: DiscreteClosedCurve,
    pub n_samples: usize,
}

/// Both sides of `¼∫|∇d(u,v)|² ≤ Eᵘ + Eᵛ − 2Eʷ` plus the larger of `Eᵘ`, `Eᵛ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexitySides {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl ConvexityCase {
    /// Energies are difference quotients on the common sample grid; `w` is the pointwise midpoint.
    pub fn sides(&self) -> Result<ConvexitySides> {
        let space = *self.u.space();
        let us = self.u.sample(self.n_samples);
        let vs = self.v.sample(self.n_samples);
        let ws = us
            .iter()
            .zip(&vs)
            .map(|(p, q)| space.midpoint(p, q))
            .collect::<Result<Vec<_>>>()?;
        let d: Vec<f64> = us
            .iter()
            .zip(&vs)
            .map(|(p, q)| space.dist(p, q))
            .collect::<Result<_>>()?;
        let lhs = 0.25 * w12_of_samples(&d).deriv_part;
        let (eu, ev, ew) = (
            sampled_energy(&us, &space),
            sampled_energy(&vs, &space),
            sampled_energy(&ws, &space),
        );
        Ok(ConvexitySides {
            lhs,
            rhs: eu + ev - 2.0 * ew,
            scale: eu.max(ev),
        })
    }

    /// `(rhs − lhs) / max(Eᵘ, Eᵛ)`.
    pub fn margin(&self) -> Result<f64> {
        let s = self.sides()?;
        let m = s.rhs - s.lhs;
        Ok(if s.scale > 0.0 { m / s.scale } else { m })
    }
}

/// Random pairs of constant-speed curves with 16 breaks drawn from the check ball.
pub fn check_energy_convexity_batch(
    space: &ModelSpace,
    n_pairs: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CheckResult> {
    let r = check_ball_radius(space);
    let center = space.origin();
    let details = json!({ "space": space, "ball_radius": r, "relative_to": "max(E_u, E_v)" });
    batch(ENERGY_CONVEXITY, n_pairs, Some(details), |i| {
        let mut rng = stream_rng(seed, i as u64);
        let u = random_ball_curve(space, &center, r, 16, &mut rng)?;
        let v = random_ball_curve(space, &center, r, 16, &mut rng)?;
        let case = ConvexityCase { u, v, n_samples };
        Ok((case.margin()?, case))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadCase {
    pub k_curv: f64,
    pub quad: Quadruple,
}

impl QuadCase {
    pub fn lemma34_margin(&self) -> Result<f64> {
        let (lhs, rhs) = residual_from_stats(&quadruple_stats(&self.quad)?);
        Ok(rhs - lhs)
    }

    pub fn cosq_margin(&self) -> Result<f64> {
        Ok(1.0 - cosq(self.k_curv, &quadruple_stats(&self.quad)?)?.abs())
    }
}

fn random_quad<R: Rng + ?Sized>(space: &ModelSpace, cap: f64, rng: &mut R) -> Result<Quadruple> {
    let o = space.origin();
    loop {
        let mut p = [o; 4];
        for x in p.iter_mut() {
            *x = space.sample_in_ball(&o, cap, rng)?;
        }
        if let Ok(q) = Quadruple::new(*space, p[0], p[1], p[2], p[3]) {
            return Ok(q);
        }
    }
}

fn sphere_for(k_curv: f64) -> Result<ModelSpace> {
    if !(k_curv > 0.0) {
        return Err(Error::InvalidSpace(format!(
            "spherical checks need K > 0, got {k_curv}"
        )));
    }
    ModelSpace::sphere(k_curv)
}

fn lemma34_rung(
    space: &ModelSpace,
    k_curv: f64,
    cap: f64,
    n: usize,
    seed: u64,
    offset: u64,
) -> Result<Vec<(f64, QuadCase)>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, offset + i as u64);
            let case = QuadCase {
                k_curv,
                quad: random_quad(space, cap, &mut rng)?,
            };
            Ok((case.lemma34_margin()?, case))
        })
        .collect()
}

/// Radii probed above and below the requested cap, up to just short of a hemisphere.
pub fn cap_ladder(k_curv: f64, cap: f64) -> Vec<f64> {
    let top = 0.49 * PI / k_curv.sqrt();
    let mut out = Vec::new();
    let mut r = cap / 8.0;
    while r < top {
        out.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    out.push(top);
    out
}

/// Quadruples in the cap of radius `cap_radius` about the north pole of `S_K`.
///
/// `details` carries the cap sweep and the smallest probed radius with a violation.
pub fn check_lemma34_batch(k_curv: f64, cap_radius: f64, n_quads: usize, seed: u64) -> Result<CheckResult> {
    let space = sphere_for(k_curv)?;
    let tol = tolerance(LEMMA34)?;
    let items = lemma34_rung(&space, k_curv, cap_radius, n_quads, seed, 0)?;
    let per_rung = (n_quads / 20).max(1000);
    let mut sweep = Vec::new();
    let mut failure_radius = None;
    for (j, r) in cap_ladder(k_curv, cap_radius).into_iter().enumerate() {
        let rung = lemma34_rung(&space, k_curv, r, per_rung, seed, ((j as u64) + 1) << 40)?;
        let m = rung[worst(&rung).unwrap_or(0)].0;
        if failure_radius.is_none() && !(m >= -tol) {
            failure_radius = Some(r);
        }
        sweep.push(json!({ "radius": r, "worst_margin": m }));
    }
    let details =
        json!({ "cap_radius": cap_radius, "per_rung": per_rung, "sweep": sweep, "failure_radius": failure_radius });
    match worst(&items) {
        Some(i) => CheckResult::new(LEMMA34, n_quads, items[i].0, to_value(&items[i].1)?, Some(details)),
        None => CheckResult::new(LEMMA34, 0, 0.0, Value::Null, Some(details)),
    }
}

/// Smallest radius in the cap sweep of a lemma34 result that showed a violation.
pub fn failure_radius(result: &CheckResult) -> Option<f64> {
    result.details.as_ref()?.get("failure_radius")?.as_f64()
}

/// `1 − |cosq_K|` over quadruples in a cap of `S_K`.
pub fn check_cosq_bound_batch(k_curv: f64, cap_radius: f64, n_quads: usize, seed: u64) -> Result<CheckResult> {
    let space = sphere_for(k_curv)?;
    batch(COSQ_BOUND, n_quads, Some(json!({ "cap_radius": cap_radius })), |i| {
        let mut rng = stream_rng(seed, i as u64);
        let case = QuadCase {
            k_curv,
            quad: random_quad(&space, cap_radius, &mut rng)?,
        };
        Ok((case.cosq_margin()?, case))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCase {
    pub shape: QuadrupleStats,
    /// Values of `k = √K`.
    pub k_ladder: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitEvaluation {
    /// `|cosq_{k²} − lim_{K→0} cosq_K|` per rung.
    pub errors: Vec<f64>,
    /// Distance to the printed zero-curvature value, which does not vanish when the signs disagree.
    pub printed_gap: Vec<f64>,
    /// `max(e/k²) / min(e/k²)`.
    pub spread: f64,
    /// `errors` shrinks along a decreasing ladder.
    pub monotone: bool,
    /// `3 − spread`.
    pub margin: f64,
}

/// Errors at or below this are exact agreement.
const LIMIT_ZERO: f64 = 1e-14;

impl LimitCase {
    pub fn evaluate(&self) -> Result<LimitEvaluation> {
        if self.k_ladder.len() < 2 || self.k_ladder.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::Config("the k ladder needs at least two positive values".into()));
        }
        let limit = cosq_zero_limit(&self.shape)?;
        let printed = cosq(0.0, &self.shape)?;
        let mut errors = Vec::new();
        let mut printed_gap = Vec::new();
        for &k in &self.k_ladder {
            let v = cosq(k * k, &self.shape)?;
            errors.push((v - limit).abs());
            printed_gap.push((v - printed).abs());
        }
        let mut order: Vec<usize> = (0..errors.len()).collect();
        order.sort_by(|&a, &b| self.k_ladder[b].total_cmp(&self.k_ladder[a]));
        let monotone = order.windows(2).all(|w| errors[w[1]] <= errors[w[0]]);
        let spread = if errors.iter().all(|&e| e <= LIMIT_ZERO) {
            1.0
        } else if errors.iter().any(|&e| e <= LIMIT_ZERO) {
            f64::INFINITY
        } else {
            let r: Vec<f64> = errors.iter().zip(&self.k_ladder).map(|(e, k)| e / (k * k)).collect();
            r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / r.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        Ok(LimitEvaluation {
            errors,
            printed_gap,
            spread,
            monotone,
            margin: 3.0 - spread,
        })
    }
}

/// Quadratic decay of `cosq_K` towards its zero-curvature limit along `k_ladder` (`K = k²`).
pub fn check_cosq_limit(shape: QuadrupleStats, k_ladder: &[f64]) -> Result<CheckResult> {
    let case = LimitCase {
        shape,
        k_ladder: k_ladder.to_vec(),
    };
    let ev = case.evaluate()?;
    let details = to_value(&ev)?;
    CheckResult::new(COSQ_LIMIT, k_ladder.len(), ev.margin, to_value(&case)?, Some(details))
}

/// Stats of the quadrilateral `A=(0,0), B=(1,0), C=(2,1), D=(0,1)`.
pub fn reference_limit_shape() -> Result<QuadrupleStats> {
    let q = Quadruple::new(
        ModelSpace::euclidean(),
        Point::xy(0.0, 0.0),
        Point::xy(0.0, 1.0),
        Point::xy(2.0, 1.0),
        Point::xy(1.0, 0.0),
    )?;
    quadruple_stats(&q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReparamCase {
    pub curve: DiscreteClosedCurve,
    pub cfg: PsiConfig,
}

impl ReparamCase {
    /// `−|lhs − rhs|` relative to the terms the right side subtracts.
    ///
    /// The right side is `2π·E(γ_e)/E(γ̃_e) − 2π`, so for nearly constant-speed
    /// input both sides are tiny and roundoff is on the scale of `2π·E(γ_e)/E(γ̃_e)`.
    pub fn margin(&self) -> Result<f64> {
        let stages = psi_stages(&self.curve, &self.cfg)?;
        let (lhs, rhs) = reparam_identity(&stages, &self.cfg);
        let e_tilde = stages.gamma_e_tilde.energy();
        let scale = if e_tilde > 0.0 {
            TAU * stages.gamma_e.energy() / e_tilde
        } else {
            0.0
        };
        Ok(-(lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(scale).max(1e-300))
    }
}

/// Single-curve form of the reparametrization identity check.
pub fn check_reparam_identity(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<CheckResult> {
    let case = ReparamCase {
        curve: curve.clone(),
        cfg: *cfg,
    };
    CheckResult::new(REPARAM_IDENTITY, 1, case.margin()?, to_value(&case)?, None)
}

pub fn check_reparam_identity_batch(
    space: &ModelSpace,
    cfg: &PsiConfig,
    n_curves: usize,
    seed: u64,
) -> Result<CheckResult> {
    batch(REPARAM_IDENTITY, n_curves, None, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let case = ReparamCase {
            curve: random_lambda_curve(space, cfg, &mut rng)?,
            cfg: *cfg,
        };
        Ok((case.margin()?, case))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirtingerCase {
    pub f: Vec<f64>,
}

/// `4∫(f′)² − ∫f²` for the piecewise-linear interpolant of `f` on `[0, 2π]`.
///
/// `f` holds `n + 1` values at `2πk/n` with `f(0) = f(2π) = 0`. Both integrals are
/// exact for the interpolant, which itself vanishes at the ends, so the margin
/// carries no quadrature bias.
pub fn wirtinger_margin(f: &[f64]) -> Result<f64> {
    if f.len() < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if f[0].abs() > 1e-12 * scale.max(1.0) || f[f.len() - 1].abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::Config("Wirtinger samples must vanish at both ends".into()));
    }
    let n = f.len() - 1;
    let h = TAU / n as f64;
    let mut l2 = 0.0;
    let mut d2 = 0.0;
    for k in 0..n {
        let (a, b) = (f[k], f[k + 1]);
        l2 += h * (a * a + a * b + b * b) / 3.0;
        d2 += (b - a) * (b - a) / h;
    }
    Ok(4.0 * d2 - l2)
}

pub fn check_wirtinger(f: &[f64]) -> Result<CheckResult> {
    let case = WirtingerCase { f: f.to_vec() };
    CheckResult::new(WIRTINGER, 1, wirtinger_margin(f)?, to_value(&case)?, None)
}

/// Samples of `g` at `2πk/n`, `k = 0..=n`, with the end values pinned to zero.
pub fn wirtinger_samples(n: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut f: Vec<f64> = (0..=n).map(|k| g(TAU * k as f64 / n as f64)).collect();
    f[0] = 0.0;
    f[n] = 0.0;
    f
}

/// The extremal `sin(t/2)` plus random sine series `Σ b_j sin(jt/2)`.
pub fn check_wirtinger_batch(n_functions: usize, n_samples: usize, seed: u64) -> Result<CheckResult> {
    batch(WIRTINGER, n_functions, None, |i| {
        let f = if i == 0 {
            wirtinger_samples(n_samples, |t| (t / 2.0).sin())
        } else {
            let mut rng = stream_rng(seed, i as u64);
            let terms = rng.gen_range(1..=8);
            let coef: Vec<f64> = (0..terms).map(|_| rng.gen_range(-1.0..1.0)).collect();
            wirtinger_samples(n_samples, |t| {
                coef.iter()
                    .enumerate()
                    .map(|(j, b)| b * ((j + 1) as f64 * t / 2.0).sin())
                    .sum()
            })
        };
        Ok((wirtinger_margin(&f)?, WirtingerCase { f }))
    })
}

/// A piecewise-geodesic arc on `[0, ℓ]`; `params` runs from `0` to `ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcCase {
    pub space: ModelSpace,
    pub breaks: Vec<Point>,
    pub params: Vec<f64>,
}

/// Simpson intervals for `∫d²(σ₁, σ₂)`.
const ARC_QUADRATURE: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSides {
    pub energy_arc: f64,
    pub energy_chord: f64,
    pub dist_sq: f64,
    pub constant: f64,
}

impl ArcCase {
    pub fn new(space: ModelSpace, breaks: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || breaks.len() != params.len() {
            return Err(Error::InvalidCurve(
                "an arc needs matching breaks and params, at least two".into(),
            ));
        }
        if params[0] != 0.0 || params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurve("arc params must start at 0 and increase".into()));
        }
        for p in &breaks {
            space.validate(p)?;
        }
        Ok(ArcCase { space, breaks, params })
    }

    pub fn interval(&self) -> f64 {
        self.params[self.params.len() - 1]
    }

    fn eval(&self, t: f64) -> Point {
        let j = match self.params.partition_point(|&p| p <= t) {
            0 => 0,
            k => (k - 1).min(self.params.len() - 2),
        };
        let lam = ((t - self.params[j]) / (self.params[j + 1] - self.params[j])).clamp(0.0, 1.0);
        self.space.interpolate_raw(&self.breaks[j], &self.breaks[j + 1], lam)
    }

    /// Energies of the arc and of the constant-speed chord, `∫d²` between them and `C = 4ℓ²/π²`.
    pub fn sides(&self) -> Result<ArcSides> {
        let s = &self.space;
        let ell = self.interval();
        let mut energy_arc = 0.0;
        for j in 0..self.breaks.len() - 1 {
            let d = s.dist(&self.breaks[j], &self.breaks[j + 1])?;
            energy_arc += d * d / (self.params[j + 1] - self.params[j]);
        }
        let (p, q) = (self.breaks[0], self.breaks[self.breaks.len() - 1]);
        let chord = s.dist(&p, &q)?;
        let h = ell / ARC_QUADRATURE as f64;
        let mut dist_sq = 0.0;
        for k in 0..=ARC_QUADRATURE {
            let t = k as f64 * h;
            let w = if k == 0 || k == ARC_QUADRATURE {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let d = s.dist_raw(&self.eval(t), &s.interpolate_raw(&p, &q, t / ell));
            dist_sq += w * d * d;
        }
        Ok(ArcSides {
            energy_arc,
            energy_chord: chord * chord / ell,
            dist_sq: dist_sq * h / 3.0,
            constant: 4.0 * ell * ell / (PI * PI),
        })
    }

    /// `C(E₁ − E₂) − ∫d²(σ₁, σ₂)`.
    pub fn margin(&self) -> Result<f64> {
        let s = self.sides()?;
        Ok(s.constant * (s.energy_arc - s.energy_chord) - s.dist_sq)
    }
}

/// Random arcs on `[0, 1]` with 1 to 8 segments of jittered widths, against the chord with the same ends.
pub fn check_poincare_cor47(space: &ModelSpace, n_curves: usize, seed: u64) -> Result<CheckResult> {
    let r = check_ball_radius(space);
    let center = space.origin();
    let details = json!({ "space": space, "ball_radius": r, "constant": "4 l^2 / pi^2", "distance": "L2 part" });
    batch(POINCARE_COR47, n_curves, Some(details), |i| {
        let mut rng = stream_rng(seed, i as u64);
        let segs = rng.gen_range(1..=8);
        let breaks = (0..=segs)
            .map(|_| space.sample_in_ball(&center, r, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let widths: Vec<f64> = (0..segs).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = widths.iter().sum();
        let mut params = vec![0.0];
        let mut acc = 0.0;
        for w in &widths[..segs - 1] {
            acc += w / total;
            params.push(acc);
        }
        params.push(1.0);
        let case = ArcCase::new(*space, breaks, params)?;
        Ok((case.margin()?, case))
    })
}

/// Sample counts for [`run_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub space: ModelSpace,
    pub l: usize,
    pub seed: u64,
    pub convexity_pairs: usize,
    pub convexity_samples: usize,
    pub lemma34_cap: f64,
    pub lemma34_quads: usize,
    pub cosq_cap: f64,
    pub cosq_quads: usize,
    pub k_ladder: Vec<f64>,
    pub reparam_curves: usize,
    pub wirtinger_functions: usize,
    pub wirtinger_samples: usize,
    pub poincare_curves: usize,
}

impl SuiteConfig {
    pub fn new(space: ModelSpace, l: usize, seed: u64) -> Self {
        let k = if space.curvature() > 0.0 {
            space.curvature()
        } else {
            1.0
        };
        SuiteConfig {
            space,
            l,
            seed,
            convexity_pairs: 10_000,
            convexity_samples: 512,
            lemma34_cap: PI / (32.0 * k.sqrt()),
            lemma34_quads: 100_000,
            cosq_cap: PI / (8.0 * k.sqrt()),
            cosq_quads: 100_000,
            k_ladder: vec![1e-1, 1e-2, 1e-3],
            reparam_curves: 1000,
            wirtinger_functions: 1000,
            wirtinger_samples: 1024,
            poincare_curves: 1000,
        }
    }

    /// Curvature of the sphere used by the quadruple checks.
    pub fn sphere_curvature(&self) -> f64 {
        if self.space.curvature() > 0.0 {
            self.space.curvature()
        } else {
            1.0
        }
    }
}

/// The seven checks in a fixed order, each with its own stream of seeds.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let k = cfg.sphere_curvature();
    let psi_cfg = PsiConfig::for_space(&cfg.space, cfg.l)?;
    let seed = |j: u64| cfg.seed.wrapping_add(j.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    Ok(vec![
        check_energy_convexity_batch(&cfg.space, cfg.convexity_pairs, cfg.convexity_samples, seed(1))?,
        check_lemma34_batch(k, cfg.lemma34_cap, cfg.lemma34_quads, seed(2))?,
        check_cosq_bound_batch(k, cfg.cosq_cap, cfg.cosq_quads, seed(3))?,
        check_cosq_limit(reference_limit_shape()?, &cfg.k_ladder)?,
        check_reparam_identity_batch(&cfg.space, &psi_cfg, cfg.reparam_curves, seed(5))?,
        check_wirtinger_batch(cfg.wirtinger_functions, cfg.wirtinger_samples, seed(6))?,
        check_poincare_cor47(&cfg.space, cfg.poincare_curves, seed(7))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sphere() -> ModelSpace {
        ModelSpace::sphere(1.0).unwrap()
    }

    fn spaces() -> Vec<ModelSpace> {
        vec![
            sphere(),
            ModelSpace::euclidean(),
            ModelSpace::hyperbolic(-1.0).unwrap(),
            ModelSpace::flat_torus(1.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn tolerance_table() {
        for (name, _) in TOLERANCES {
            assert!(tolerance(name).is_ok());
        }
        assert!(tolerance("nope").is_err());
    }

    #[test]
    fn convexity_equal_curves() {
        let s = sphere();
        let mut rng = stream_rng(3, 0);
        let u = random_ball_curve(&s, &s.origin(), 0.02, 16, &mut rng).unwrap();
        let case = ConvexityCase {
            u: u.clone(),
            v: u,
            n_samples: 512,
        };
        let sides = case.sides().unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert!(sides.rhs.abs() < 1e-15 * sides.scale);
    }

    #[test]
    fn convexity_euclidean_exact() {
        let r = check_energy_convexity_batch(&ModelSpace::euclidean(), 300, 256, 1).unwrap();
        assert!(r.passed && r.worst_margin > 0.0, "{}", r.worst_margin);
    }

    #[test]
    fn convexity_small_batches() {
        for s in spaces() {
            let r = check_energy_convexity_batch(&s, 200, 256, 2).unwrap();
            assert!(r.passed, "{:?} {}", s.kind(), r.worst_margin);
        }
    }

    #[test]
    fn cosq_bound_small_batch_and_collinear() {
        let r = check_cosq_bound_batch(1.0, PI / 8.0, 2000, 4).unwrap();
        assert!(r.passed, "{}", r.worst_margin);
        let e = ModelSpace::euclidean();
        let q = Quadruple::new(
            e,
            Point::xy(0.0, 0.0),
            Point::xy(3.0, 0.0),
            Point::xy(2.0, 0.0),
            Point::xy(1.0, 0.0),
        )
        .unwrap();
        let v = cosq(0.0, &quadruple_stats(&q).unwrap()).unwrap();
        assert_relative_eq!(v.abs(), 1.0, max_relative = 1e-12);
        // four points in order along one great circle
        let s = sphere();
        let g = |t: f64| Point::xyz(t.cos(), t.sin(), 0.0);
        let q = Quadruple::new(s, g(0.0), g(0.3), g(0.2), g(0.1)).unwrap();
        let c = QuadCase { k_curv: 1.0, quad: q };
        assert!(c.cosq_margin().unwrap().abs() < 1e-10);
    }

    #[test]
    fn lemma34_degenerate_and_sweep() {
        let s = sphere();
        let p = Point::xyz(1.0, 0.0, 0.0);
        let b = s.exp(&p, [0.01, 0.0]);
        let q = QuadCase {
            k_curv: 1.0,
            quad: Quadruple::new(s, p, p, b, b).unwrap(),
        };
        assert!(q.lemma34_margin().unwrap().abs() < 1e-18);
        let r = check_lemma34_batch(1.0, PI / 32.0, 2000, 9).unwrap();
        let fr = failure_radius(&r).unwrap();
        assert!(fr < PI / 2.0);
        let ladder = cap_ladder(1.0, PI / 32.0);
        assert!(ladder.windows(2).all(|w| w[1] > w[0]));
        assert!(ladder[0] < PI / 32.0 && *ladder.last().unwrap() < PI / 2.0);
    }

    #[test]
    fn cosq_limit_ladder() {
        let shape = reference_limit_shape().unwrap();
        let ev = LimitCase {
            shape,
            k_ladder: vec![1e-1, 1e-2],
        }
        .evaluate()
        .unwrap();
        let ratio = ev.errors[0] / ev.errors[1];
        assert!(ratio > 100.0 / 3.0 && ratio < 300.0, "{ratio}");
        assert!(ev.monotone);
        assert!(ev.printed_gap[1] > 1.0);
        let r = check_cosq_limit(shape, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!(r.passed, "{}", r.worst_margin);
    }

    #[test]
    fn reparam_cases() {
        let s = sphere();
        let cfg = PsiConfig::for_space(&s, 8).unwrap();
        let eq = crate::curves::latitude_circle(&s, 0.0, 128).unwrap();
        let r = check_reparam_identity(&eq, &cfg).unwrap();
        assert!(r.passed);
        for s in spaces() {
            let cfg = PsiConfig::for_space(&s, 4).unwrap();
            let r = check_reparam_identity_batch(&s, &cfg, 50, 8).unwrap();
            assert!(r.passed, "{:?} {}", s.kind(), r.worst_margin);
        }
    }

    #[test]
    fn wirtinger_examples() {
        let n = 1024;
        let ext = wirtinger_margin(&wirtinger_samples(n, |t| (t / 2.0).sin())).unwrap();
        assert!((0.0..1e-4).contains(&ext), "{ext}");
        assert_eq!(wirtinger_margin(&vec![0.0; n + 1]).unwrap(), 0.0);
        let m = wirtinger_margin(&wirtinger_samples(n, f64::sin)).unwrap();
        assert_relative_eq!(m, 3.0 * PI, max_relative = 1e-5);
        assert!(wirtinger_margin(&[1.0, 0.5, 0.0]).is_err());
        let r = check_wirtinger_batch(100, 256, 5).unwrap();
        assert!(r.passed && r.worst_margin >= 0.0);
    }

    #[test]
    fn poincare_examples() {
        let e = ModelSpace::euclidean();
        let m = 256;
        let breaks: Vec<Point> = (0..=m)
            .map(|k| {
                let a = PI - PI * k as f64 / m as f64;
                Point::xy(a.cos(), a.sin())
            })
            .collect();
        let params = (0..=m).map(|k| PI * k as f64 / m as f64).collect();
        let arc = ArcCase::new(e, breaks, params).unwrap();
        let s = arc.sides().unwrap();
        assert_relative_eq!(s.energy_chord, 4.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(s.energy_arc, PI, max_relative = 1e-4);
        assert!(arc.margin().unwrap() > 0.0);

        let straight = ArcCase::new(e, vec![Point::xy(0.0, 0.0), Point::xy(1.0, 1.0)], vec![0.0, 2.0]).unwrap();
        assert!(straight.margin().unwrap().abs() < 1e-15);
        for s in spaces() {
            let r = check_poincare_cor47(&s, 100, 6).unwrap();
            assert!(r.passed, "{:?} {}", s.kind(), r.worst_margin);
        }
    }

    #[test]
    fn worst_cases_reevaluate() {
        let s = sphere();
        let cfg = PsiConfig::for_space(&s, 4).unwrap();
        let results = vec![
            check_energy_convexity_batch(&s, 20, 128, 1).unwrap(),
            check_lemma34_batch(1.0, PI / 32.0, 50, 2).unwrap(),
            check_cosq_bound_batch(1.0, PI / 8.0, 50, 3).unwrap(),
            check_cosq_limit(reference_limit_shape().unwrap(), &[0.1, 0.01]).unwrap(),
            check_reparam_identity_batch(&s, &cfg, 10, 4).unwrap(),
            check_wirtinger_batch(10, 64, 5).unwrap(),
            check_poincare_cor47(&s, 10, 6).unwrap(),
        ];
        for r in &results {
            let text = serde_json::to_string(r).unwrap();
            let back: CheckResult = serde_json::from_str(&text).unwrap();
            let m = reevaluate(&back.name, &back.worst_case).unwrap();
            assert!(
                (m - r.worst_margin).abs() <= 1e-14 * r.worst_margin.abs().max(1.0),
                "{}",
                r.name
            );
        }
        let csv = checks_csv(&results).unwrap();
        assert!(csv.starts_with("name,samples,worst_margin,passed\n"));
        assert_eq!(csv.lines().count(), 8);
    }

    #[test]
    fn batches_are_deterministic() {
        let s = ModelSpace::hyperbolic(-1.0).unwrap();
        let a = check_energy_convexity_batch(&s, 64, 128, 11).unwrap();
        let b = check_energy_convexity_batch(&s, 64, 128, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

//! The Birkhoff shortening map Ψ and its iteration.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::curves::{DiscreteClosedCurve, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, SafeRadius};

/// Default partition parameter: `2L² = 128` points.
pub const DEFAULT_L: usize = 8;

/// Fraction of the unique-geodesic guard allowed for a replaced chord.
const GUARD_FRACTION: f64 = 0.45;

/// Parameters of Ψ: the partition `x_j = x₀ + jπ/L²`, `j = 0..2L²`, the
/// replacement radius and the Lipschitz bound of the class Λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiConfig {
    pub l: usize,
    pub rho: SafeRadius,
    pub basepoint: f64,
    pub lipschitz: f64,
    pub samples: usize,
}

impl PsiConfig {
    pub fn new(l: usize, rho: SafeRadius, basepoint: f64, lipschitz: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::Config("L must be positive".into()));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Config(format!(
                "Lipschitz bound must be positive, got {lipschitz}"
            )));
        }
        if !basepoint.is_finite() {
            return Err(Error::Config("basepoint must be finite".into()));
        }
        let step = PI / (l * l) as f64;
        // an even interval spans two steps; at speed `lipschitz` its chord must fit in rho
        if 2.0 * step * lipschitz > rho.rho() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "partition too coarse: 2π/L² · {lipschitz} exceeds rho = {}",
                rho.rho()
            )));
        }
        Ok(PsiConfig {
            l,
            rho,
            basepoint,
            lipschitz,
            samples: DEFAULT_SAMPLES,
        })
    }

    /// `rho = min(2π/L, 0.45·guard)` and the largest Lipschitz bound it admits.
    pub fn for_space(space: &ModelSpace, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Config("L must be positive".into()));
        }
        let rho = (TAU / l as f64).min(GUARD_FRACTION * space.injectivity_guard());
        let lipschitz = rho * (l * l) as f64 / TAU;
        Self::new(l, SafeRadius::new(rho)?, 0.0, lipschitz)
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        if samples < 64 {
            return Err(Error::Config(format!("need at least 64 samples, got {samples}")));
        }
        self.samples = samples;
        Ok(self)
    }

    pub fn with_basepoint(mut self, x0: f64) -> Self {
        self.basepoint = x0;
        self
    }

    /// Number of partition intervals, `2L²`.
    pub fn n_intervals(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn step(&self) -> f64 {
        PI / (self.l * self.l) as f64
    }

    /// `x_j = x₀ + jπ/L²`.
    pub fn partition_point(&self, j: usize) -> f64 {
        self.basepoint + j as f64 * self.step()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Geodesic replacement on the intervals `[x_{2j}, x_{2j+2}]` (even) or
/// `[x_{2j+1}, x_{2j+3}]` (odd).
///
/// Either family covers the circle, so the result is the polygon through the
/// images of the interval endpoints.
pub fn linear_replace(curve: &DiscreteClosedCurve, parity: Parity, cfg: &PsiConfig) -> Result<DiscreteClosedCurve> {
    curve.check_lambda(cfg.rho.rho(), cfg.lipschitz)?;
    let offset = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let half = cfg.l * cfg.l;
    let params: Vec<f64> = (0..half).map(|j| cfg.partition_point(2 * j + offset)).collect();
    let breaks: Vec<_> = params.iter().map(|&t| curve.eval(t)).collect();
    let space = curve.space();
    for j in 0..half {
        let chord = space.dist_raw(&breaks[j], &breaks[(j + 1) % half]);
        if chord > cfg.rho.rho() * (1.0 + 1e-12) {
            return Err(Error::PartitionTooCoarse {
                length: chord,
                rho: cfg.rho.rho(),
            });
        }
    }
    DiscreteClosedCurve::new(*space, breaks, params)
}

fn finish(poly: DiscreteClosedCurve, src: f64, dst: f64) -> Result<DiscreteClosedCurve> {
    if poly.is_point() {
        return DiscreteClosedCurve::point_curve(*poly.space(), poly.eval(src));
    }
    poly.reparametrize_anchored(src, dst)
}

/// Ψ: even replacement, odd replacement, then constant speed with the image of `x₀` kept at `x₀`.
pub fn psi(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<DiscreteClosedCurve> {
    let gamma_e = linear_replace(curve, Parity::Even, cfg)?;
    let gamma_o = linear_replace(&gamma_e, Parity::Odd, cfg)?;
    finish(gamma_o, cfg.basepoint, cfg.basepoint)
}

/// Intermediate curves of the four-stage construction of Ψ.
#[derive(Clone, Debug)]
pub struct PsiStages {
    /// A1: even replacement.
    pub gamma_e: DiscreteClosedCurve,
    /// B1: `gamma_e` at constant speed, image of `x₀` fixed.
    pub gamma_e_tilde: DiscreteClosedCurve,
    /// New positions `x̃_j` of the partition points, `j = 0..=2L²`.
    pub x_tilde: Vec<f64>,
    /// A2: replacement on the odd `x̃` intervals.
    pub gamma_o_tilde: DiscreteClosedCurve,
    /// B2: the output Ψ(γ).
    pub psi: DiscreteClosedCurve,
}

/// Ψ through A1 → B1 → A2 → B2.
pub fn psi_stages(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<PsiStages> {
    let gamma_e = linear_replace(curve, Parity::Even, cfg)?;
    let x0 = cfg.basepoint;
    let half = cfg.l * cfg.l;
    let space = *curve.space();

    let seg = gamma_e.segment_lengths();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        let p = DiscreteClosedCurve::point_curve(space, curve.eval(x0))?;
        let x_tilde = (0..=2 * half).map(|j| cfg.partition_point(j)).collect();
        return Ok(PsiStages {
            gamma_e,
            gamma_e_tilde: p.clone(),
            x_tilde,
            gamma_o_tilde: p.clone(),
            psi: p,
        });
    }
    let gamma_e_tilde = gamma_e.reparametrize_fixing(x0)?;

    // breaks of gamma_e sit at x_{2j}; P is linear on each segment
    let mut x_tilde = Vec::with_capacity(2 * half + 1);
    let mut cum = 0.0;
    for (j, &len) in seg.iter().enumerate() {
        let start = x0 + TAU * cum / total;
        cum += len;
        let end = if j + 1 == half {
            x0 + TAU
        } else {
            x0 + TAU * cum / total
        };
        x_tilde.push(start);
        x_tilde.push(0.5 * (start + end));
    }
    x_tilde.push(x0 + TAU);

    let mut breaks = Vec::with_capacity(half);
    let mut params: Vec<f64> = Vec::with_capacity(half);
    for j in 0..half {
        let t = x_tilde[2 * j + 1];
        if params.last().is_some_and(|&last| t <= last) {
            continue;
        }
        breaks.push(gamma_e_tilde.eval(t));
        params.push(t);
    }
    let gamma_o_tilde = DiscreteClosedCurve::new(space, breaks, params)?;
    let r_x0 = 0.5 * (x_tilde[2 * half - 1] - TAU + x_tilde[1]);
    let psi = finish(gamma_o_tilde.clone(), r_x0, x0)?;
    Ok(PsiStages {
        gamma_e,
        gamma_e_tilde,
        x_tilde,
        gamma_o_tilde,
        psi,
    })
}

/// Both sides of `∫(P′ − 1)² = 2π (E(γ_e) − E(γ̃_e)) / E(γ̃_e)` for the B1 stage.
pub fn reparam_identity(stages: &PsiStages, cfg: &PsiConfig) -> (f64, f64) {
    let dx = 2.0 * cfg.step();
    let half = cfg.l * cfg.l;
    let lhs: f64 = (0..half)
        .map(|j| {
            let slope = (stages.x_tilde[2 * j + 2] - stages.x_tilde[2 * j]) / dx;
            (slope - 1.0) * (slope - 1.0) * dx
        })
        .sum();
    let e_tilde = stages.gamma_e_tilde.energy();
    let rhs = if e_tilde == 0.0 {
        0.0
    } else {
        TAU * (stages.gamma_e.energy() - e_tilde) / e_tilde
    };
    (lhs, rhs)
}

/// `P(t)` for the piecewise-linear reparametrization of the B1 stage.
pub fn reparam_map(stages: &PsiStages, cfg: &PsiConfig, t: f64) -> f64 {
    let x0 = cfg.basepoint;
    let u = (t - x0).rem_euclid(TAU);
    let dx = 2.0 * cfg.step();
    let half = cfg.l * cfg.l;
    let j = ((u / dx).floor() as usize).min(half - 1);
    let frac = (u - j as f64 * dx) / dx;
    let a = stages.x_tilde[2 * j];
    let b = stages.x_tilde[2 * j + 2];
    a + frac * (b - a)
}

/// Sampled sides of `¼∫|∇d(γ̃_e∘P, γ̃_e)|² ≤ ½ L² ∫(P′−1)²`, the left side
/// restricted to grid cells where `t` and `P(t)` stay inside one segment of `γ̃_e`.
pub fn eq76_sides(stages: &PsiStages, cfg: &PsiConfig, n: usize) -> (f64, f64) {
    let space = stages.gamma_e.space();
    let h = TAU / n as f64;
    let x0 = cfg.basepoint;
    let tilde = &stages.gamma_e_tilde;
    let seg_of = |t: f64| tilde.locate(t).0;
    let mut lhs = 0.0;
    for k in 0..n {
        let t0 = x0 + h * k as f64;
        let t1 = t0 + h;
        let (p0, p1) = (reparam_map(stages, cfg, t0), reparam_map(stages, cfg, t1));
        let s = seg_of(t0);
        if seg_of(t1 - 1e-15) != s || seg_of(p0) != s || seg_of(p1 - 1e-15) != s {
            continue;
        }
        let f0 = space.dist_raw(&tilde.eval(p0), &tilde.eval(t0));
        let f1 = space.dist_raw(&tilde.eval(p1), &tilde.eval(t1));
        let d = (f1 - f0) / h;
        lhs += d * d * h;
    }
    let (int_p, _) = reparam_identity(stages, cfg);
    (0.25 * lhs, 0.5 * cfg.lipschitz * cfg.lipschitz * int_p)
}

/// `w12_dist(γ, Ψ(γ)).total`.
pub fn fixed_point_residual(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<f64> {
    let next = psi(curve, cfg)?;
    Ok(curve.w12_dist(&next, cfg.samples)?.total)
}

/// Membership tolerance for the set of closed geodesics.
pub fn geodesic_tolerance(length: f64) -> f64 {
    1e-8 * length.max(1.0)
}

pub fn is_closed_geodesic(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<bool> {
    Ok(fixed_point_residual(curve, cfg)? <= geodesic_tolerance(curve.length()))
}

/// `(w12²(γ, Ψγ), (Len²γ − Len²Ψγ) / Len²Ψγ)`.
pub fn phi_bound_estimate(curve: &DiscreteClosedCurve, cfg: &PsiConfig) -> Result<(f64, f64)> {
    let next = psi(curve, cfg)?;
    let post = next.length();
    if !(post > 0.0) {
        return Err(Error::ZeroLength);
    }
    let d = curve.w12_dist(&next, cfg.samples)?.total;
    let pre = curve.length();
    Ok((d * d, (pre * pre - post * post) / (post * post)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TightenStatus {
    Converged,
    MaxIters,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub length: f64,
    pub energy: f64,
    pub step_dist: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TighteningReport {
    pub records: Vec<IterRecord>,
    pub status: TightenStatus,
}

impl TighteningReport {
    /// CSV with columns `iter,length,energy,step_dist,residual`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["iter", "length", "energy", "step_dist", "residual"])
            .map_err(io)?;
        for r in &self.records {
            w.serialize((r.iter, r.length, r.energy, r.step_dist, r.residual))
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.length).collect()
    }

    pub fn final_record(&self) -> Option<&IterRecord> {
        self.records.last()
    }
}

/// Iterates Ψ until the relative length drop of one step falls below `tol`.
///
/// Record `k` describes the `k`-th iterate `Ψᵏ(γ)`: its length and energy,
/// its distance to the previous iterate, and its fixed-point residual.
pub fn tighten(
    curve: &DiscreteClosedCurve,
    cfg: &PsiConfig,
    max_iters: usize,
    tol: f64,
) -> Result<(DiscreteClosedCurve, TighteningReport)> {
    let n = cfg.samples;
    let mut prev = curve.clone();
    let mut cur = psi(curve, cfg)?;
    let mut records = Vec::new();
    let mut iter = 1;
    let status = loop {
        let next = psi(&cur, cfg)?;
        let len = cur.length();
        let next_len = next.length();
        records.push(IterRecord {
            iter,
            length: len,
            energy: cur.energy(),
            step_dist: prev.w12_dist(&cur, n)?.total,
            residual: cur.w12_dist(&next, n)?.total,
            winding: cur.winding(),
        });
        if !(len.is_finite() && next_len.is_finite()) {
            break TightenStatus::Error;
        }
        let drop = if len > 0.0 { (len - next_len) / len } else { 0.0 };
        if drop < tol {
            break TightenStatus::Converged;
        }
        if iter >= max_iters {
            break TightenStatus::MaxIters;
        }
        prev = cur;
        cur = next;
        iter += 1;
    };
    Ok((cur, TighteningReport { records, status }))
}

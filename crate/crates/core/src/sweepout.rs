//! One-parameter families of closed curves and their tightening.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{psi, PsiConfig};
use crate::curves::{latitude_circle, DiscreteClosedCurve};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point, SpaceKind};

/// Factor applied to the initial adjacent-slice ratio to get the continuity budget.
pub const CONTINUITY_SLACK: f64 = 2.0;

/// Breaks used for the analytic reference curves.
const REFERENCE_BREAKS: usize = 64;

/// A grid of slices `σ(·, s)`.
///
/// With pinned ends the grid runs from `−1` to `1` and the end slices are
/// point curves; otherwise it is a free family (one slice for a single loop).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweepout {
    space: ModelSpace,
    grid: Vec<f64>,
    slices: Vec<DiscreteClosedCurve>,
    pinned_ends: bool,
    kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub argmax_index: usize,
    /// Max slice energy before the first sweep and after each sweep.
    pub history: Vec<f64>,
}

/// One row of the per-sweep trace: the slice as it enters sweep `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep: usize,
    pub slice: usize,
    pub length: f64,
    pub energy: f64,
    pub residual: f64,
}

impl Sweepout {
    /// An interval sweepout; the first and last slices must be point curves.
    pub fn new(space: ModelSpace, grid: Vec<f64>, slices: Vec<DiscreteClosedCurve>) -> Result<Self> {
        Self::build(space, grid, slices, true)
    }

    /// A free family of slices with no endpoint condition.
    pub fn family(space: ModelSpace, grid: Vec<f64>, slices: Vec<DiscreteClosedCurve>) -> Result<Self> {
        Self::build(space, grid, slices, false)
    }

    /// Parameter space a single point: the sweepout is one loop.
    pub fn single_loop(curve: DiscreteClosedCurve) -> Result<Self> {
        let space = *curve.space();
        Self::build(space, vec![0.0], vec![curve], false)
    }

    fn build(space: ModelSpace, grid: Vec<f64>, slices: Vec<DiscreteClosedCurve>, pinned: bool) -> Result<Self> {
        if grid.is_empty() || grid.len() != slices.len() {
            return Err(Error::InvalidCurve(format!(
                "{} grid values for {} slices",
                grid.len(),
                slices.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurve("sweepout grid must be strictly increasing".into()));
        }
        if slices.iter().any(|c| *c.space() != space) {
            return Err(Error::InvalidCurve("slice lives in a different space".into()));
        }
        if pinned {
            if grid.len() < 3 || grid[0] != -1.0 || grid[grid.len() - 1] != 1.0 {
                return Err(Error::InvalidCurve(
                    "interval sweepouts run over [-1, 1] with at least 3 slices".into(),
                ));
            }
            if !slices[0].is_point() || !slices[slices.len() - 1].is_point() {
                return Err(Error::InvalidCurve(
                    "end slices of a sweepout must be point curves".into(),
                ));
            }
        }
        let mut sw = Sweepout {
            space,
            grid,
            slices,
            pinned_ends: pinned,
            kappa: None,
        };
        if sw.slices.len() > 1 {
            sw.kappa = Some(CONTINUITY_SLACK * sw.max_continuity_ratio(crate::curves::DEFAULT_SAMPLES)?);
        }
        Ok(sw)
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn slices(&self) -> &[DiscreteClosedCurve] {
        &self.slices
    }

    pub fn pinned_ends(&self) -> bool {
        self.pinned_ends
    }

    /// Continuity budget `κ`, fixed when the sweepout was built.
    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    /// `max_i w12(σ_i, σ_{i+1}) / Δs`.
    pub fn max_continuity_ratio(&self, n: usize) -> Result<f64> {
        let ratios = (0..self.slices.len().saturating_sub(1))
            .into_par_iter()
            .map(|i| {
                let d = self.slices[i].w12_dist(&self.slices[i + 1], n)?.total;
                Ok(d / (self.grid[i + 1] - self.grid[i]))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ratios.into_iter().fold(0.0, f64::max))
    }

    /// Errors when some adjacent pair exceeds the budget.
    pub fn check_continuity(&self, n: usize) -> Result<()> {
        if let Some(kappa) = self.kappa {
            let r = self.max_continuity_ratio(n)?;
            if r > kappa {
                return Err(Error::Numerical(format!(
                    "adjacent slices drift apart: ratio {r} above budget {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Max slice energy and its index (first on ties).
    pub fn width(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, c) in self.slices.iter().enumerate() {
            let e = c.energy();
            if e > best.0 {
                best = (e, i);
            }
        }
        best
    }

    pub fn width_estimate(&self) -> WidthEstimate {
        let (value, argmax_index) = self.width();
        WidthEstimate {
            value,
            argmax_index,
            history: vec![value],
        }
    }

    /// Recomputed per-slice windings (torus only).
    pub fn windings(&self) -> Vec<Option<[i64; 2]>> {
        self.slices.iter().map(|c| c.winding()).collect()
    }

    fn with_slices(&self, slices: Vec<DiscreteClosedCurve>) -> Self {
        Sweepout {
            space: self.space,
            grid: self.grid.clone(),
            slices,
            pinned_ends: self.pinned_ends,
            kappa: self.kappa,
        }
    }
}

/// Latitude sweepout of the sphere of curvature `k_curv`: slice `s` is the
/// circle at height `s/√K` with `2L²` breaks, the ends are the poles.
pub fn init_latitude_sweepout(k_curv: f64, l: usize, n_slices: usize) -> Result<Sweepout> {
    if !(k_curv > 0.0) {
        return Err(Error::InvalidSpace(format!(
            "latitude sweepouts need K > 0, got {k_curv}"
        )));
    }
    if n_slices < 3 || n_slices.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "n_slices must be odd and at least 3, got {n_slices}"
        )));
    }
    let space = ModelSpace::sphere(k_curv)?;
    let m = 2 * l * l;
    let grid: Vec<f64> = (0..n_slices)
        .map(|i| {
            if i == n_slices - 1 {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (n_slices - 1) as f64
            }
        })
        .collect();
    let slices = grid
        .iter()
        .map(|&s| latitude_circle(&space, s, m))
        .collect::<Result<Vec<_>>>()?;
    Sweepout::new(space, grid, slices)
}

/// Polygon through the samples nearest to `y_i = 2πi/N`, reparametrized to constant speed.
///
/// `samples[k]` is the image of `2πk/n`. Replaced chords are limited to
/// `2π·L_bound/N`, the reach of a curve with Lipschitz bound `L_bound`.
pub fn project_to_pl(
    samples: &[Point],
    space: &ModelSpace,
    n_breaks: usize,
    l_bound: f64,
) -> Result<DiscreteClosedCurve> {
    let n = samples.len();
    if n == 0 || n_breaks == 0 {
        return Err(Error::InvalidCurve("need samples and at least one break".into()));
    }
    if n_breaks as f64 > l_bound * l_bound {
        return Err(Error::Config(format!(
            "N = {n_breaks} exceeds L_bound² = {}",
            l_bound * l_bound
        )));
    }
    let rho = TAU * l_bound / n_breaks as f64;
    let idx: Vec<usize> = (0..n_breaks)
        .map(|i| ((i * n) as f64 / n_breaks as f64).round() as usize % n)
        .collect();
    let breaks: Vec<Point> = idx.iter().map(|&k| samples[k]).collect();
    for j in 0..n_breaks {
        let gap = space.dist(&breaks[j], &breaks[(j + 1) % n_breaks])?;
        if gap > rho {
            return Err(Error::PartitionTooCoarse { length: gap, rho });
        }
    }
    let params = idx.iter().map(|&k| TAU * k as f64 / n as f64).collect::<Vec<_>>();
    let mut dedup_b: Vec<Point> = Vec::with_capacity(n_breaks);
    let mut dedup_p: Vec<f64> = Vec::with_capacity(n_breaks);
    for (p, t) in breaks.into_iter().zip(params) {
        if dedup_p.last().is_some_and(|&last| t <= last) {
            continue;
        }
        dedup_b.push(p);
        dedup_p.push(t);
    }
    let poly = DiscreteClosedCurve::new(*space, dedup_b, dedup_p)?;
    if poly.is_point() {
        return DiscreteClosedCurve::point_curve(*space, samples[0]);
    }
    poly.reparametrize_constant_speed()
}

/// Applies Ψ to every slice `sweeps` times.
pub fn tighten_sweepout(sw: &Sweepout, cfg: &PsiConfig, sweeps: usize) -> Result<(Sweepout, WidthEstimate)> {
    let (out, we, _) = run_sweeps(sw, cfg, sweeps, false)?;
    Ok((out, we))
}

/// As [`tighten_sweepout`], also returning one trace row per slice and sweep.
pub fn tighten_sweepout_traced(
    sw: &Sweepout,
    cfg: &PsiConfig,
    sweeps: usize,
) -> Result<(Sweepout, WidthEstimate, Vec<SweepRow>)> {
    run_sweeps(sw, cfg, sweeps, true)
}

fn run_sweeps(
    sw: &Sweepout,
    cfg: &PsiConfig,
    sweeps: usize,
    trace: bool,
) -> Result<(Sweepout, WidthEstimate, Vec<SweepRow>)> {
    let mut cur = sw.clone();
    let mut history = vec![cur.width().0];
    let mut rows = Vec::new();
    let last = cur.slices.len() - 1;
    let n = cfg.samples;
    for sweep in 0..sweeps {
        let stepped = cur
            .slices
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let pinned = cur.pinned_ends && (i == 0 || i == last);
                let next = if pinned { c.clone() } else { psi(c, cfg)? };
                let residual = if trace { c.w12_dist(&next, n)?.total } else { 0.0 };
                Ok((next, residual))
            })
            .collect::<Result<Vec<_>>>()?;
        if trace {
            for (i, (c, (_, residual))) in cur.slices.iter().zip(&stepped).enumerate() {
                rows.push(SweepRow {
                    sweep,
                    slice: i,
                    length: c.length(),
                    energy: c.energy(),
                    residual: *residual,
                });
            }
        }
        cur = cur.with_slices(stepped.into_iter().map(|(c, _)| c).collect());
        history.push(cur.width().0);
    }
    let (value, argmax_index) = cur.width();
    Ok((
        cur,
        WidthEstimate {
            value,
            argmax_index,
            history,
        },
        rows,
    ))
}

/// CSV with columns `sweep,slice,length,energy,residual`.
pub fn sweep_rows_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["sweep", "slice", "length", "energy", "residual"])
        .map_err(io)?;
    for r in rows {
        w.serialize((r.sweep, r.slice, r.length, r.energy, r.residual))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Non-point slices with `Length²/(2π) > W − δ`.
pub fn almost_maximal_slices(sw: &Sweepout, we: &WidthEstimate, delta: f64) -> Vec<usize> {
    let w = we.value;
    let floor = w - delta - 1e-12 * w.abs().max(1.0);
    sw.slices
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_point())
        .filter(|(_, c)| {
            let l = c.length();
            l * l / TAU > floor
        })
        .map(|(i, _)| i)
        .collect()
}

/// Closed-form families of closed geodesics used as distance targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceFamily {
    /// Great circles of a sphere.
    GreatCircles,
    /// Straight loops of a flat torus in the winding class of the slice.
    StraightLoops,
}

impl ReferenceFamily {
    pub fn for_space(space: &ModelSpace) -> Result<Self> {
        match space.kind() {
            SpaceKind::Sphere => Ok(ReferenceFamily::GreatCircles),
            SpaceKind::FlatTorus => Ok(ReferenceFamily::StraightLoops),
            k => Err(Error::InvalidSpace(format!("no reference geodesics for {}", k.name()))),
        }
    }

    /// The fitted member of the family closest to `curve`.
    pub fn nearest(&self, curve: &DiscreteClosedCurve, n: usize) -> Result<DiscreteClosedCurve> {
        match self {
            ReferenceFamily::GreatCircles => fit_great_circle(curve, n),
            ReferenceFamily::StraightLoops => fit_straight_loop(curve, n),
        }
    }

    /// W^{1,2} distance from `curve` to its fitted reference geodesic.
    pub fn distance(&self, curve: &DiscreteClosedCurve, n: usize) -> Result<f64> {
        let r = self.nearest(curve, n)?;
        Ok(curve.w12_dist(&r, n)?.total)
    }
}

/// Mean direction of angles.
fn circular_mean(angles: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = angles.fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    s.atan2(c)
}

fn fit_great_circle(curve: &DiscreteClosedCurve, n: usize) -> Result<DiscreteClosedCurve> {
    let space = *curve.space();
    if space.kind() != SpaceKind::Sphere {
        return Err(Error::InvalidSpace("great circles live on the sphere".into()));
    }
    let pts = curve.sample(n);
    let mut scatter = Matrix3::zeros();
    for p in &pts {
        let v = Vector3::from_column_slice(p.coords());
        scatter += v * v.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let k = eig.eigenvalues.imin();
    let normal: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
    let helper = if normal.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (helper - normal * normal.dot(&helper)).normalize();
    let e2 = normal.cross(&e1);
    let angles: Vec<f64> = pts
        .iter()
        .map(|p| {
            let v = Vector3::from_column_slice(p.coords());
            v.dot(&e2).atan2(v.dot(&e1))
        })
        .collect();
    let mut turn = 0.0;
    for k in 0..n {
        let d = angles[(k + 1) % n] - angles[k];
        turn += d - TAU * (d / TAU).round();
    }
    let sigma = if turn >= 0.0 { 1.0 } else { -1.0 };
    let h = TAU / n as f64;
    let phase = circular_mean(angles.iter().enumerate().map(|(k, a)| a - sigma * h * k as f64));
    let r = space.radius();
    let breaks = (0..REFERENCE_BREAKS)
        .map(|j| {
            let a = phase + sigma * TAU * j as f64 / REFERENCE_BREAKS as f64;
            let v = (e1 * a.cos() + e2 * a.sin()) * r;
            space.normalize(Point::xyz(v.x, v.y, v.z))
        })
        .collect();
    DiscreteClosedCurve::uniform(space, breaks)
}

fn fit_straight_loop(curve: &DiscreteClosedCurve, n: usize) -> Result<DiscreteClosedCurve> {
    let space = *curve.space();
    let periods = space
        .periods()
        .ok_or_else(|| Error::InvalidSpace("straight loops live on the flat torus".into()))?;
    let w = curve.winding().unwrap_or([0, 0]);
    if w == [0, 0] {
        return Err(Error::InvalidCurve(
            "a null-homotopic loop has no straight representative".into(),
        ));
    }
    let pts = curve.sample(n);
    let h = TAU / n as f64;
    let offset: Vec<f64> = (0..2)
        .map(|i| {
            let p = periods[i];
            let mean = circular_mean(pts.iter().enumerate().map(|(k, q)| {
                let drift = w[i] as f64 * p * (h * k as f64) / TAU;
                TAU * (q.coords()[i] - drift) / p
            }));
            mean * p / TAU
        })
        .collect();
    let breaks = (0..REFERENCE_BREAKS)
        .map(|j| {
            let t = j as f64 / REFERENCE_BREAKS as f64;
            space.point(&[
                offset[0] + w[0] as f64 * periods[0] * t,
                offset[1] + w[1] as f64 * periods[1] * t,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteClosedCurve::uniform(space, breaks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Band half-width as a fraction of the width.
    pub delta_fraction: f64,
    pub delta: f64,
    pub slices: Vec<usize>,
    pub max_dist: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainThmReport {
    pub width: WidthEstimate,
    pub rows: Vec<DeltaRow>,
    /// `max_dist` never grows as δ shrinks along the ladder.
    pub monotone: bool,
}

/// Tightens, then analyses the almost-maximal band with [`analyze_band`].
pub fn mainthm_experiment(
    sw: &Sweepout,
    cfg: &PsiConfig,
    sweeps: usize,
    delta_fractions: &[f64],
    reference: ReferenceFamily,
) -> Result<(Sweepout, MainThmReport)> {
    let (tight, width) = tighten_sweepout(sw, cfg, sweeps)?;
    let report = analyze_band(&tight, width, cfg, delta_fractions, reference)?;
    Ok((tight, report))
}

/// For each `δ = fraction·W`, largest to smallest: the almost-maximal slices,
/// their distance to the reference family and their fixed-point residual.
pub fn analyze_band(
    tight: &Sweepout,
    width: WidthEstimate,
    cfg: &PsiConfig,
    delta_fractions: &[f64],
    reference: ReferenceFamily,
) -> Result<MainThmReport> {
    let n = cfg.samples;
    let per_slice = tight
        .slices()
        .par_iter()
        .map(|c| {
            if c.is_point() {
                return Ok((f64::NAN, f64::NAN));
            }
            let dist = reference.distance(c, n)?;
            let next = psi(c, cfg)?;
            Ok((dist, c.w12_dist(&next, n)?.total))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ladder: Vec<f64> = delta_fractions.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for frac in ladder {
        let delta = frac * width.value;
        let slices = almost_maximal_slices(tight, &width, delta);
        let max_dist = slices.iter().map(|&i| per_slice[i].0).fold(0.0, f64::max);
        let max_residual = slices.iter().map(|&i| per_slice[i].1).fold(0.0, f64::max);
        rows.push(DeltaRow {
            delta_fraction: frac,
            delta,
            slices,
            max_dist,
            max_residual,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].max_dist <= w[0].max_dist);
    Ok(MainThmReport { width, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{sampled_energy, DEFAULT_SAMPLES};
    use crate::geometry::stream_rng;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn torus() -> ModelSpace {
        ModelSpace::flat_torus(1.0, 1.0).unwrap()
    }

    fn torus_loop(v: f64, amp: f64, m: usize) -> DiscreteClosedCurve {
        let t = torus();
        let pts = (0..m)
            .map(|j| {
                let u = j as f64 / m as f64;
                t.point(&[u, v + amp * (TAU * u).sin()]).unwrap()
            })
            .collect();
        DiscreteClosedCurve::uniform(t, pts).unwrap()
    }

    #[test]
    fn latitude_initialization() {
        let sw = init_latitude_sweepout(1.0, 8, 33).unwrap();
        let s = sw.slices();
        assert!(s[0].is_point() && s[32].is_point());
        assert_eq!(s[0].breaks()[0].coords(), &[0.0, 0.0, -1.0]);
        assert_eq!(s[32].breaks()[0].coords(), &[0.0, 0.0, 1.0]);
        assert_eq!(sw.grid()[16], 0.0);
        let m = 128.0;
        let expect = m * 2.0 * (PI / m).sin().asin();
        assert_relative_eq!(s[16].length(), expect, max_relative = 1e-13);
        let (w, idx) = sw.width();
        assert_eq!(idx, 16);
        assert_relative_eq!(w, TAU, max_relative = 1e-14);
        assert!(sw.kappa().unwrap() > 0.0);

        let sw4 = init_latitude_sweepout(4.0, 8, 5).unwrap();
        assert_relative_eq!(sw4.slices()[2].length(), expect / 2.0, max_relative = 1e-13);
        assert!(init_latitude_sweepout(1.0, 8, 4).is_err());
        assert!(init_latitude_sweepout(-1.0, 8, 5).is_err());
    }

    #[test]
    fn endpoint_rule() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let eq = latitude_circle(&s, 0.0, 16).unwrap();
        let r = Sweepout::new(s, vec![-1.0, 0.0, 1.0], vec![eq.clone(), eq.clone(), eq]);
        assert!(r.is_err());
    }

    #[test]
    fn project_examples() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let eq = latitude_circle(&s, 0.0, 64).unwrap();
        let samples = eq.sample(64);
        let p = project_to_pl(&samples, &s, 64, 8.0).unwrap();
        assert_relative_eq!(p.length(), 128.0 * (PI / 64.0).sin().asin(), max_relative = 1e-13);
        assert!(p.w12_dist(&eq, 256).unwrap().total < 1e-12);

        let lat = latitude_circle(&s, 0.5, 512).unwrap();
        let dense = lat.sample(512);
        let p = project_to_pl(&dense, &s, 32, 8.0).unwrap();
        assert!(p.energy() <= sampled_energy(&dense, &s) + 1e-12);
        assert!(p.is_constant_speed());

        let flat = vec![s.origin(); 100];
        assert!(project_to_pl(&flat, &s, 16, 4.0).unwrap().is_point());
        assert!(project_to_pl(&dense, &s, 100, 8.0).is_err());
        let e = ModelSpace::euclidean();
        let big: Vec<Point> = (0..64)
            .map(|k| {
                let a = TAU * k as f64 / 64.0;
                Point::xy(10.0 * a.cos(), 10.0 * a.sin())
            })
            .collect();
        assert!(matches!(
            project_to_pl(&big, &e, 4, 2.0),
            Err(Error::PartitionTooCoarse { .. })
        ));
    }

    #[test]
    fn geodesic_family_is_unchanged() {
        let t = torus();
        let grid = vec![0.0, 0.25, 0.5, 0.75];
        let slices: Vec<_> = grid.iter().map(|&v| torus_loop(v, 0.0, 32)).collect();
        let sw = Sweepout::family(t, grid, slices).unwrap();
        let cfg = PsiConfig::for_space(&t, 4).unwrap();
        let (out, we) = tighten_sweepout(&sw, &cfg, 3).unwrap();
        for (a, b) in out.slices().iter().zip(sw.slices()) {
            assert!(a.w12_dist(b, 512).unwrap().total < 1e-12);
        }
        assert!(we.history.iter().all(|&e| (e - we.history[0]).abs() < 1e-12));
        let (_, rep) = mainthm_experiment(&sw, &cfg, 2, &[0.2, 0.1], ReferenceFamily::StraightLoops).unwrap();
        assert!(rep.rows.iter().all(|r| r.max_dist < 1e-10));
    }

    #[test]
    fn latitude_tightening_keeps_equator() {
        let cfg = PsiConfig::for_space(&ModelSpace::sphere(1.0).unwrap(), 8).unwrap();
        let sw = init_latitude_sweepout(1.0, 8, 17).unwrap();
        let (out, we) = tighten_sweepout(&sw, &cfg, 10).unwrap();
        assert_eq!(we.argmax_index, 8);
        assert!((we.value - sw.width().0).abs() < 1e-12);
        assert!(we.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert_eq!(out.slices()[0], sw.slices()[0]);
        assert_eq!(out.slices()[16], sw.slices()[16]);
        for i in 1..8 {
            assert!(out.slices()[i].length() < sw.slices()[i].length());
        }
    }

    #[test]
    fn perturbed_history_is_monotone() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let cfg = PsiConfig::for_space(&s, 4).unwrap();
        let base = init_latitude_sweepout(1.0, 4, 9).unwrap();
        let mut rng = stream_rng(5, 0);
        let slices = base
            .slices()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 || i == 8 {
                    return c.clone();
                }
                let moved = c
                    .breaks()
                    .iter()
                    .map(|p| s.sample_in_ball(p, 0.01, &mut rng).unwrap())
                    .collect();
                DiscreteClosedCurve::new(s, moved, c.params().to_vec()).unwrap()
            })
            .collect();
        let sw = Sweepout::new(s, base.grid().to_vec(), slices).unwrap();
        let (out, we) = tighten_sweepout(&sw, &cfg, 20).unwrap();
        assert!(we.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert_eq!(out.slices()[0], sw.slices()[0]);
        assert_eq!(out.slices()[8], sw.slices()[8]);
    }

    #[test]
    fn band_selection() {
        let sw = init_latitude_sweepout(1.0, 8, 33).unwrap();
        let we = sw.width_estimate();
        let all = almost_maximal_slices(&sw, &we, we.value);
        assert_eq!(all, (1..32).collect::<Vec<_>>());
        assert_eq!(almost_maximal_slices(&sw, &we, 0.0), vec![16]);
        let band = almost_maximal_slices(&sw, &we, 0.05 * we.value);
        assert!(band.contains(&16));
        assert!(band.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(band.len() > 1 && band.len() < 31);
    }

    #[test]
    fn reference_fits() {
        let s = ModelSpace::sphere(1.0).unwrap();
        let eq = latitude_circle(&s, 0.0, 128).unwrap();
        assert!(ReferenceFamily::GreatCircles.distance(&eq, DEFAULT_SAMPLES).unwrap() < 1e-10);
        // a tilted, rotated great circle with reversed orientation
        let tilt = 0.7f64;
        let pts: Vec<Point> = (0..128)
            .map(|j| {
                let a = 0.3 - TAU * j as f64 / 128.0;
                s.normalize(Point::xyz(a.cos(), a.sin() * tilt.cos(), a.sin() * tilt.sin()))
            })
            .collect();
        let gc = DiscreteClosedCurve::uniform(s, pts).unwrap();
        assert!(ReferenceFamily::GreatCircles.distance(&gc, DEFAULT_SAMPLES).unwrap() < 1e-10);
        let lat = latitude_circle(&s, 0.2, 128).unwrap();
        let d = ReferenceFamily::GreatCircles.distance(&lat, DEFAULT_SAMPLES).unwrap();
        assert!((d / (0.2f64.asin() * TAU.sqrt()) - 1.0).abs() < 0.05, "{d}");

        let flat = torus_loop(0.9, 0.0, 40);
        assert!(ReferenceFamily::StraightLoops.distance(&flat, DEFAULT_SAMPLES).unwrap() < 1e-10);
        let pts = (0..16)
            .map(|j| torus().point(&[0.3, j as f64 / 16.0]).unwrap())
            .collect();
        let vert = DiscreteClosedCurve::uniform(torus(), pts).unwrap();
        assert!(ReferenceFamily::StraightLoops.distance(&vert, DEFAULT_SAMPLES).unwrap() < 1e-10);
    }

    #[test]
    fn single_loop_torus() {
        let c = torus_loop(0.5, 0.1, 64);
        let sw = Sweepout::single_loop(c).unwrap();
        let cfg = PsiConfig::for_space(&torus(), 4).unwrap();
        let (out, rep) = mainthm_experiment(&sw, &cfg, 400, &[0.1], ReferenceFamily::StraightLoops).unwrap();
        assert_eq!(rep.rows[0].slices, vec![0]);
        assert!(rep.rows[0].max_dist < 1e-4, "{}", rep.rows[0].max_dist);
        assert_eq!(out.windings(), vec![Some([1, 0])]);
    }

    #[test]
    fn grid_refinement_keeps_width() {
        let cfg = PsiConfig::for_space(&ModelSpace::sphere(1.0).unwrap(), 8).unwrap();
        let (_, a) = tighten_sweepout(&init_latitude_sweepout(1.0, 8, 9).unwrap(), &cfg, 5).unwrap();
        let (_, b) = tighten_sweepout(&init_latitude_sweepout(1.0, 8, 17).unwrap(), &cfg, 5).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert_eq!((a.argmax_index, b.argmax_index), (4, 8));
    }

    #[test]
    fn trace_rows() {
        let cfg = PsiConfig::for_space(&ModelSpace::sphere(1.0).unwrap(), 4).unwrap();
        let sw = init_latitude_sweepout(1.0, 4, 5).unwrap();
        let (_, _, rows) = tighten_sweepout_traced(&sw, &cfg, 2).unwrap();
        assert_eq!(rows.len(), 10);
        let csv = sweep_rows_csv(&rows).unwrap();
        assert!(csv.starts_with("sweep,slice,length,energy,residual\n"));
        assert_eq!(rows[0].residual, 0.0);
        assert!(rows[1].residual > 0.0);
    }
}

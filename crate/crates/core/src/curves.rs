//! Piecewise-geodesic closed curves `S¹ → X` and their functionals.
//!
//! A curve is a cyclic list of break points with strictly increasing
//! parameters `p₀ < p₁ < … < p_{m−1} < p₀ + 2π`, `p₀ ∈ [0, 2π)`; segment `j`
//! runs from break `j` to break `j+1` and the last one wraps back to break 0.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point, SpaceKind, SpaceSpec};

/// Relative tolerance on the constant-speed flag.
pub const CONSTANT_SPEED_TOL: f64 = 1e-10;

/// Default quadrature size for sampled functionals.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Grid size used by [`DiscreteClosedCurve::holder_check`].
pub const HOLDER_GRID: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDistance {
    pub l2_part: f64,
    pub deriv_part: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteClosedCurve {
    space: ModelSpace,
    breaks: Vec<Point>,
    params: Vec<f64>,
    seg_len: Vec<f64>,
    constant_speed: bool,
    lipschitz_bound: Option<f64>,
}

impl DiscreteClosedCurve {
    pub fn new(space: ModelSpace, breaks: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() {
            return Err(Error::InvalidCurve("a curve needs at least one break".into()));
        }
        if breaks.len() != params.len() {
            return Err(Error::InvalidCurve(format!(
                "{} breaks but {} parameters",
                breaks.len(),
                params.len()
            )));
        }
        if params.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve("non-finite parameter".into()));
        }
        let shift = TAU * (params[0] / TAU).floor();
        let mut params: Vec<f64> = params.into_iter().map(|t| t - shift).collect();
        if params[0] >= TAU {
            params[0] = 0.0;
        }
        let p0 = params[0];
        for w in params.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidCurve(format!(
                    "parameters must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if breaks.len() > 1 && !(params[params.len() - 1] < p0 + TAU) {
            return Err(Error::InvalidCurve(format!(
                "parameters must span less than one period starting at {p0}"
            )));
        }
        for p in &breaks {
            space.validate(p)?;
        }
        let m = breaks.len();
        let mut seg_len = Vec::with_capacity(m);
        for j in 0..m {
            let (p, q) = (&breaks[j], &breaks[(j + 1) % m]);
            space.check_unique(p, q)?;
            seg_len.push(space.dist_raw(p, q));
        }
        let mut curve = DiscreteClosedCurve {
            space,
            breaks,
            params,
            seg_len,
            constant_speed: false,
            lipschitz_bound: None,
        };
        curve.constant_speed = curve.speed_is_constant();
        Ok(curve)
    }

    /// Breaks at the uniform parameters `2πj/m`.
    pub fn uniform(space: ModelSpace, breaks: Vec<Point>) -> Result<Self> {
        let m = breaks.len();
        let params = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        Self::new(space, breaks, params)
    }

    /// The constant map to `p`.
    pub fn point_curve(space: ModelSpace, p: Point) -> Result<Self> {
        Self::new(space, vec![p], vec![0.0])
    }

    /// Declares a Lipschitz bound; errors when some segment is faster.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Result<Self> {
        let speed = self.max_speed();
        if speed > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidCurve(format!(
                "max speed {speed} exceeds the declared Lipschitz bound {bound}"
            )));
        }
        self.lipschitz_bound = Some(bound);
        Ok(self)
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn breaks(&self) -> &[Point] {
        &self.breaks
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_breaks(&self) -> usize {
        self.breaks.len()
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.seg_len
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn is_constant_speed(&self) -> bool {
        self.constant_speed
    }

    /// True when the curve is a single point (one break or zero length).
    pub fn is_point(&self) -> bool {
        self.seg_len.iter().all(|&l| l == 0.0)
    }

    /// Parameter width of segment `j`.
    pub fn segment_width(&self, j: usize) -> f64 {
        let m = self.params.len();
        if j + 1 < m {
            self.params[j + 1] - self.params[j]
        } else {
            self.params[0] + TAU - self.params[m - 1]
        }
    }

    pub fn segment_speed(&self, j: usize) -> f64 {
        self.seg_len[j] / self.segment_width(j)
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.n_breaks()).map(|j| self.segment_speed(j)).fold(0.0, f64::max)
    }

    fn speed_is_constant(&self) -> bool {
        let target = self.length() / TAU;
        (0..self.n_breaks())
            .all(|j| (self.segment_speed(j) - target).abs() <= CONSTANT_SPEED_TOL * target.max(f64::MIN_POSITIVE))
    }

    /// Reduces `t` into `[p₀, p₀ + 2π)`.
    fn lift_param(&self, t: f64) -> f64 {
        let p0 = self.params[0];
        let r = p0 + (t - p0).rem_euclid(TAU);
        if r >= p0 + TAU {
            p0
        } else {
            r
        }
    }

    /// Index of the segment containing `t`, with the local fraction along it.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let tau = self.lift_param(t);
        let j = self.params.partition_point(|&p| p <= tau).saturating_sub(1);
        let lambda = ((tau - self.params[j]) / self.segment_width(j)).clamp(0.0, 1.0);
        (j, lambda)
    }

    pub fn eval(&self, t: f64) -> Point {
        let (j, lambda) = self.locate(t);
        if lambda == 0.0 {
            return self.breaks[j];
        }
        let m = self.n_breaks();
        self.space
            .interpolate_raw(&self.breaks[j], &self.breaks[(j + 1) % m], lambda)
    }

    /// Images of the uniform grid `2πk/n`, `k = 0..n`.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        (0..n).map(|k| self.eval(TAU * k as f64 / n as f64)).collect()
    }

    pub fn length(&self) -> f64 {
        self.seg_len.iter().sum()
    }

    /// `Σ ℓ_j² / Δt_j`, exact for piecewise-geodesic maps.
    pub fn energy(&self) -> f64 {
        (0..self.n_breaks())
            .map(|j| self.seg_len[j] * self.seg_len[j] / self.segment_width(j))
            .sum()
    }

    /// Rectangle-rule quadrature of the ε-approximate energy density
    /// `[d²(u(η−ε), u(η)) + d²(u(η), u(η+ε))] / (2ε²)`.
    pub fn energy_approx(&self, epsilon: f64, n_samples: usize) -> Result<f64> {
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if n_samples < 64 {
            return Err(Error::Config(format!("need at least 64 samples, got {n_samples}")));
        }
        let h = TAU / n_samples as f64;
        let mut total = 0.0;
        for k in 0..n_samples {
            let eta = h * k as f64;
            let mid = self.eval(eta);
            let back = self.space.dist_raw(&self.eval(eta - epsilon), &mid);
            let fwd = self.space.dist_raw(&mid, &self.eval(eta + epsilon));
            total += (back * back + fwd * fwd) / (2.0 * epsilon * epsilon);
        }
        Ok(total * h)
    }

    /// Inserts a break at parameter `t` unless one is already there; returns the new curve and its index.
    pub fn with_break_at(&self, t: f64) -> Result<(Self, usize)> {
        let (j, lambda) = self.locate(t);
        if lambda == 0.0 {
            return Ok((self.clone(), j));
        }
        let tau = self.lift_param(t);
        if tau <= self.params[j] {
            return Ok((self.clone(), j));
        }
        let p = self.eval(t);
        let mut breaks = self.breaks.clone();
        let mut params = self.params.clone();
        breaks.insert(j + 1, p);
        params.insert(j + 1, tau);
        let mut out = Self::new(self.space, breaks, params)?;
        out.lipschitz_bound = self.lipschitz_bound;
        Ok((out, j + 1))
    }

    /// Relabels the breaks cyclically so that break `k` comes first.
    pub fn rotated(&self, k: usize) -> Result<Self> {
        let m = self.n_breaks();
        let k = k % m;
        let breaks: Vec<Point> = (0..m).map(|j| self.breaks[(j + k) % m]).collect();
        let params: Vec<f64> = (0..m)
            .map(|j| {
                let idx = (j + k) % m;
                if idx < k {
                    self.params[idx] + TAU
                } else {
                    self.params[idx]
                }
            })
            .collect();
        let mut out = Self::new(self.space, breaks, params)?;
        out.lipschitz_bound = self.lipschitz_bound;
        Ok(out)
    }

    /// Constant-speed reparametrization with the image of `params[0]` kept at `params[0]`.
    ///
    /// Zero-length segments are merged away; the break images are otherwise unchanged.
    pub fn reparametrize_constant_speed(&self) -> Result<Self> {
        let total = self.length();
        if !(total > 0.0) {
            return Err(Error::ZeroLength);
        }
        let p0 = self.params[0];
        let mut breaks = vec![self.breaks[0]];
        let mut params = vec![p0];
        let mut cum = 0.0;
        let m = self.n_breaks();
        for j in 0..m - 1 {
            cum += self.seg_len[j];
            let t = p0 + TAU * (cum / total);
            if t > *params.last().unwrap_or(&p0) && t < p0 + TAU {
                breaks.push(self.breaks[j + 1]);
                params.push(t);
            } else if self.seg_len[j] > 0.0 {
                // a sliver too short to carry its own parameter width: keep
                // the latest image so the polygon is not shortcut
                if breaks.len() > 1 {
                    *breaks.last_mut().unwrap() = self.breaks[j + 1];
                }
            }
        }
        // merged a nonzero wrap-around sliver into the last break
        if breaks.len() > 1 && self.space.dist_raw(breaks.last().unwrap(), &breaks[0]) == 0.0 {
            breaks.pop();
            params.pop();
        }
        let mut out = Self::new(self.space, breaks, params)?;
        out.lipschitz_bound = self.lipschitz_bound;
        out.constant_speed = out.speed_is_constant() || out.constant_speed;
        Ok(out)
    }

    /// Constant-speed reparametrization keeping the point `eval(t0)` at parameter `t0`.
    pub fn reparametrize_fixing(&self, t0: f64) -> Result<Self> {
        self.reparametrize_anchored(t0, t0)
    }

    /// Constant-speed reparametrization that moves the point `eval(t_src)` to parameter `t_dst`.
    pub fn reparametrize_anchored(&self, t_src: f64, t_dst: f64) -> Result<Self> {
        let (with_break, k) = self.with_break_at(t_src)?;
        let rotated = with_break.rotated(k)?;
        let shift = t_dst.rem_euclid(TAU) - rotated.params[0];
        let params = rotated.params.iter().map(|t| t + shift).collect();
        let mut moved = Self::new(self.space, rotated.breaks.clone(), params)?;
        moved.lipschitz_bound = self.lipschitz_bound;
        moved.reparametrize_constant_speed()
    }

    /// W^{1,2} distance of `t ↦ d(α(t), β(t))` on the uniform grid of `n_samples` points.
    pub fn w12_dist(&self, other: &Self, n_samples: usize) -> Result<CurveDistance> {
        if self.space != other.space {
            return Err(Error::InvalidCurve("curves live in different spaces".into()));
        }
        if n_samples < 64 {
            return Err(Error::Config(format!("need at least 64 samples, got {n_samples}")));
        }
        let f: Vec<f64> = (0..n_samples)
            .map(|k| {
                let t = TAU * k as f64 / n_samples as f64;
                self.space.dist_raw(&self.eval(t), &other.eval(t))
            })
            .collect();
        Ok(w12_of_samples(&f))
    }

    /// `max d²(σ(x), σ(y)) / (|y − x| · Energy)` over all pairs of a 128-point grid.
    pub fn holder_check(&self) -> f64 {
        self.holder_check_with(HOLDER_GRID)
    }

    pub fn holder_check_with(&self, n: usize) -> f64 {
        let energy = self.energy();
        if self.is_point() || energy == 0.0 {
            return 0.0;
        }
        let pts = self.sample(n);
        let h = TAU / n as f64;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                let gap = (b - a).min(n - (b - a)) as f64 * h;
                let d = self.space.dist_raw(&pts[a], &pts[b]);
                worst = worst.max(d * d / (gap * energy));
            }
        }
        worst
    }

    /// Errors unless every segment is at most `rho` long and no faster than `lipschitz`.
    pub fn check_lambda(&self, rho: f64, lipschitz: f64) -> Result<()> {
        for j in 0..self.n_breaks() {
            if self.seg_len[j] > rho * (1.0 + 1e-12) {
                return Err(Error::NotInLambda(format!(
                    "segment {j} has length {} > rho = {rho}",
                    self.seg_len[j]
                )));
            }
            let speed = self.segment_speed(j);
            if speed > lipschitz * (1.0 + 1e-12) {
                return Err(Error::NotInLambda(format!(
                    "segment {j} has speed {speed} above the Lipschitz bound {lipschitz}"
                )));
            }
        }
        Ok(())
    }

    /// Continuous lift of the break points to the universal cover (flat spaces only).
    pub fn flat_lift(&self) -> Option<Vec<[f64; 2]>> {
        match self.space.kind() {
            SpaceKind::FlatTorus | SpaceKind::Euclidean => {}
            _ => return None,
        }
        let m = self.n_breaks();
        let c0 = self.breaks[0].coords();
        let mut out = vec![[c0[0], c0[1]]];
        for j in 0..m {
            let d = self.space.flat_delta(&self.breaks[j], &self.breaks[(j + 1) % m]);
            let last = out[out.len() - 1];
            out.push([last[0] + d[0], last[1] + d[1]]);
        }
        Some(out)
    }

    /// Integer winding vector of a torus curve; `None` elsewhere.
    pub fn winding(&self) -> Option<[i64; 2]> {
        let periods = self.space.periods()?;
        let lift = self.flat_lift()?;
        let first = lift[0];
        let last = lift[lift.len() - 1];
        Some([
            ((last[0] - first[0]) / periods[0]).round() as i64,
            ((last[1] - first[1]) / periods[1]).round() as i64,
        ])
    }

    pub fn to_json(&self) -> CurveJson {
        let spec = SpaceSpec::from(self.space);
        CurveJson {
            space: spec.kind,
            curvature: spec.curvature,
            periods: spec.periods,
            breaks: self.breaks.iter().map(|p| p.coords().to_vec()).collect(),
            params: self.params.clone(),
        }
    }
}

/// Quadrature parts of the W^{1,2} norm of uniformly sampled periodic values.
pub fn w12_of_samples(f: &[f64]) -> CurveDistance {
    let n = f.len();
    let h = TAU / n as f64;
    let l2_part: f64 = f.iter().map(|v| v * v).sum::<f64>() * h;
    let deriv_part: f64 = (0..n)
        .map(|k| {
            let d = (f[(k + 1) % n] - f[k]) / h;
            d * d
        })
        .sum::<f64>()
        * h;
    CurveDistance {
        l2_part,
        deriv_part,
        total: (l2_part + deriv_part).sqrt(),
    }
}

/// `Σ d²(x_k, x_{k+1}) / h` for samples on the uniform grid, `h = 2π/n`.
pub fn sampled_energy(samples: &[Point], space: &ModelSpace) -> f64 {
    let n = samples.len();
    let h = TAU / n as f64;
    (0..n)
        .map(|k| {
            let d = space.dist_raw(&samples[k], &samples[(k + 1) % n]);
            d * d / h
        })
        .sum()
}

/// JSON form `{space, curvature, breaks, params}` (plus `periods` on the torus).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveJson {
    pub space: SpaceKind,
    pub curvature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<[f64; 2]>,
    pub breaks: Vec<Vec<f64>>,
    pub params: Vec<f64>,
}

impl TryFrom<CurveJson> for DiscreteClosedCurve {
    type Error = Error;

    fn try_from(j: CurveJson) -> Result<Self> {
        let space = ModelSpace::new(j.space, j.curvature, j.periods)?;
        let breaks = j.breaks.iter().map(|c| space.point(c)).collect::<Result<Vec<_>>>()?;
        DiscreteClosedCurve::new(space, breaks, j.params)
    }
}

impl Serialize for DiscreteClosedCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteClosedCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = CurveJson::deserialize(d)?;
        DiscreteClosedCurve::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Polygon with `m` breaks drawn from the ball `B_r(center)`.
///
/// With `jitter` the parameter widths are random in a 1:5 range, otherwise uniform.
pub fn random_polygon<R: Rng + ?Sized>(
    space: &ModelSpace,
    center: &Point,
    r: f64,
    m: usize,
    jitter: bool,
    rng: &mut R,
) -> Result<DiscreteClosedCurve> {
    let breaks = (0..m)
        .map(|_| space.sample_in_ball(center, r, rng))
        .collect::<Result<Vec<_>>>()?;
    if !jitter {
        return DiscreteClosedCurve::uniform(*space, breaks);
    }
    let widths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = widths.iter().sum();
    let mut acc = rng.gen_range(0.0..TAU);
    let params = widths
        .iter()
        .map(|w| {
            let t = acc;
            acc += w / total * TAU;
            t
        })
        .collect();
    DiscreteClosedCurve::new(*space, breaks, params)
}

/// Latitude circle at height `z = s·R` on a sphere of curvature `k_curv`, with `m` uniform breaks.
pub fn latitude_circle(space: &ModelSpace, s: f64, m: usize) -> Result<DiscreteClosedCurve> {
    if space.kind() != SpaceKind::Sphere {
        return Err(Error::InvalidSpace("latitude circles live on the sphere".into()));
    }
    let r = space.radius();
    if s.abs() >= 1.0 {
        let pole = space.point(&[0.0, 0.0, r * s.signum()])?;
        return DiscreteClosedCurve::point_curve(*space, pole);
    }
    let rho = r * (1.0 - s * s).sqrt();
    let z = r * s;
    let breaks = (0..m)
        .map(|j| {
            let phi = TAU * j as f64 / m as f64;
            space.normalize(Point::xyz(rho * phi.cos(), rho * phi.sin(), z))
        })
        .collect();
    DiscreteClosedCurve::uniform(*space, breaks)
}

/// The `(1, 0)` loop `u ↦ (u·P₁, P₂/2 + amplitude·sin 2πu)` on a flat torus, `m` uniform breaks.
pub fn wiggly_loop(space: &ModelSpace, amplitude: f64, m: usize) -> Result<DiscreteClosedCurve> {
    let p = space
        .periods()
        .ok_or_else(|| Error::InvalidSpace("wiggly loops live on the flat torus".into()))?;
    let breaks = (0..m)
        .map(|j| {
            let u = j as f64 / m as f64;
            space.point(&[u * p[0], 0.5 * p[1] + amplitude * (TAU * u).sin()])
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteClosedCurve::uniform(*space, breaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::stream_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn sphere() -> ModelSpace {
        ModelSpace::sphere(1.0).unwrap()
    }

    fn torus() -> ModelSpace {
        ModelSpace::flat_torus(1.0, 1.0).unwrap()
    }

    fn square() -> DiscreteClosedCurve {
        let e = ModelSpace::euclidean();
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        DiscreteClosedCurve::uniform(e, pts.iter().map(|&(x, y)| Point::xy(x, y)).collect()).unwrap()
    }

    fn random_curve(space: &ModelSpace, center: &Point, r: f64, m: usize, seed: u64) -> DiscreteClosedCurve {
        random_polygon(space, center, r, m, true, &mut stream_rng(seed, 1)).unwrap()
    }

    #[test]
    fn construction_rejects_bad_params() {
        let e = ModelSpace::euclidean();
        let p = || vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        assert!(DiscreteClosedCurve::new(e, p(), vec![1.0, 1.0]).is_err());
        assert!(DiscreteClosedCurve::new(e, p(), vec![1.0, 0.5]).is_err());
        assert!(DiscreteClosedCurve::new(e, p(), vec![0.0, TAU]).is_err());
        assert!(DiscreteClosedCurve::new(e, p(), vec![0.0]).is_err());
        assert!(DiscreteClosedCurve::new(e, vec![], vec![]).is_err());
        let c = DiscreteClosedCurve::new(e, p(), vec![7.0, 8.0]).unwrap();
        assert_relative_eq!(c.params()[0], 7.0 - TAU, max_relative = 1e-15);
        let s = sphere();
        let anti = vec![Point::xyz(0.0, 0.0, 1.0), Point::xyz(0.0, 0.0, -1.0)];
        assert!(matches!(
            DiscreteClosedCurve::uniform(s, anti),
            Err(Error::AmbiguousGeodesic { .. })
        ));
    }

    #[test]
    fn eval_examples() {
        let c = square();
        for (j, p) in c.breaks().iter().enumerate() {
            assert_eq!(c.eval(c.params()[j]), *p);
        }
        let e = ModelSpace::euclidean();
        let two = DiscreteClosedCurve::uniform(e, vec![Point::xy(0.0, 0.0), Point::xy(2.0, 4.0)]).unwrap();
        let m = two.eval(PI / 2.0);
        assert!((m.coords()[0] - 1.0).abs() < 1e-15 && (m.coords()[1] - 2.0).abs() < 1e-15);
        let back = two.eval(3.0 * PI / 2.0);
        assert!((back.coords()[0] - 1.0).abs() < 1e-15);

        let eq = latitude_circle(&sphere(), 0.0, 128).unwrap();
        for p in eq.sample(512) {
            assert!(p.coords()[2].abs() < 1e-12);
            assert!((p.coords().iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn length_examples() {
        let s = sphere();
        let pole = DiscreteClosedCurve::point_curve(s, s.origin()).unwrap();
        assert_eq!(pole.length(), 0.0);
        assert_eq!(pole.energy(), 0.0);
        assert!(pole.is_point());

        let e = ModelSpace::euclidean();
        let pts = (0..4)
            .map(|j| {
                let a = PI / 2.0 * j as f64;
                Point::xy(a.cos(), a.sin())
            })
            .collect();
        let sq = DiscreteClosedCurve::uniform(e, pts).unwrap();
        assert_relative_eq!(sq.length(), 4.0 * SQRT_2, max_relative = 1e-15);

        for m in [8usize, 64, 512] {
            let c = latitude_circle(&s, 0.0, m).unwrap();
            let chord = 2.0 * ((PI / m as f64).sin()).asin();
            assert_relative_eq!(c.length(), m as f64 * chord, max_relative = 1e-13);
        }
        let fine = latitude_circle(&s, 0.0, 4096).unwrap();
        assert!((fine.length() - TAU).abs() < 1e-12 * 4096.0);
    }

    #[test]
    fn energy_examples() {
        let s = sphere();
        let eq = latitude_circle(&s, 0.0, 256).unwrap();
        let scaled_eq = eq.length();
        assert_relative_eq!(eq.energy(), scaled_eq * scaled_eq / TAU, max_relative = 1e-13);
        assert!(eq.is_constant_speed());
        assert_relative_eq!(square().energy(), 8.0 / PI, max_relative = 1e-14);
        assert!(square().is_constant_speed());
    }

    #[test]
    fn energy_approx_converges() {
        let eq = latitude_circle(&sphere(), 0.0, 512).unwrap();
        let approx = eq.energy_approx(1e-3, 4096).unwrap();
        assert!((approx / eq.energy() - 1.0).abs() < 1e-4);

        let s = sphere();
        let pole = DiscreteClosedCurve::point_curve(s, s.origin()).unwrap();
        assert_eq!(pole.energy_approx(1e-3, 64).unwrap(), 0.0);

        let sq = square();
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&eps| (sq.energy_approx(eps, 1 << 14).unwrap() - sq.energy()).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..2.5).contains(&ratio), "ratio {ratio}");
        }
        assert!(sq.energy_approx(0.0, 64).is_err());
        assert!(sq.energy_approx(0.1, 10).is_err());
    }

    #[test]
    fn reparametrize_examples() {
        let sq = square();
        let r = sq.reparametrize_constant_speed().unwrap();
        for (a, b) in r.params().iter().zip(sq.params()) {
            assert!((a - b).abs() < 1e-12);
        }

        let e = ModelSpace::euclidean();
        let lop = DiscreteClosedCurve::new(
            e,
            vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(-1.0, 0.0)],
            vec![0.0, PI, 1.5 * PI],
        )
        .unwrap();
        // segments: 1 on [0, π], 2 on [π, 3π/2], 1 on [3π/2, 2π]
        assert_eq!(lop.segment_lengths(), &[1.0, 2.0, 1.0]);
        let r = lop.reparametrize_constant_speed().unwrap();
        assert_relative_eq!(r.params()[1], TAU / 4.0, max_relative = 1e-15);
        assert_relative_eq!(r.params()[2], 3.0 * TAU / 4.0, max_relative = 1e-15);
        assert!(r.is_constant_speed());
        assert!(r.energy() < lop.energy());
        assert_relative_eq!(r.energy(), r.length().powi(2) / TAU, max_relative = 1e-14);

        let pole = DiscreteClosedCurve::point_curve(e, Point::xy(1.0, 1.0)).unwrap();
        assert_eq!(pole.reparametrize_constant_speed(), Err(Error::ZeroLength));
    }

    #[test]
    fn length_one_then_three_on_equal_halves() {
        let e = ModelSpace::euclidean();
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let c = DiscreteClosedCurve::new(
            e,
            pts.iter().map(|&(x, y)| Point::xy(x, y)).collect(),
            vec![0.0, PI, 4.0 * PI / 3.0, 5.0 * PI / 3.0],
        )
        .unwrap();
        let r = c.reparametrize_constant_speed().unwrap();
        assert_relative_eq!(r.params()[1], PI / 2.0, max_relative = 1e-15);
        assert!(r.energy() < c.energy());
    }

    #[test]
    fn zero_length_segments_are_merged() {
        let e = ModelSpace::euclidean();
        let c = DiscreteClosedCurve::uniform(
            e,
            vec![
                Point::xy(0.0, 0.0),
                Point::xy(1.0, 0.0),
                Point::xy(1.0, 0.0),
                Point::xy(0.0, 1.0),
            ],
        )
        .unwrap();
        let r = c.reparametrize_constant_speed().unwrap();
        assert_eq!(r.n_breaks(), 3);
        assert_relative_eq!(r.length(), c.length(), max_relative = 1e-15);
    }

    #[test]
    fn fixing_reparametrization_keeps_point() {
        let s = sphere();
        let c = random_curve(&s, &s.origin(), 0.5, 9, 4);
        for t0 in [0.0, 0.3, 2.0, 5.9] {
            let r = c.reparametrize_fixing(t0).unwrap();
            assert!(s.dist(&r.eval(t0), &c.eval(t0)).unwrap() < 1e-12);
            assert!(r.is_constant_speed());
            assert!((r.length() - c.length()).abs() < 1e-12);
        }
    }

    #[test]
    fn w12_examples() {
        let t = torus();
        let loop_at = |v: f64| {
            let pts = (0..16).map(|j| t.point(&[j as f64 / 16.0, v]).unwrap()).collect();
            DiscreteClosedCurve::uniform(t, pts).unwrap()
        };
        let (a, b) = (loop_at(0.1), loop_at(0.13));
        let d = a.w12_dist(&b, 1024).unwrap();
        assert_relative_eq!(d.total, 0.03 * TAU.sqrt(), max_relative = 1e-9);
        assert!(d.deriv_part < 1e-20);
        assert_eq!(a.w12_dist(&a, 64).unwrap().total, 0.0);
        assert!(a.w12_dist(&b, 32).is_err());
        let sq = square();
        assert!(sq.w12_dist(&a, 64).is_err());
    }

    #[test]
    fn w12_triangle_and_embedding() {
        let s = sphere();
        let c = s.origin();
        let c_emb = 1.0 + 1.0 / TAU;
        for seed in 0..1000 {
            let a = random_curve(&s, &c, 0.2, 6, 3 * seed);
            let b = random_curve(&s, &c, 0.2, 7, 3 * seed + 1);
            let w = random_curve(&s, &c, 0.2, 5, 3 * seed + 2);
            let ab = a.w12_dist(&b, 256).unwrap().total;
            let aw = a.w12_dist(&w, 256).unwrap().total;
            let wb = w.w12_dist(&b, 256).unwrap().total;
            assert!(ab <= aw + wb + 1e-12);
            assert_relative_eq!(ab, b.w12_dist(&a, 256).unwrap().total, max_relative = 1e-12);
            if seed < 100 {
                let sup = a
                    .sample(256)
                    .iter()
                    .zip(b.sample(256))
                    .map(|(p, q)| s.dist_raw(p, &q))
                    .fold(0.0, f64::max);
                assert!(sup * sup <= c_emb * ab * ab + 1e-12);
            }
        }
    }

    #[test]
    fn holder_examples() {
        let s = sphere();
        let eq = latitude_circle(&s, 0.0, 128).unwrap();
        let ratio = eq.holder_check();
        // the polygon is the equator itself: d = arc for every pair, so the
        // ratio is arc/energy, worst for antipodal pairs (π/2π)
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-12);
        assert!(ratio < 1.0);
        let pole = DiscreteClosedCurve::point_curve(s, s.origin()).unwrap();
        assert_eq!(pole.holder_check(), 0.0);
        for seed in 0..20 {
            let c = random_curve(&s, &s.origin(), 0.6, 11, seed);
            assert!(c.holder_check() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn torus_winding() {
        let t = torus();
        let pts = (0..10)
            .map(|j| t.point(&[j as f64 / 10.0, 0.3 + 0.02 * j as f64]).unwrap())
            .collect();
        let c = DiscreteClosedCurve::uniform(t, pts).unwrap();
        assert_eq!(c.winding(), Some([1, 0]));
        let pts = (0..10).map(|j| t.point(&[0.0, -(j as f64) / 10.0]).unwrap()).collect();
        let c = DiscreteClosedCurve::uniform(t, pts).unwrap();
        assert_eq!(c.winding(), Some([0, -1]));
        assert_eq!(square().winding(), None);
    }

    #[test]
    fn json_round_trip() {
        let t = torus();
        let pts = (0..5).map(|j| t.point(&[j as f64 / 5.0, 0.25]).unwrap()).collect();
        let c = DiscreteClosedCurve::uniform(t, pts).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"space\":\"flat_torus\""));
        let back: DiscreteClosedCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"space":"sphere","curvature":1.0,"breaks":[[2.0,0.0,0.0]],"params":[0.0]}"#;
        assert!(serde_json::from_str::<DiscreteClosedCurve>(bad).is_err());
    }

    #[test]
    fn lipschitz_and_lambda() {
        let sq = square();
        assert!(sq.clone().with_lipschitz_bound(0.5).is_err());
        let ok = sq.clone().with_lipschitz_bound(1.0).unwrap();
        assert_eq!(ok.lipschitz_bound(), Some(1.0));
        assert!(sq.check_lambda(1.0, 1.0).is_ok());
        assert!(matches!(sq.check_lambda(0.9, 1.0), Err(Error::NotInLambda(_))));
        assert!(matches!(sq.check_lambda(1.0, 0.5), Err(Error::NotInLambda(_))));
    }

    proptest! {
        #[test]
        fn length_squared_at_most_two_pi_energy(seed in 0u64..5000) {
            let s = sphere();
            let c = random_curve(&s, &s.origin(), 0.7, 3 + (seed % 9) as usize, seed);
            let l = c.length();
            prop_assert!(l * l <= TAU * c.energy() * (1.0 + 1e-12));
            let r = c.reparametrize_constant_speed().unwrap();
            prop_assert!((r.length() - l).abs() <= 1e-12 * l);
            prop_assert!((l * l - TAU * r.energy()).abs() <= 1e-12 * l * l);
            for (a, b) in r.breaks().iter().zip(c.breaks()) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn cyclic_relabeling_is_invisible(seed in 0u64..5000, k in 0usize..8) {
            let t = torus();
            let c = random_curve(&t, &Point::xy(0.5, 0.5), 0.2, 8, seed);
            let r = c.rotated(k).unwrap();
            prop_assert!((r.length() - c.length()).abs() <= 1e-14);
            prop_assert!((r.energy() - c.energy()).abs() <= 1e-12 * c.energy());
            prop_assert!(c.w12_dist(&r, 128).unwrap().total <= 1e-12);
            prop_assert!((r.holder_check() - c.holder_check()).abs() <= 1e-12);
        }
    }
}

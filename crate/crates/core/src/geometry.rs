//! Distance and geodesic kernels for the two-dimensional model spaces.
//!
//! Points carry raw coordinates; the [`ModelSpace`] owns their meaning:
//!
//! | kind        | coordinates | constraint                         |
//! |-------------|-------------|------------------------------------|
//! | Sphere      | `(x, y, z)` | `x² + y² + z² = 1/K`               |
//! | Euclidean   | `(x, y)`    | none                               |
//! | Hyperbolic  | `(t, x, y)` | `−t² + x² + y² = 1/K`, `t > 0`     |
//! | FlatTorus   | `(u, v)`    | `0 ≤ u < p₁`, `0 ≤ v < p₂`         |

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the sphere / hyperboloid coordinate constraints.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Radius returned by [`ModelSpace::safe_radius`] for `K ≤ 0` unless overridden.
pub const DEFAULT_FLAT_RADIUS_CAP: f64 = 1e6;

/// Angular distance from the antipode below which a spherical geodesic is ambiguous.
const ANTIPODAL_GUARD: f64 = 1e-9;

/// Relative distance from half a period below which a torus geodesic is a tie.
const TORUS_TIE_GUARD: f64 = 1e-12;

/// Sampling radius limit on the hyperboloid, in units of the curvature radius.
const HYPERBOLIC_SAMPLING_LIMIT: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Sphere,
    Euclidean,
    Hyperbolic,
    FlatTorus,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Sphere => "sphere",
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Hyperbolic => "hyperbolic",
            SpaceKind::FlatTorus => "flat_torus",
        }
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(SpaceKind::Sphere),
            "euclidean" | "plane" => Ok(SpaceKind::Euclidean),
            "hyperbolic" => Ok(SpaceKind::Hyperbolic),
            "flat_torus" | "flattorus" | "torus" => Ok(SpaceKind::FlatTorus),
            other => Err(Error::InvalidSpace(format!("unknown space kind `{other}`"))),
        }
    }
}

/// Serialized form of a [`ModelSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub curvature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<[f64; 2]>,
}

/// A two-dimensional model space of constant curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct ModelSpace {
    kind: SpaceKind,
    curvature: f64,
    periods: [f64; 2],
    flat_radius_cap: f64,
}

impl TryFrom<SpaceSpec> for ModelSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        ModelSpace::new(spec.kind, spec.curvature, spec.periods)
    }
}

impl From<ModelSpace> for SpaceSpec {
    fn from(s: ModelSpace) -> Self {
        SpaceSpec {
            kind: s.kind,
            curvature: s.curvature,
            periods: s.periods(),
        }
    }
}

/// Radius of a ball inside which the convexity inequalities are expected to hold.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SafeRadius(f64);

impl SafeRadius {
    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(SafeRadius(rho))
        } else {
            Err(Error::InvalidSpace(format!("safe radius must be positive, got {rho}")))
        }
    }

    pub fn rho(self) -> f64 {
        self.0
    }
}

/// A coordinate tuple; see the module table for its interpretation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    c: [f64; 3],
    dim: u8,
}

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Point { c: [x, y, 0.0], dim: 2 }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point { c: [x, y, z], dim: 3 }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        match *coords {
            [x, y] => Ok(Point::xy(x, y)),
            [x, y, z] => Ok(Point::xyz(x, y, z)),
            _ => Err(Error::InvalidPoint(format!(
                "expected 2 or 3 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    pub fn len(&self) -> usize {
        self.dim as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn arr(&self) -> [f64; 3] {
        self.c
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn axpy3(s: f64, a: [f64; 3], t: f64, b: [f64; 3]) -> [f64; 3] {
    [s * a[0] + t * b[0], s * a[1] + t * b[1], s * a[2] + t * b[2]]
}

/// Minkowski form `−t t' + x x' + y y'`.
fn mink(a: [f64; 3], b: [f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Representative of `d` in `[-p/2, p/2]`.
fn wrap_delta(d: f64, p: f64) -> f64 {
    d - p * (d / p).round()
}

fn reduce_mod(x: f64, p: f64) -> f64 {
    let r = x.rem_euclid(p);
    if r >= p {
        0.0
    } else {
        r
    }
}

impl ModelSpace {
    pub fn new(kind: SpaceKind, curvature: f64, periods: Option<[f64; 2]>) -> Result<Self> {
        if !curvature.is_finite() {
            return Err(Error::InvalidSpace("curvature must be finite".into()));
        }
        let ok = match kind {
            SpaceKind::Sphere => curvature > 0.0,
            SpaceKind::Hyperbolic => curvature < 0.0,
            SpaceKind::Euclidean | SpaceKind::FlatTorus => curvature == 0.0,
        };
        if !ok {
            return Err(Error::InvalidSpace(format!(
                "curvature {curvature} does not match kind {}",
                kind.name()
            )));
        }
        let periods = match (kind, periods) {
            (SpaceKind::FlatTorus, Some(p)) => {
                if !(p[0].is_finite() && p[1].is_finite() && p[0] > 0.0 && p[1] > 0.0) {
                    return Err(Error::InvalidSpace(format!(
                        "torus periods must be positive, got {p:?}"
                    )));
                }
                p
            }
            (SpaceKind::FlatTorus, None) => return Err(Error::InvalidSpace("flat torus requires periods".into())),
            (_, Some(_)) => {
                return Err(Error::InvalidSpace(format!(
                    "periods only apply to the flat torus, not {}",
                    kind.name()
                )))
            }
            (_, None) => [0.0, 0.0],
        };
        Ok(ModelSpace {
            kind,
            curvature,
            periods,
            flat_radius_cap: DEFAULT_FLAT_RADIUS_CAP,
        })
    }

    pub fn sphere(curvature: f64) -> Result<Self> {
        Self::new(SpaceKind::Sphere, curvature, None)
    }

    pub fn euclidean() -> Self {
        Self::new(SpaceKind::Euclidean, 0.0, None).expect("euclidean plane is always valid")
    }

    pub fn hyperbolic(curvature: f64) -> Result<Self> {
        Self::new(SpaceKind::Hyperbolic, curvature, None)
    }

    pub fn flat_torus(p1: f64, p2: f64) -> Result<Self> {
        Self::new(SpaceKind::FlatTorus, 0.0, Some([p1, p2]))
    }

    /// Overrides the safe radius reported for `K ≤ 0`.
    pub fn with_flat_radius_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::InvalidSpace(format!("radius cap must be positive, got {cap}")));
        }
        self.flat_radius_cap = cap;
        Ok(self)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn periods(&self) -> Option<[f64; 2]> {
        (self.kind == SpaceKind::FlatTorus).then_some(self.periods)
    }

    pub fn dimension(&self) -> usize {
        2
    }

    /// Number of stored coordinates per point.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Sphere | SpaceKind::Hyperbolic => 3,
            SpaceKind::Euclidean | SpaceKind::FlatTorus => 2,
        }
    }

    /// Curvature radius `1/√|K|`; infinite for flat spaces.
    pub fn radius(&self) -> f64 {
        if self.curvature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.curvature.abs().sqrt()
        }
    }

    /// Distances below this bound are joined by a unique shortest geodesic.
    pub fn injectivity_guard(&self) -> f64 {
        match self.kind {
            SpaceKind::Sphere => PI * self.radius(),
            SpaceKind::FlatTorus => 0.5 * self.periods[0].min(self.periods[1]),
            SpaceKind::Euclidean | SpaceKind::Hyperbolic => f64::INFINITY,
        }
    }

    /// `π/(128√K)` for `K > 0`, otherwise the configured cap.
    pub fn safe_radius(&self) -> SafeRadius {
        if self.curvature > 0.0 {
            SafeRadius(PI / (128.0 * self.curvature.sqrt()))
        } else {
            SafeRadius(self.flat_radius_cap)
        }
    }

    /// A validated point built from raw coordinates; torus coordinates are reduced.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let p = Point::from_slice(coords)?;
        let p = if self.kind == SpaceKind::FlatTorus {
            self.reduce(p)
        } else {
            p
        };
        self.validate(&p)?;
        Ok(p)
    }

    /// A basepoint of the space (north pole, origin, hyperboloid vertex).
    pub fn origin(&self) -> Point {
        match self.kind {
            SpaceKind::Sphere => Point::xyz(0.0, 0.0, self.radius()),
            SpaceKind::Hyperbolic => Point::xyz(self.radius(), 0.0, 0.0),
            SpaceKind::Euclidean | SpaceKind::FlatTorus => Point::xy(0.0, 0.0),
        }
    }

    pub fn validate(&self, p: &Point) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "{} expects {} coordinates, got {}",
                self.kind.name(),
                self.ambient_dim(),
                p.len()
            )));
        }
        if p.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinates {:?}", p.coords())));
        }
        match self.kind {
            SpaceKind::Sphere => {
                let r2 = dot3(p.arr(), p.arr());
                if (r2 * self.curvature - 1.0).abs() > CONSTRAINT_TOL {
                    return Err(Error::InvalidPoint(format!(
                        "|p|² = {r2} off the sphere of curvature {}",
                        self.curvature
                    )));
                }
            }
            SpaceKind::Hyperbolic => {
                let c = p.arr();
                let m = mink(c, c);
                let scale = dot3(c, c).max(1.0 / self.curvature.abs());
                if c[0] <= 0.0 || (m - 1.0 / self.curvature).abs() > CONSTRAINT_TOL * scale {
                    return Err(Error::InvalidPoint(format!(
                        "{:?} is not on the upper hyperboloid of curvature {}",
                        p.coords(),
                        self.curvature
                    )));
                }
            }
            SpaceKind::FlatTorus => {
                let c = p.coords();
                if !(0.0..self.periods[0]).contains(&c[0]) || !(0.0..self.periods[1]).contains(&c[1]) {
                    return Err(Error::InvalidPoint(format!(
                        "torus coordinates {c:?} not reduced to [0, {:?})",
                        self.periods
                    )));
                }
            }
            SpaceKind::Euclidean => {}
        }
        Ok(())
    }

    fn reduce(&self, p: Point) -> Point {
        Point::xy(reduce_mod(p.c[0], self.periods[0]), reduce_mod(p.c[1], self.periods[1]))
    }

    /// Pulls a nearly valid point back onto the constraint surface.
    pub fn normalize(&self, p: Point) -> Point {
        match self.kind {
            SpaceKind::Sphere => {
                let n = norm3(p.arr());
                let c = scale3(p.arr(), self.radius() / n);
                Point::xyz(c[0], c[1], c[2])
            }
            SpaceKind::Hyperbolic => {
                let c = p.arr();
                let m = -mink(c, c);
                let mut c = scale3(c, self.radius() / m.sqrt());
                if c[0] < 0.0 {
                    c = scale3(c, -1.0);
                }
                Point::xyz(c[0], c[1], c[2])
            }
            SpaceKind::FlatTorus => self.reduce(p),
            SpaceKind::Euclidean => p,
        }
    }

    /// Nearest-representative displacement `q − p` on the torus (or plain difference in the plane).
    pub fn flat_delta(&self, p: &Point, q: &Point) -> [f64; 2] {
        let du = q.c[0] - p.c[0];
        let dv = q.c[1] - p.c[1];
        match self.kind {
            SpaceKind::FlatTorus => [wrap_delta(du, self.periods[0]), wrap_delta(dv, self.periods[1])],
            _ => [du, dv],
        }
    }

    pub fn dist(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(self.dist_raw(p, q))
    }

    pub(crate) fn dist_raw(&self, p: &Point, q: &Point) -> f64 {
        match self.kind {
            SpaceKind::Sphere => {
                let (a, b) = (p.arr(), q.arr());
                self.radius() * norm3(cross3(a, b)).atan2(dot3(a, b))
            }
            SpaceKind::Hyperbolic => {
                let (a, b) = (p.arr(), q.arr());
                let diff = axpy3(1.0, a, -1.0, b);
                let m = mink(diff, diff).max(0.0);
                let r = self.radius();
                2.0 * r * (m.sqrt() / (2.0 * r)).asinh()
            }
            SpaceKind::Euclidean | SpaceKind::FlatTorus => {
                let d = self.flat_delta(p, q);
                d[0].hypot(d[1])
            }
        }
    }

    /// Errors when `p` and `q` are not joined by a unique shortest geodesic.
    pub fn check_unique(&self, p: &Point, q: &Point) -> Result<()> {
        let ambiguous = match self.kind {
            SpaceKind::Sphere => {
                let theta = self.dist_raw(p, q) / self.radius();
                theta > PI - ANTIPODAL_GUARD
            }
            SpaceKind::FlatTorus => {
                let d = self.flat_delta(p, q);
                (0..2).any(|i| (d[i].abs() - 0.5 * self.periods[i]).abs() <= TORUS_TIE_GUARD * self.periods[i])
            }
            SpaceKind::Euclidean | SpaceKind::Hyperbolic => false,
        };
        if ambiguous {
            Err(Error::AmbiguousGeodesic {
                p: p.coords().to_vec(),
                q: q.coords().to_vec(),
            })
        } else {
            Ok(())
        }
    }

    /// The point a fraction `lambda` of the way along the shortest geodesic from `p` to `q`.
    pub fn interpolate(&self, p: &Point, q: &Point, lambda: f64) -> Result<Point> {
        self.validate(p)?;
        self.validate(q)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidPoint(format!("lambda {lambda} outside [0, 1]")));
        }
        self.check_unique(p, q)?;
        Ok(self.interpolate_raw(p, q, lambda))
    }

    pub fn midpoint(&self, p: &Point, q: &Point) -> Result<Point> {
        self.interpolate(p, q, 0.5)
    }

    pub(crate) fn interpolate_raw(&self, p: &Point, q: &Point, lambda: f64) -> Point {
        if lambda == 0.0 {
            return *p;
        }
        if lambda == 1.0 {
            return *q;
        }
        match self.kind {
            SpaceKind::Sphere => {
                let (a, b) = (p.arr(), q.arr());
                let theta = norm3(cross3(a, b)).atan2(dot3(a, b));
                if theta == 0.0 {
                    return *p;
                }
                let s = theta.sin();
                let c = axpy3(((1.0 - lambda) * theta).sin() / s, a, (lambda * theta).sin() / s, b);
                self.normalize(Point::xyz(c[0], c[1], c[2]))
            }
            SpaceKind::Hyperbolic => {
                let theta = self.dist_raw(p, q) / self.radius();
                if theta == 0.0 {
                    return *p;
                }
                let s = theta.sinh();
                let c = axpy3(
                    ((1.0 - lambda) * theta).sinh() / s,
                    p.arr(),
                    (lambda * theta).sinh() / s,
                    q.arr(),
                );
                self.normalize(Point::xyz(c[0], c[1], c[2]))
            }
            SpaceKind::Euclidean => Point::xy(p.c[0] + lambda * (q.c[0] - p.c[0]), p.c[1] + lambda * (q.c[1] - p.c[1])),
            SpaceKind::FlatTorus => {
                let d = self.flat_delta(p, q);
                self.reduce(Point::xy(p.c[0] + lambda * d[0], p.c[1] + lambda * d[1]))
            }
        }
    }

    /// Orthonormal frame of the tangent plane at `p`, as ambient vectors.
    fn tangent_frame(&self, p: &Point) -> ([f64; 3], [f64; 3]) {
        match self.kind {
            SpaceKind::Sphere => {
                let n = scale3(p.arr(), 1.0 / self.radius());
                let axis = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap_or(0);
                let mut a = [0.0; 3];
                a[axis] = 1.0;
                let e1 = axpy3(1.0, a, -dot3(a, n), n);
                let e1 = scale3(e1, 1.0 / norm3(e1));
                (e1, cross3(n, e1))
            }
            SpaceKind::Hyperbolic => {
                let n = scale3(p.arr(), 1.0 / self.radius());
                let a1 = [0.0, 1.0, 0.0];
                let v1 = axpy3(1.0, a1, mink(a1, n), n);
                let e1 = scale3(v1, 1.0 / mink(v1, v1).sqrt());
                let a2 = [0.0, 0.0, 1.0];
                let v2 = axpy3(1.0, axpy3(1.0, a2, mink(a2, n), n), -mink(a2, e1), e1);
                let e2 = scale3(v2, 1.0 / mink(v2, v2).sqrt());
                (e1, e2)
            }
            SpaceKind::Euclidean | SpaceKind::FlatTorus => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        }
    }

    /// Exponential map at `center` applied to tangent coordinates `v` in the canonical frame.
    pub fn exp(&self, center: &Point, v: [f64; 2]) -> Point {
        let len = v[0].hypot(v[1]);
        if len == 0.0 {
            return *center;
        }
        match self.kind {
            SpaceKind::Euclidean => Point::xy(center.c[0] + v[0], center.c[1] + v[1]),
            SpaceKind::FlatTorus => self.reduce(Point::xy(center.c[0] + v[0], center.c[1] + v[1])),
            SpaceKind::Sphere | SpaceKind::Hyperbolic => {
                let (e1, e2) = self.tangent_frame(center);
                let dir = axpy3(v[0] / len, e1, v[1] / len, e2);
                let r = self.radius();
                let theta = len / r;
                let (c, s) = if self.kind == SpaceKind::Sphere {
                    (theta.cos(), theta.sin())
                } else {
                    (theta.cosh(), theta.sinh())
                };
                let out = axpy3(c, center.arr(), s * r, dir);
                self.normalize(Point::xyz(out[0], out[1], out[2]))
            }
        }
    }

    /// Largest radius accepted by the ball sampler at any center.
    pub fn sampling_guard(&self) -> f64 {
        match self.kind {
            SpaceKind::Hyperbolic => HYPERBOLIC_SAMPLING_LIMIT * self.radius(),
            _ => self.injectivity_guard(),
        }
    }

    /// Draws a point within distance `r` of `center` from a caller-owned generator.
    ///
    /// Tangent coordinates are drawn uniformly in the disk of radius `r` by rejection
    /// from the enclosing square, then mapped through [`ModelSpace::exp`].
    pub fn sample_in_ball<R: Rng + ?Sized>(&self, center: &Point, r: f64, rng: &mut R) -> Result<Point> {
        if !(r >= 0.0) || r >= self.sampling_guard() {
            return Err(Error::RadiusTooLarge {
                r,
                guard: self.sampling_guard(),
            });
        }
        self.validate(center)?;
        if r == 0.0 {
            return Ok(*center);
        }
        loop {
            let v = [rng.gen_range(-r..=r), rng.gen_range(-r..=r)];
            if v[0].hypot(v[1]) > r {
                continue;
            }
            let p = self.exp(center, v);
            if self.dist_raw(center, &p) <= r {
                return Ok(p);
            }
        }
    }

    /// Deterministic single draw: the same `seed` always yields the same point.
    pub fn random_point_in_ball(&self, center: &Point, r: f64, seed: u64) -> Result<Point> {
        let mut rng = stream_rng(seed, 0);
        self.sample_in_ball(center, r, &mut rng)
    }
}

/// Counter-based generator for `(seed, stream)`; independent streams per sample index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

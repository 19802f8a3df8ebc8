//! K-plane comparison figures and quadrilateral quantities for ordered quadruples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};

/// Slack allowed when checking triangle inequalities of measured lengths.
const EMBED_TOL: f64 = 1e-12;

/// An ordered quadruple `A, D, C, B`; sides are `AB`, `CD`, `AD`, `BC`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadruple {
    pub space: ModelSpace,
    pub a: Point,
    pub d: Point,
    pub c: Point,
    pub b: Point,
}

impl Quadruple {
    pub fn new(space: ModelSpace, a: Point, d: Point, c: Point, b: Point) -> Result<Self> {
        for p in [&a, &b, &c, &d] {
            space.validate(p)?;
        }
        if a == b {
            return Err(Error::DegenerateQuadruple("A = B".into()));
        }
        if c == d {
            return Err(Error::DegenerateQuadruple("C = D".into()));
        }
        Ok(Quadruple { space, a, d, c, b })
    }
}

/// The eleven lengths attached to a quadruple.
///
/// `a=d(A,B)`, `b=d(C,D)`, `x=d(A,D)`, `y=d(B,C)`, `h=d(A,C)`, `i=d(B,D)`,
/// `g=d(E,F)` with `E`, `F` the midpoints of `AB`, `CD`, and
/// `c=d(E,D)`, `dd=d(A,F)`, `e=d(B,F)`, `f=d(E,C)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleStats {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub i: f64,
    pub g: f64,
    pub c: f64,
    pub dd: f64,
    pub e: f64,
    pub f: f64,
}

impl QuadrupleStats {
    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        QuadrupleStats {
            a: self.a * s,
            b: self.b * s,
            x: self.x * s,
            y: self.y * s,
            h: self.h * s,
            i: self.i * s,
            g: self.g * s,
            c: self.c * s,
            dd: self.dd * s,
            e: self.e * s,
            f: self.f * s,
        }
    }

    pub fn as_array(&self) -> [f64; 11] {
        [
            self.a, self.b, self.x, self.y, self.h, self.i, self.g, self.c, self.dd, self.e, self.f,
        ]
    }
}

pub fn quadruple_stats(q: &Quadruple) -> Result<QuadrupleStats> {
    let s = &q.space;
    let e_mid = s.midpoint(&q.a, &q.b)?;
    let f_mid = s.midpoint(&q.c, &q.d)?;
    Ok(QuadrupleStats {
        a: s.dist(&q.a, &q.b)?,
        b: s.dist(&q.c, &q.d)?,
        x: s.dist(&q.a, &q.d)?,
        y: s.dist(&q.b, &q.c)?,
        h: s.dist(&q.a, &q.c)?,
        i: s.dist(&q.b, &q.d)?,
        g: s.dist(&e_mid, &f_mid)?,
        c: s.dist(&e_mid, &q.d)?,
        dd: s.dist(&q.a, &f_mid)?,
        e: s.dist(&q.b, &f_mid)?,
        f: s.dist(&e_mid, &q.c)?,
    })
}

/// `2 sin²(z/2) = 1 − cos z`, without cancellation for small `z`.
fn versin(z: f64) -> f64 {
    let s = (0.5 * z).sin();
    2.0 * s * s
}

/// The K-quadrilateral cosine of `(DA, CB)`.
///
/// `K = 0` evaluates `(a²+b²−h²−i²)/(2xy)`. `K > 0` evaluates
///
/// ```text
/// cos ka + cos ky cos kx cos kb + cos ka cos kb − cos ky cos kh − cos kx cos ki − cos kh cos ki
/// ─────────────────────────────────────────────────────────────────────────────────────────────
///                               (1 + cos kb) sin kx sin ky
/// ```
///
/// with the numerator rewritten in terms of `1 − cos` so that small
/// quadruples do not lose every significant digit.
pub fn cosq(k_curv: f64, s: &QuadrupleStats) -> Result<f64> {
    if k_curv < 0.0 || !k_curv.is_finite() {
        return Err(Error::InvalidSpace(format!(
            "cosq is defined for K >= 0 only, got {k_curv}"
        )));
    }
    if !(s.x > 0.0 && s.y > 0.0) {
        return Err(Error::DegenerateQuadruple(format!(
            "cosq needs x > 0 and y > 0 (x = {}, y = {})",
            s.x, s.y
        )));
    }
    if k_curv == 0.0 {
        return Ok((s.a * s.a + s.b * s.b - s.h * s.h - s.i * s.i) / (2.0 * s.x * s.y));
    }
    let k = k_curv.sqrt();
    let [ua, ub, ux, uy, uh, ui] = [s.a, s.b, s.x, s.y, s.h, s.i].map(|z| versin(k * z));
    let num =
        2.0 * (uh + ui - ua - ub) + ux * uy + uy * ub + ux * ub + ua * ub - uy * uh - ux * ui - uh * ui - ux * uy * ub;
    let den = (2.0 - ub) * (k * s.x).sin() * (k * s.y).sin();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateQuadruple("(1 + cos kb) sin kx sin ky vanishes".into()));
    }
    Ok(num / den)
}

/// The printed trigonometric expression evaluated term by term; reference only.
pub fn cosq_direct(k_curv: f64, s: &QuadrupleStats) -> f64 {
    let k = k_curv.sqrt();
    let c = |z: f64| (k * z).cos();
    let num = c(s.a) + c(s.y) * c(s.x) * c(s.b) + c(s.a) * c(s.b) - c(s.y) * c(s.h) - c(s.x) * c(s.i) - c(s.h) * c(s.i);
    num / ((1.0 + c(s.b)) * (k * s.x).sin() * (k * s.y).sin())
}

/// The `K → 0` limit of the `K > 0` branch of [`cosq`]: `(h²+i²−a²−b²)/(2xy)`.
pub fn cosq_zero_limit(s: &QuadrupleStats) -> Result<f64> {
    cosq(0.0, s).map(|v| -v)
}

/// The model plane of curvature `k_curv`.
pub fn k_plane(k_curv: f64) -> Result<ModelSpace> {
    if k_curv > 0.0 {
        ModelSpace::sphere(k_curv)
    } else if k_curv < 0.0 {
        ModelSpace::hyperbolic(k_curv)
    } else {
        Ok(ModelSpace::euclidean())
    }
}

/// Angle at the vertex between sides `p` and `q` of a K-plane triangle whose opposite side is `o`.
fn vertex_angle(k_curv: f64, p: f64, q: f64, o: f64) -> Result<f64> {
    let scale = p.max(q).max(o).max(1e-300);
    let tol = EMBED_TOL * scale;
    if o > p + q + tol || p > o + q + tol || q > o + p + tol {
        return Err(Error::Unembeddable(format!(
            "sides {p}, {q}, {o} violate the triangle inequality"
        )));
    }
    if k_curv > 0.0 {
        let k = k_curv.sqrt();
        if k * (p + q + o) >= 2.0 * std::f64::consts::PI {
            return Err(Error::Unembeddable(format!(
                "perimeter {} is not below 2π/√K",
                p + q + o
            )));
        }
    }
    if p == 0.0 || q == 0.0 {
        return Ok(0.0);
    }
    let u = (o - p + q).max(0.0);
    let v = (o + p - q).max(0.0);
    let hav = if k_curv == 0.0 {
        u * v / (4.0 * p * q)
    } else if k_curv > 0.0 {
        let k = k_curv.sqrt();
        (0.5 * k * u).sin() * (0.5 * k * v).sin() / ((k * p).sin() * (k * q).sin())
    } else {
        let k = (-k_curv).sqrt();
        (0.5 * k * u).sinh() * (0.5 * k * v).sinh() / ((k * p).sinh() * (k * q).sinh())
    };
    Ok(2.0 * hav.clamp(0.0, 1.0).sqrt().asin())
}

/// A comparison quadrilateral `Ā, D̄, C̄, B̄` in the K-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonQuad {
    pub plane: ModelSpace,
    pub a: Point,
    pub d: Point,
    pub c: Point,
    pub b: Point,
}

impl ComparisonQuad {
    /// `d_K(Ā, C̄)`.
    pub fn diagonal_h(&self) -> f64 {
        self.plane.dist_raw(&self.a, &self.c)
    }

    pub fn points(&self) -> [Point; 4] {
        [self.a, self.d, self.c, self.b]
    }
}

/// Glues the comparison triangles of `A, D, B` and `D, C, B` along `BD`, with
/// `Ā` and `C̄` on opposite sides of the diagonal.
pub fn comparison_quadrilateral(k_curv: f64, s: &QuadrupleStats) -> Result<ComparisonQuad> {
    let plane = k_plane(k_curv)?;
    let alpha = vertex_angle(k_curv, s.x, s.i, s.a)?;
    let beta = vertex_angle(k_curv, s.b, s.i, s.y)?;
    let beta = if s.i == 0.0 { std::f64::consts::PI } else { beta };
    let d = plane.origin();
    let b = plane.exp(&d, [s.i, 0.0]);
    let a = plane.exp(&d, [s.x * alpha.cos(), s.x * alpha.sin()]);
    let c = plane.exp(&d, [s.b * beta.cos(), -s.b * beta.sin()]);
    Ok(ComparisonQuad { plane, a, d, c, b })
}

/// Both sides of `¼(a−b)² ≤ x² + y² − 2g²`.
pub fn convexity_residual(q: &Quadruple) -> Result<(f64, f64)> {
    let s = quadruple_stats(q)?;
    Ok(residual_from_stats(&s))
}

pub fn residual_from_stats(s: &QuadrupleStats) -> (f64, f64) {
    let lhs = 0.25 * (s.a - s.b) * (s.a - s.b);
    let rhs = s.x * s.x + s.y * s.y - 2.0 * s.g * s.g;
    (lhs, rhs)
}

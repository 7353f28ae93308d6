//! Projection geometry.
//!
//! The inverse stereographic projection (ISP) used throughout maps the plane
//! `z = 0` onto the sphere `S²(r)` centred at the origin, projecting from the
//! north pole `N = (0, 0, r)`:
//!
//! ```text
//! s_x = p_x · 2r² / (‖p‖² + r²)
//! s_y = p_y · 2r² / (‖p‖² + r²)
//! s_z = r · (‖p‖² − r²) / (‖p‖² + r²)
//! ```
//!
//! The origin lands on the south pole, the circle `‖p‖ = r` on the equator,
//! and `N` itself is never reached. The polar angle of the image depends only
//! on the height of `N` above the plane, not on the sphere's radius, so moving
//! the sphere and rescaling it give the same angles.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A received I/Q symbol, or any point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Polar (`theta ∈ [0, π]`) and azimuthal (`phi ∈ (−π, π]`) angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereAngles {
    pub theta: f64,
    pub phi: f64,
}

/// Semi-axes of an axis-aligned ellipsoid; `c` lies along the projection-pole axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    a: f64,
    b: f64,
    c: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match *v {
            [x, y, z] => Ok(Point3::new(x, y, z)),
            _ => Err(Error::invalid(format!(
                "expected 3 coordinates, got {}",
                v.len()
            ))),
        }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `self / ‖self‖`; fails on the zero vector.
    pub fn normalized(self) -> Result<Point3> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateDirection(format!(
                "cannot normalise {self:?}"
            )));
        }
        Ok(self * (1.0 / n))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl SphereAngles {
    /// Unit vector `(sin θ cos φ, sin θ sin φ, cos θ)`.
    pub fn unit_vector(self) -> Point3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Point3::new(st * cp, st * sp, ct)
    }
}

impl EllipsoidSpec {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if [a, b, c].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(EllipsoidSpec { a, b, c })
        } else {
            Err(Error::invalid(format!(
                "ellipsoid semi-axes must be positive and finite, got ({a}, {b}, {c})"
            )))
        }
    }

    pub fn sphere(r: f64) -> Result<Self> {
        Self::new(r, r, r)
    }

    pub fn axes(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "radius must be positive and finite, got {r}"
        )))
    }
}

fn check_point(p: Point2) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite point {p:?}")))
    }
}

/// `atan2` folded into `(−π, π]`; `atan2(±0, −x)` would otherwise yield `−π`.
fn azimuth(y: f64, x: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let phi = y.atan2(x);
    if phi <= -PI {
        PI
    } else {
        phi
    }
}

/// Inverse stereographic projection of `p` onto `S²(r)` from the pole `(0, 0, r)`.
pub fn isp(p: Point2, r: f64) -> Result<Point3> {
    check_radius(r)?;
    check_point(p)?;
    let n2 = p.norm_sq();
    let r2 = r * r;
    let denom = n2 + r2;
    let k = 2.0 * r2 / denom;
    Ok(Point3::new(p.x * k, p.y * k, r * (n2 - r2) / denom))
}

/// Angles of `isp(p, r)` computed directly from the planar point.
///
/// The origin maps to `theta = π, phi = 0`.
pub fn isp_angles(p: Point2, r: f64) -> Result<SphereAngles> {
    check_radius(r)?;
    check_point(p)?;
    let n = p.norm();
    if n == 0.0 {
        return Ok(SphereAngles {
            theta: PI,
            phi: 0.0,
        });
    }
    Ok(SphereAngles {
        theta: 2.0 * (r / n).atan(),
        phi: azimuth(p.y, p.x),
    })
}

/// Inverse stereographic projection of a `d`-dimensional point onto `S^d(r)`.
///
/// The output has `d + 1` coordinates with the pole axis **first**:
/// `s₀ = r(‖p‖² − r²)/(‖p‖² + r²)`, `sᵢ = 2r²xᵢ/(‖p‖² + r²)`. For `d = 2`
/// this is `[isp.z, isp.x, isp.y]`.
pub fn isp_general_dim(p: &[f64], r: f64) -> Result<Vec<f64>> {
    check_radius(r)?;
    if p.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite coordinate"));
    }
    let n2: f64 = p.iter().map(|v| v * v).sum();
    let r2 = r * r;
    let denom = n2 + r2;
    let mut out = Vec::with_capacity(p.len() + 1);
    out.push(r * (n2 - r2) / denom);
    out.extend(p.iter().map(|x| 2.0 * r2 * x / denom));
    Ok(out)
}

/// Projection onto the ellipsoid `x²/a² + y²/b² + z²/c² = 1` from the pole `(0, 0, c)`.
pub fn ellipsoidal_project(p: Point2, e: EllipsoidSpec) -> Result<Point3> {
    check_point(p)?;
    let q = p.x * p.x / (e.a * e.a) + p.y * p.y / (e.b * e.b);
    let k = 2.0 / (q + 1.0);
    Ok(Point3::new(p.x * k, p.y * k, e.c * (q - 1.0) / (q + 1.0)))
}

/// Polar/azimuthal angles of [`ellipsoidal_project`], from the ellipsoid's centre.
///
/// `tan(π − θ) = √(s_x² + s_y²) / (−s_z)`, which in terms of `p` is
/// `θ = atan2(2‖p‖, c(q − 1))` with `q = p_x²/a² + p_y²/b²`.
pub fn ellipsoidal_angles(p: Point2, e: EllipsoidSpec) -> Result<SphereAngles> {
    check_point(p)?;
    let q = p.x * p.x / (e.a * e.a) + p.y * p.y / (e.b * e.b);
    Ok(SphereAngles {
        theta: (2.0 * p.norm()).atan2(e.c * (q - 1.0)),
        phi: azimuth(p.y, p.x),
    })
}

/// Polar and azimuthal angles of a nonzero vector.
pub fn angles_of(v: Point3) -> Result<SphereAngles> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateDirection(format!(
            "no direction for {v:?}"
        )));
    }
    Ok(SphereAngles {
        // equals acos(z/‖v‖), without acos's loss of precision near the poles
        theta: v.x.hypot(v.y).atan2(v.z),
        phi: azimuth(v.y, v.x),
    })
}

/// Forward stereographic projection from `(0, 0, r)`: sends the ray through
/// `s` back to the plane. `s` is first pushed radially onto `S²(r)`, so any
/// nonzero vector (e.g. an interior 3D centroid) has a planar image.
pub fn stereographic(s: Point3, r: f64) -> Result<Point2> {
    check_radius(r)?;
    let on_sphere = s.normalized()? * r;
    let gap = r - on_sphere.z;
    if gap <= 0.0 {
        return Err(Error::DegenerateDirection(
            "the projection pole has no planar image".into(),
        ));
    }
    let k = r / gap;
    Ok(Point2::new(on_sphere.x * k, on_sphere.y * k))
}

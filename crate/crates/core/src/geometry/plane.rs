use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Result};

/// Plane `alpha x + beta y + gamma z + d = 0` in camera coordinates.
///
/// Always normalized: `(alpha, beta, gamma)` has unit length and `d > 0`, so
/// the normal points from the plane towards the camera and `d` is the
/// perpendicular camera height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct GroundPlane {
    alpha: f64,
    beta: f64,
    gamma: f64,
    d: f64,
}

impl GroundPlane {
    /// Normalizes raw coefficients. Any non-zero rescaling of the inputs
    /// yields the same plane.
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: f64) -> Result<Self> {
        if ![alpha, beta, gamma, d].iter().all(|x| x.is_finite()) {
            return Err(GeometryError::DegeneratePlane("non-finite coefficient"));
        }
        let norm = alpha.hypot(beta).hypot(gamma);
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeometryError::DegeneratePlane("zero normal"));
        }
        // already unit length: leave untouched so normalization is idempotent
        let inv = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { 1.0 / norm };
        let s = if d < 0.0 { -inv } else { inv };
        let plane = Self { alpha: alpha * s, beta: beta * s, gamma: gamma * s, d: d * s };
        if !(plane.d > 0.0) {
            return Err(GeometryError::DegeneratePlane("camera origin lies on the plane"));
        }
        Ok(plane)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Upward unit normal.
    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.gamma)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.d]
    }

    /// Signed distance of `p` from the plane, positive on the camera side.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal().dot(p) + self.d
    }

    /// The same physical plane seen from a camera whose frame is rotated by
    /// `r` about its centre (`p' = r p`).
    pub fn rotated(&self, r: &Matrix3<f64>) -> Result<Self> {
        let n = r * self.normal();
        Self::new(n.x, n.y, n.z, self.d)
    }
}

impl TryFrom<[f64; 4]> for GroundPlane {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<GroundPlane> for [f64; 4] {
    fn from(g: GroundPlane) -> Self {
        g.to_array()
    }
}

/// Roll, pitch and perpendicular height of the camera relative to the ground.
///
/// Pitch rotates about camera x (positive looks down), roll about camera z.
/// Yaw about the ground normal cannot be recovered from a plane and is not
/// represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraAttitude {
    pub roll: f64,
    pub pitch: f64,
    pub height: f64,
}

impl CameraAttitude {
    pub fn new(roll: f64, pitch: f64, height: f64) -> Result<Self> {
        let a = Self { roll, pitch, height };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(GeometryError::Invalid {
                what: "attitude",
                reason: format!("height must be positive, got {}", self.height),
            });
        }
        for (name, angle) in [("roll", self.roll), ("pitch", self.pitch)] {
            if !(angle.abs() < half_pi) {
                return Err(GeometryError::Invalid {
                    what: "attitude",
                    reason: format!("{name} = {angle} outside (-pi/2, pi/2)"),
                });
            }
        }
        Ok(())
    }
}

/// Plane through three points, normalized.
///
/// The raw coefficients are the expanded cross product
/// `(p2 - p1) x (p3 - p1)` with `d' = -n' . p1`.
pub fn plane_from_three_points(
    p1: &Vector3<f64>,
    p2: &Vector3<f64>,
    p3: &Vector3<f64>,
) -> Result<GroundPlane> {
    let (x1, y1, z1) = (p1.x, p1.y, p1.z);
    let (x2, y2, z2) = (p2.x, p2.y, p2.z);
    let (x3, y3, z3) = (p3.x, p3.y, p3.z);
    let a = (y2 - y1) * (z3 - z1) - (y3 - y1) * (z2 - z1);
    let b = (z2 - z1) * (x3 - x1) - (z3 - z1) * (x2 - x1);
    let c = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    let d = -a * x1 - b * y1 - c * z1;

    let e1 = (p2 - p1).norm();
    let e2 = (p3 - p1).norm();
    let n = a.hypot(b).hypot(c);
    // |e1 x e2| = |e1||e2| sin(angle)
    if !(n > 1e-9 * e1 * e2) {
        return Err(GeometryError::CollinearPoints);
    }
    let scale = p1.norm().max(p2.norm()).max(p3.norm()).max(f64::MIN_POSITIVE);
    if (d / n).abs() <= 1e-12 * scale {
        return Err(GeometryError::DegeneratePlane("camera origin lies on the plane"));
    }
    GroundPlane::new(a, b, c, d)
}

/// Converts a ground plane into the camera's roll, pitch and height.
///
/// With the upward normal `n = (sin r cos p, -cos r cos p, -sin p)`:
/// `pitch = asin(-gamma)`, `roll = atan2(alpha, -beta)`, `height = d`.
pub fn plane_to_attitude(g: &GroundPlane) -> Result<CameraAttitude> {
    if !(g.d() > 0.0) {
        return Err(GeometryError::DegeneratePlane("non-positive d"));
    }
    if g.gamma().abs() >= 1.0 - 1e-12 {
        return Err(GeometryError::DegeneratePlane("normal along the optical axis, roll undefined"));
    }
    Ok(CameraAttitude {
        roll: g.alpha().atan2(-g.beta()),
        pitch: (-g.gamma()).clamp(-1.0, 1.0).asin(),
        height: g.d(),
    })
}

/// Inverse of [`plane_to_attitude`].
pub fn attitude_to_plane(a: &CameraAttitude) -> Result<GroundPlane> {
    a.validate()?;
    let (sr, cr) = a.roll.sin_cos();
    let (sp, cp) = a.pitch.sin_cos();
    GroundPlane::new(sr * cp, -cr * cp, -sp, a.height)
}

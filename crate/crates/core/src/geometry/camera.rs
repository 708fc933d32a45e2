use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, GroundPlane, Result, HORIZON_EPS};

/// Image coordinates, `u` = column and `v` = row, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Pinhole intrinsics with zero skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.fx, self.fy, self.cx, self.cy].iter().all(|x| x.is_finite()) {
            return Err(GeometryError::Invalid {
                what: "intrinsics",
                reason: "non-finite entry".into(),
            });
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::SingularIntrinsics { fx: self.fx, fy: self.fy });
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Intrinsics for an image resampled by `factor` (e.g. `1/16` for a
    /// stride-16 feature map).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: self.cx * factor,
            cy: self.cy * factor,
        }
    }

    /// Direction `((u-cx)/fx, (v-cy)/fy, 1)` of the viewing ray through `px`.
    pub fn ray(&self, px: Pixel) -> Vector3<f64> {
        Vector3::new((px.u - self.cx) / self.fx, (px.v - self.cy) / self.fy, 1.0)
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Pixel> {
        project_point(p, self)
    }

    /// Back-projects pixel `px` at depth `z` into the camera frame.
    pub fn back_project(&self, px: Pixel, z: f64) -> Vector3<f64> {
        self.ray(px) * z
    }
}

/// Rigid transform from the world/ground frame to the camera frame:
/// `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraExtrinsics {
    pub const ORTHONORMAL_TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let e = Self { rotation, translation };
        e.validate()?;
        Ok(e)
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rotation.iter().chain(self.translation.iter()).all(|x| x.is_finite()) {
            return Err(GeometryError::Invalid {
                what: "extrinsics",
                reason: "non-finite entry".into(),
            });
        }
        let err = orthonormality_error(&self.rotation);
        if err > Self::ORTHONORMAL_TOL {
            return Err(GeometryError::Invalid {
                what: "extrinsics",
                reason: format!("rotation not orthonormal (max |R^T R - I| = {err:e})"),
            });
        }
        if self.rotation.determinant() <= 0.0 {
            return Err(GeometryError::Invalid {
                what: "extrinsics",
                reason: "rotation has negative determinant".into(),
            });
        }
        Ok(())
    }

    /// Camera centre in world coordinates.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p_world + self.translation
    }

    /// As a row-major 3x4 `[R | t]`.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }
}

/// Largest entry of `|R^T R - I|`.
pub(crate) fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Intrinsics and extrinsics of one roadside camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
}

impl CameraRig {
    /// The world ground plane `{p : n_w . p + d_w = 0}` expressed in camera
    /// coordinates.
    pub fn ground_in_camera(&self, world_normal: &Vector3<f64>, world_d: f64) -> Result<GroundPlane> {
        let n = self.extrinsics.rotation * world_normal;
        let d = world_d - n.dot(&self.extrinsics.translation);
        GroundPlane::new(n[0], n[1], n[2], d)
    }
}

/// Pinhole projection `u = fx x/z + cx`, `v = fy y/z + cy`.
pub fn project_point(p: &Vector3<f64>, k: &CameraIntrinsics) -> Result<Pixel> {
    if !(p.z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(p.z));
    }
    Ok(Pixel { u: k.fx * (p.x / p.z) + k.cx, v: k.fy * (p.y / p.z) + k.cy })
}

/// Depth of the ground point seen through pixel `px`.
///
/// Solves `z [u v 1]^T = K [x y z]^T` together with `G [x y z 1]^T = 0`,
/// which gives `z = -d / (alpha (u-cx)/fx + beta (v-cy)/fy + gamma)`.
pub fn ground_depth_at_pixel(px: Pixel, k: &CameraIntrinsics, g: &GroundPlane) -> Result<f64> {
    let denom = g.normal().dot(&k.ray(px));
    if denom.abs() <= HORIZON_EPS {
        return Err(GeometryError::HorizonRay);
    }
    let z = -g.d() / denom;
    if z <= 0.0 {
        return Err(GeometryError::BehindCamera(z));
    }
    Ok(z)
}

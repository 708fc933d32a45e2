use nalgebra::Matrix3;

use super::{CameraExtrinsics, CameraIntrinsics, Result};

/// Rotation about camera x by `a` (pitch; positive tilts the view down).
pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation about camera z by `a` (roll).
pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `R_pitch(dpitch) * R_roll(droll)`, acting on camera-frame points.
pub fn perturbation_rotation(droll: f64, dpitch: f64) -> Matrix3<f64> {
    rot_x(dpitch) * rot_z(droll)
}

/// Applies a roll/pitch offset to the camera mount.
///
/// The rotation is composed on the camera side and the camera centre is kept
/// in place, so the mounting point does not move: `R' = P R`, `t' = P t`.
pub fn perturb_extrinsics(e: &CameraExtrinsics, droll: f64, dpitch: f64) -> CameraExtrinsics {
    let p = perturbation_rotation(droll, dpitch);
    CameraExtrinsics { rotation: p * e.rotation, translation: p * e.translation }
}

/// Image warp `K P K^-1` taking clean pixels to the pixels of the perturbed
/// camera. A rotation about the optical centre induces this homography on
/// the whole image, ground or not.
pub fn ground_homography(k: &CameraIntrinsics, droll: f64, dpitch: f64) -> Result<Matrix3<f64>> {
    k.validate()?;
    Ok(k.matrix() * perturbation_rotation(droll, dpitch) * k.inverse_matrix())
}

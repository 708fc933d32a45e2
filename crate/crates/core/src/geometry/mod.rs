//! Closed-form projective and plane geometry.
//!
//! Camera frame convention throughout the crate: x right, y down, z forward.
//! Ground planes are stored with a unit normal pointing from the ground
//! towards the camera and `d > 0`, so `d` is the camera height.

mod bbox;
mod camera;
mod perturb;
mod plane;

pub use bbox::{bottom_center, BBox3D};
pub use camera::{
    ground_depth_at_pixel, project_point, CameraExtrinsics, CameraIntrinsics, CameraRig, Pixel,
};
pub use perturb::{ground_homography, perturb_extrinsics, perturbation_rotation, rot_x, rot_z};
pub use plane::{attitude_to_plane, plane_from_three_points, plane_to_attitude, CameraAttitude, GroundPlane};

/// Tolerance on `|n . ray|` below which a viewing ray is treated as parallel
/// to the ground.
pub const HORIZON_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point has non-positive depth z = {0}")]
    NonPositiveDepth(f64),
    #[error("viewing ray is parallel to the ground plane")]
    HorizonRay,
    #[error("ray meets the ground plane behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("points are collinear")]
    CollinearPoints,
    #[error("degenerate plane: {0}")]
    DegeneratePlane(&'static str),
    #[error("singular intrinsics: fx = {fx}, fy = {fy}")]
    SingularIntrinsics { fx: f64, fy: f64 },
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, GroundPlane, Result};

/// 7-DoF box: centre `(x, y, z)` in the camera frame, dimensions
/// `(l, w, h)` and yaw `theta` about the ground normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl BBox3D {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x, self.y, self.z, self.l, self.w, self.h, self.theta];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite field".into()));
        }
        if !(self.l > 0.0 && self.w > 0.0 && self.h > 0.0) {
            return Err(invalid(format!("dimensions must be positive, got ({}, {}, {})", self.l, self.w, self.h)));
        }
        let pi = std::f64::consts::PI;
        if !(-pi..=pi).contains(&self.theta) {
            return Err(invalid(format!("theta = {} outside [-pi, pi]", self.theta)));
        }
        Ok(())
    }

    /// The eight corners, bottom face first. The box is gravity aligned: its
    /// vertical axis is the ground normal and `theta` turns the length axis
    /// away from the camera x axis projected onto the ground.
    pub fn corners(&self, ground: &GroundPlane) -> [Vector3<f64>; 8] {
        let up = ground.normal();
        let x_cam = Vector3::x();
        let ex = (x_cam - up * x_cam.dot(&up)).normalize();
        let ez = ex.cross(&(-up));
        let (s, c) = self.theta.sin_cos();
        let heading = ex * c - ez * s;
        let side = ex * s + ez * c;
        let bottom = bottom_center(self, ground);
        let mut out = [Vector3::zeros(); 8];
        let mut i = 0;
        for lift in [0.0, self.h] {
            for (sl, sw) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)] {
                out[i] = bottom + heading * (sl * self.l / 2.0) + side * (sw * self.w / 2.0) + up * lift;
                i += 1;
            }
        }
        out
    }
}

fn invalid(reason: String) -> GeometryError {
    GeometryError::Invalid { what: "box", reason }
}

/// Centre of the box's bottom face: the centre moved `h/2` against the
/// ground's upward normal.
pub fn bottom_center(b: &BBox3D, ground: &GroundPlane) -> Vector3<f64> {
    b.center() - ground.normal() * (b.h / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level() -> GroundPlane {
        GroundPlane::new(0.0, -1.0, 0.0, 1.65).unwrap()
    }

    fn car() -> BBox3D {
        BBox3D { x: 0.0, y: 1.0, z: 20.0, l: 4.0, w: 2.0, h: 1.5, theta: 0.0 }
    }

    #[test]
    fn bottom_center_on_level_ground() {
        assert_eq!(bottom_center(&car(), &level()), Vector3::new(0.0, 1.75, 20.0));
    }

    #[test]
    fn zero_height_keeps_center() {
        let b = BBox3D { h: 0.0, ..car() };
        assert_eq!(bottom_center(&b, &level()), b.center());
        assert!(b.validate().is_err());
    }

    #[test]
    fn corners_span_dimensions() {
        let b = BBox3D { theta: 0.0, ..car() };
        let c = b.corners(&level());
        let xs: Vec<f64> = c.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = c.iter().map(|p| p.y).collect();
        let zs: Vec<f64> = c.iter().map(|p| p.z).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span(&xs) - 4.0).abs() < 1e-12);
        assert!((span(&ys) - 1.5).abs() < 1e-12);
        assert!((span(&zs) - 2.0).abs() < 1e-12);
        // bottom face lies on y = 1.75 for level ground
        assert!(c[..4].iter().all(|p| (p.y - 1.75).abs() < 1e-12));
    }

    #[test]
    fn corners_on_tilted_ground_stay_on_plane() {
        let g = GroundPlane::new(0.05, -0.98, -0.17, 6.0).unwrap();
        let b = BBox3D { x: 2.0, y: 3.0, z: 40.0, l: 4.5, w: 1.9, h: 1.6, theta: 0.7 };
        let bottom = bottom_center(&b, &g);
        let shift = -g.signed_distance(&bottom);
        let b = BBox3D { y: b.y + shift * g.beta(), x: b.x + shift * g.alpha(), z: b.z + shift * g.gamma(), ..b };
        for p in &b.corners(&g)[..4] {
            assert!(g.signed_distance(p).abs() < 1e-9);
        }
        for p in &b.corners(&g)[4..] {
            assert!((g.signed_distance(p) - 1.6).abs() < 1e-9);
        }
    }
}

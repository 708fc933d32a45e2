use std::collections::HashSet;

use nalgebra::Vector3;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation as _};

use super::{MapError, Result};
use crate::geometry::{plane_from_three_points, project_point, CameraIntrinsics, GroundPlane, Pixel};

/// An image-space triangle and the ground plane fitted through its three
/// generating 3D points.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRegion {
    pub vertices: [Pixel; 3],
    pub plane: GroundPlane,
    pub points: [Vector3<f64>; 3],
}

impl TriangleRegion {
    /// Twice the signed image-space area.
    pub fn signed_area2(&self) -> f64 {
        let [a, b, c] = self.vertices;
        (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub regions: Vec<TriangleRegion>,
    /// Points that projected to a usable, unique pixel location.
    pub usable_points: usize,
    /// Delaunay faces dropped because their 3D points were collinear or the
    /// fitted plane passed through the camera.
    pub skipped_degenerate: usize,
}

struct Site {
    pos: Point2<f64>,
    index: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Delaunay-triangulates the projections of `points` and fits one plane per
/// triangle from the corresponding 3D points.
///
/// Points behind the camera or landing on an already used pixel location
/// are ignored. The triangles tile the convex hull of the projected points
/// without overlap.
pub fn triangulate_ground_points(points: &[Vector3<f64>], k: &CameraIntrinsics) -> Result<Triangulation> {
    k.validate()?;
    let mut dt: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
    let mut seen = HashSet::new();
    for (index, p) in points.iter().enumerate() {
        let Ok(px) = project_point(p, k) else { continue };
        if !seen.insert((px.u.to_bits(), px.v.to_bits())) {
            continue;
        }
        // rejected only for coordinates spade cannot represent
        let _ = dt.insert(Site { pos: Point2::new(px.u, px.v), index });
    }
    let usable = dt.num_vertices();
    if usable < 3 {
        return Err(MapError::InsufficientPoints(usable));
    }

    let mut regions = Vec::new();
    let mut skipped = 0;
    for face in dt.inner_faces() {
        let sites = face.vertices().map(|v| (v.data().index, v.data().pos));
        let pts = sites.map(|(i, _)| points[i]);
        let vertices = sites.map(|(_, p)| Pixel::new(p.x, p.y));
        match plane_from_three_points(&pts[0], &pts[1], &pts[2]) {
            Ok(plane) => {
                let region = TriangleRegion { vertices, plane, points: pts };
                if region.signed_area2() != 0.0 {
                    regions.push(region);
                } else {
                    skipped += 1;
                }
            }
            Err(_) => skipped += 1,
        }
    }
    if regions.is_empty() {
        return Err(MapError::AllDegenerate(skipped));
    }
    Ok(Triangulation { regions, usable_points: usable, skipped_degenerate: skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ground_depth_at_pixel, GeometryError};

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 64.0, 64.0).unwrap()
    }

    fn level() -> GroundPlane {
        GroundPlane::new(0.0, -1.0, 0.0, 6.0).unwrap()
    }

    fn ground_point(u: f64, v: f64, g: &GroundPlane) -> Vector3<f64> {
        let px = Pixel::new(u, v);
        let z = ground_depth_at_pixel(px, &k(), g).unwrap();
        k().back_project(px, z)
    }

    #[test]
    fn three_points_one_triangle() {
        let g = level();
        let pts = [ground_point(10.0, 90.0, &g), ground_point(100.0, 95.0, &g), ground_point(60.0, 120.0, &g)];
        let t = triangulate_ground_points(&pts, &k()).unwrap();
        assert_eq!(t.regions.len(), 1);
        for p in &pts {
            assert!(t.regions[0].plane.signed_distance(p).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        let g = level();
        let pts = [ground_point(10.0, 90.0, &g), ground_point(100.0, 95.0, &g)];
        assert!(matches!(triangulate_ground_points(&pts, &k()), Err(MapError::InsufficientPoints(2))));
        // a point behind the camera is not usable
        let pts = [pts[0], pts[1], Vector3::new(0.0, 1.0, -5.0)];
        assert!(matches!(triangulate_ground_points(&pts, &k()), Err(MapError::InsufficientPoints(2))));
    }

    #[test]
    fn collinear_projections_have_no_faces() {
        let g = level();
        let pts: Vec<_> = (0..5).map(|i| ground_point(10.0 + 20.0 * i as f64, 100.0, &g)).collect();
        assert!(matches!(triangulate_ground_points(&pts, &k()), Err(MapError::AllDegenerate(0))));
    }

    #[test]
    fn planes_through_origin_are_skipped() {
        // all points on a plane through the camera centre
        let pts = [
            Vector3::new(-1.0, 0.5, 10.0),
            Vector3::new(1.0, 0.5, 10.0),
            Vector3::new(0.0, 1.0, 20.0),
        ];
        assert!(matches!(
            plane_from_three_points(&pts[0], &pts[1], &pts[2]),
            Err(GeometryError::DegeneratePlane(_))
        ));
        // such a plane projects onto a single image line
        assert!(matches!(triangulate_ground_points(&pts, &k()), Err(MapError::AllDegenerate(_))));
    }

    #[test]
    fn coplanar_points_reproduce_plane() {
        let g = GroundPlane::new(0.02, -0.97, -0.2, 6.0).unwrap();
        let pts: Vec<_> = [(5.0, 80.0), (120.0, 85.0), (60.0, 100.0), (30.0, 126.0), (110.0, 120.0), (70.0, 90.0)]
            .iter()
            .map(|&(u, v)| ground_point(u, v, &g))
            .collect();
        let t = triangulate_ground_points(&pts, &k()).unwrap();
        assert!(t.regions.len() >= 4);
        for r in &t.regions {
            for (a, b) in r.plane.to_array().iter().zip(g.to_array()) {
                assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", r.plane, g);
            }
        }
    }
}

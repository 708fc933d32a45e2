use nalgebra::Vector3;

use super::{rasterize_triangle, triangulate_ground_points, MapError, Result};
use crate::geometry::{bottom_center, BBox3D, CameraIntrinsics, GroundPlane};

/// `height x width x 4` map of plane equations `(alpha, beta, gamma, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenormMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DenormMap {
    pub fn filled(plane: &GroundPlane, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(MapError::EmptyMap(height, width));
        }
        let data = plane.to_array().repeat(height * width);
        Ok(Self { height, width, data })
    }

    /// Wraps raw channel data without renormalizing (e.g. a map read back
    /// from a file or a network prediction).
    pub fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(MapError::EmptyMap(height, width));
        }
        if data.len() != height * width * 4 {
            return Err(MapError::Format(format!(
                "expected {} channel values, got {}",
                height * width * 4,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; 4] {
        let i = (row * self.width + col) * 4;
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    pub fn set(&mut self, row: usize, col: usize, plane: &GroundPlane) {
        let i = (row * self.width + col) * 4;
        self.data[i..i + 4].copy_from_slice(&plane.to_array());
    }

    /// The pixel's plane, renormalized.
    pub fn plane_at(&self, row: usize, col: usize) -> Result<GroundPlane> {
        let [a, b, c, d] = self.get(row, col);
        Ok(GroundPlane::new(a, b, c, d)?)
    }

    /// Iterates pixel planes in row-major order as raw channel quadruples.
    pub fn pixels(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.data.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]])
    }
}

/// Every pixel carries `g_initial`.
pub fn build_global_denorm_map(g_initial: &GroundPlane, height: usize, width: usize) -> Result<DenormMap> {
    DenormMap::filled(g_initial, height, width)
}

/// Outcome of refining a global map with annotation-derived ground points.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub map: DenormMap,
    pub triangles: usize,
    pub pixels_written: usize,
    pub skipped_degenerate: usize,
    /// Fewer than three usable bottom centres: the map is the global map.
    pub insufficient_points: bool,
}

/// Starts from the global map and overwrites each Delaunay triangle of the
/// projected box bottom centres with the plane through its three centres.
///
/// `k` must be expressed at the map's resolution. Pixels outside the convex
/// hull of the projected centres keep `g_initial`.
pub fn refine_denorm_map(
    g_initial: &GroundPlane,
    boxes: &[BBox3D],
    k: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<Refinement> {
    let mut map = build_global_denorm_map(g_initial, height, width)?;
    let points: Vec<Vector3<f64>> = boxes.iter().map(|b| bottom_center(b, g_initial)).collect();
    let mut out = Refinement { map: map.clone(), triangles: 0, pixels_written: 0, skipped_degenerate: 0, insufficient_points: false };
    match triangulate_ground_points(&points, k) {
        Ok(tri) => {
            for region in &tri.regions {
                out.pixels_written += rasterize_triangle(&mut map, region);
            }
            out.triangles = tri.regions.len();
            out.skipped_degenerate = tri.skipped_degenerate;
            out.map = map;
        }
        Err(MapError::InsufficientPoints(_)) => out.insufficient_points = true,
        Err(MapError::AllDegenerate(n)) => out.skipped_degenerate = n,
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn build_refined_denorm_map(
    g_initial: &GroundPlane,
    boxes: &[BBox3D],
    k: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<DenormMap> {
    refine_denorm_map(g_initial, boxes, k, height, width).map(|r| r.map)
}

/// Mean absolute difference over all `h * w * 4` channel values.
pub fn denorm_l1_loss(pred: &DenormMap, label: &DenormMap) -> Result<f64> {
    if pred.dims() != label.dims() {
        return Err(MapError::DimensionMismatch(pred.dims(), label.dims()));
    }
    let sum: f64 = pred.data.iter().zip(&label.data).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / pred.data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ground_depth_at_pixel, Pixel};
    use proptest::prelude::*;

    fn level() -> GroundPlane {
        GroundPlane::new(0.0, -1.0, 0.0, 1.65).unwrap()
    }

    #[test]
    fn global_map_is_constant() {
        let g = GroundPlane::new(0.1, -0.9, -0.3, 5.0).unwrap();
        let m = build_global_denorm_map(&g, 2, 2).unwrap();
        assert!(m.pixels().all(|p| p == g.to_array()));
        assert_eq!(denorm_l1_loss(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn l1_single_pixel() {
        let a = build_global_denorm_map(&level(), 1, 1).unwrap();
        let b = build_global_denorm_map(&GroundPlane::new(0.0, -1.0, 0.0, 2.65).unwrap(), 1, 1).unwrap();
        assert_eq!(denorm_l1_loss(&a, &b).unwrap(), 0.25);
        assert_eq!(denorm_l1_loss(&b, &a).unwrap(), 0.25);
    }

    #[test]
    fn l1_dimension_mismatch() {
        let a = build_global_denorm_map(&level(), 1, 2).unwrap();
        let b = build_global_denorm_map(&level(), 2, 1).unwrap();
        assert!(matches!(denorm_l1_loss(&a, &b), Err(MapError::DimensionMismatch(_, _))));
    }

    #[test]
    fn no_boxes_gives_global_map() {
        let k = CameraIntrinsics::new(50.0, 50.0, 16.0, 8.0).unwrap();
        let r = refine_denorm_map(&level(), &[], &k, 16, 32).unwrap();
        assert!(r.insufficient_points);
        assert_eq!(r.map, build_global_denorm_map(&level(), 16, 32).unwrap());
    }

    fn box_on(g: &GroundPlane, k: &CameraIntrinsics, u: f64, v: f64) -> BBox3D {
        let px = Pixel::new(u, v);
        let bottom = k.back_project(px, ground_depth_at_pixel(px, k, g).unwrap());
        let c = bottom + g.normal() * 0.75;
        BBox3D { x: c.x, y: c.y, z: c.z, l: 4.0, w: 1.8, h: 1.5, theta: 0.3 }
    }

    #[test]
    fn tilted_patch_is_written_inside_hull_only() {
        let k = CameraIntrinsics::new(60.0, 60.0, 32.0, 8.0).unwrap();
        let g = level();
        let tilted = GroundPlane::new(0.08, -0.99, -0.05, 1.65).unwrap();
        // bottom centres on the tilted plane, boxes annotated w.r.t. g
        let boxes: Vec<BBox3D> = [(5.0, 20.0), (60.0, 22.0), (30.0, 31.0), (40.0, 14.0)]
            .iter()
            .map(|&(u, v)| {
                let mut b = box_on(&tilted, &k, u, v);
                let up = g.normal() * 0.75 - tilted.normal() * 0.75;
                b.x += up.x;
                b.y += up.y;
                b.z += up.z;
                b
            })
            .collect();
        let r = refine_denorm_map(&g, &boxes, &k, 32, 64).unwrap();
        assert!(r.triangles >= 2 && r.pixels_written > 0);
        let global = build_global_denorm_map(&g, 32, 64).unwrap();
        let mut changed = 0;
        for row in 0..32 {
            for col in 0..64 {
                let p = r.map.get(row, col);
                if p != global.get(row, col) {
                    changed += 1;
                    for (a, b) in p.iter().zip(tilted.to_array()) {
                        assert!((a - b).abs() < 1e-6);
                    }
                }
            }
        }
        assert_eq!(changed, r.pixels_written);
    }

    proptest! {
        #[test]
        fn l1_triangle_inequality(vals in prop::collection::vec(-3.0f64..3.0, 36)) {
            let mk = |s: &[f64]| DenormMap::from_raw(1, 3, s.to_vec()).unwrap();
            let (a, b, c) = (mk(&vals[..12]), mk(&vals[12..24]), mk(&vals[24..]));
            let ab = denorm_l1_loss(&a, &b).unwrap();
            let bc = denorm_l1_loss(&b, &c).unwrap();
            let ac = denorm_l1_loss(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, denorm_l1_loss(&b, &a).unwrap());
        }
    }
}

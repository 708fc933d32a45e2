//! Ground-plane representations rendered over an image grid.
//!
//! Three representations are built here: a per-pixel ground depth map, a
//! global plane-equation map that repeats one plane everywhere, and a refined
//! plane-equation map whose triangular regions carry local planes fitted to
//! annotated ground contact points.

mod denorm;
mod depth;
mod gpkm;
mod raster;
mod triangulate;

pub use denorm::{
    build_global_denorm_map, build_refined_denorm_map, denorm_l1_loss, refine_denorm_map, DenormMap,
    Refinement,
};
pub use depth::{build_ground_depth_map, GroundDepthMap};
pub use gpkm::{MapFile, GPKM_MAGIC, GPKM_VERSION};
pub use raster::{covered_pixels, for_each_covered_pixel, is_top_left, rasterize_triangle};
pub use triangulate::{triangulate_ground_points, TriangleRegion, Triangulation};

use crate::geometry::{CameraIntrinsics, GeometryError};

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("map dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("need at least 3 usable ground points, got {0}")]
    InsufficientPoints(usize),
    #[error("every candidate triangle was degenerate ({0} skipped)")]
    AllDegenerate(usize),
    #[error("map dimensions must be positive, got {0}x{1}")]
    EmptyMap(usize, usize),
    #[error("malformed GPKM data: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MapError>;

/// The grid a map is rendered on: the image size reduced by a stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapGrid {
    pub image_height: usize,
    pub image_width: usize,
    pub stride: usize,
}

impl MapGrid {
    pub fn new(image_height: usize, image_width: usize, stride: usize) -> Result<Self> {
        if image_height == 0 || image_width == 0 || stride == 0 {
            return Err(MapError::EmptyMap(image_height, image_width));
        }
        Ok(Self { image_height, image_width, stride })
    }

    /// `(rows, cols)` of the map, rounding partial cells up.
    pub fn dims(&self) -> (usize, usize) {
        (self.image_height.div_ceil(self.stride), self.image_width.div_ceil(self.stride))
    }

    /// Image intrinsics re-expressed at map resolution.
    pub fn intrinsics(&self, k: &CameraIntrinsics) -> CameraIntrinsics {
        if self.stride == 1 {
            *k
        } else {
            k.scaled(1.0 / self.stride as f64)
        }
    }
}

use rayon::prelude::*;

use super::{MapError, Result};
use crate::geometry::{ground_depth_at_pixel, CameraIntrinsics, GroundPlane, Pixel};

/// Per-pixel depth of the ray/ground intersection. Pixels at or above the
/// horizon are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundDepthMap {
    height: usize,
    width: usize,
    depth: Vec<f64>,
    valid: Vec<bool>,
}

impl GroundDepthMap {
    /// `depth` entries of masked pixels are ignored and stored as 0.
    pub fn from_parts(height: usize, width: usize, mut depth: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(MapError::EmptyMap(height, width));
        }
        if depth.len() != height * width || valid.len() != height * width {
            return Err(MapError::Format(format!(
                "expected {} samples, got {} depths and {} mask bits",
                height * width,
                depth.len(),
                valid.len()
            )));
        }
        for (z, ok) in depth.iter_mut().zip(&valid) {
            if !ok {
                *z = 0.0;
            } else if !(*z > 0.0 && z.is_finite()) {
                return Err(MapError::Format(format!("valid pixel with depth {z}")));
            }
        }
        Ok(Self { height, width, depth, valid })
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.valid[i].then(|| self.depth[i])
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Evaluates the ground depth at every pixel centre `(col + 0.5, row + 0.5)`.
pub fn build_ground_depth_map(k: &CameraIntrinsics, g: &GroundPlane, height: usize, width: usize) -> Result<GroundDepthMap> {
    if height == 0 || width == 0 {
        return Err(MapError::EmptyMap(height, width));
    }
    k.validate()?;
    let mut depth = vec![0.0; height * width];
    let mut valid = vec![false; height * width];
    depth
        .par_chunks_mut(width)
        .zip(valid.par_chunks_mut(width))
        .enumerate()
        .for_each(|(row, (zs, oks))| {
            for col in 0..width {
                let px = Pixel::new(col as f64 + 0.5, row as f64 + 0.5);
                if let Ok(z) = ground_depth_at_pixel(px, k, g) {
                    zs[col] = z;
                    oks[col] = true;
                }
            }
        });
    Ok(GroundDepthMap { height, width, depth, valid })
}

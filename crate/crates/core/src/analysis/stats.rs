use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, Histogram, HistogramRange, Result};
use crate::dataset::FrameRecord;
use crate::geometry::{bottom_center, ground_depth_at_pixel, plane_to_attitude, project_point, CameraAttitude, GroundPlane};
use crate::maps::{refine_denorm_map, MapGrid};

/// Ground depth at the pixel of every annotated bottom centre, frame by
/// frame. Objects whose bottom centre does not reach the ground through the
/// image (behind the camera, above the horizon) are skipped.
pub fn depth_samples(frames: &[FrameRecord]) -> Vec<f64> {
    let per_frame: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| {
            let k = &f.rig.intrinsics;
            f.labels
                .iter()
                .filter_map(|l| {
                    let px = project_point(&bottom_center(&l.bbox, &f.ground), k).ok()?;
                    match ground_depth_at_pixel(px, k, &f.ground) {
                        Ok(z) => Some(z),
                        Err(e) => {
                            log::debug!("{}: skipping object: {e}", f.id);
                            None
                        }
                    }
                })
                .collect()
        })
        .collect();
    per_frame.concat()
}

/// Histogram of per-object ground depths.
pub fn depth_histogram(frames: &[FrameRecord], bins: usize, range: HistogramRange) -> Result<Histogram> {
    let z = depth_samples(frames);
    if z.is_empty() {
        return Err(AnalysisError::EmptyInput("no annotated boxes"));
    }
    Histogram::from_samples(&z, bins, range)
}

/// Per-pixel attitudes of one frame's refined plane map, run-length
/// collapsed: `(attitude, pixel count)`.
pub fn frame_attitude_runs(frame: &FrameRecord, grid: &MapGrid) -> Result<Vec<(CameraAttitude, u64)>> {
    let (h, w) = grid.dims();
    let k = grid.intrinsics(&frame.rig.intrinsics);
    let refined = refine_denorm_map(&frame.ground, &frame.boxes(), &k, h, w)?;
    let mut runs: Vec<([f64; 4], u64)> = Vec::new();
    for px in refined.map.pixels() {
        match runs.last_mut() {
            Some((last, n)) if *last == px => *n += 1,
            _ => runs.push((px, 1)),
        }
    }
    let mut out: Vec<(CameraAttitude, u64)> = Vec::with_capacity(runs.len());
    let mut cache: Option<([f64; 4], CameraAttitude)> = None;
    for (p, n) in runs {
        let a = match cache {
            Some((q, a)) if q == p => a,
            _ => {
                let a = plane_to_attitude(&GroundPlane::new(p[0], p[1], p[2], p[3])?)?;
                cache = Some((p, a));
                a
            }
        };
        out.push((a, n));
    }
    Ok(out)
}

/// Roll, pitch and height histograms over every refined-map pixel of every
/// frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeHistograms {
    pub roll: Histogram,
    pub pitch: Histogram,
    pub height: Histogram,
}

pub fn attitude_histograms(frames: &[FrameRecord], bins: usize, grid: &MapGrid) -> Result<AttitudeHistograms> {
    if frames.is_empty() {
        return Err(AnalysisError::EmptyInput("no frames"));
    }
    let runs: Vec<Vec<(CameraAttitude, u64)>> =
        frames.par_iter().map(|f| frame_attitude_runs(f, grid)).collect::<Result<_>>()?;
    let runs = runs.concat();
    let pick = |f: fn(&CameraAttitude) -> f64| -> Vec<(f64, u64)> { runs.iter().map(|(a, n)| (f(a), *n)).collect() };
    Ok(AttitudeHistograms {
        roll: Histogram::from_weighted(&pick(|a| a.roll), bins, HistogramRange::Auto)?,
        pitch: Histogram::from_weighted(&pick(|a| a.pitch), bins, HistogramRange::Auto)?,
        height: Histogram::from_weighted(&pick(|a| a.height), bins, HistogramRange::Auto)?,
    })
}

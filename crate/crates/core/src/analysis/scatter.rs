use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{AnalysisError, Result};
use crate::dataset::FrameRecord;
use crate::geometry::{
    bottom_center, ground_depth_at_pixel, ground_homography, plane_to_attitude, project_point, Pixel,
};

/// Bins per axis of the overlap histogram.
pub const OVERLAP_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Depth,
    Roll,
    Pitch,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Depth, Quantity::Roll, Quantity::Pitch];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Depth => "depth",
            Quantity::Roll => "roll",
            Quantity::Pitch => "pitch",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| AnalysisError::InvalidInput(format!("unknown quantity {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Clean,
    Perturbed,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Clean => "clean",
            Condition::Perturbed => "perturbed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterPoint {
    /// Index into [`ScatterSeries::frame_ids`].
    pub frame: usize,
    pub v: f64,
    pub value: f64,
}

/// Image row against a per-object quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterSeries {
    pub quantity: Quantity,
    pub condition: Condition,
    pub frame_ids: Vec<String>,
    pub points: Vec<ScatterPoint>,
}

impl ScatterSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One `(v, value)` point per annotated object.
///
/// The value is the labelled quantity: ground depth at the object's clean
/// bottom-centre pixel, or the frame plane's roll/pitch. With `perturb`
/// (one `(droll, dpitch)` per frame, radians) the row is where the camera
/// rotation moves that pixel, `H v` with `H` the calibration-preserving
/// homography; points mapped behind the camera are dropped.
pub fn v_correlation_series(
    frames: &[FrameRecord],
    quantity: Quantity,
    perturb: Option<&[(f64, f64)]>,
) -> Result<ScatterSeries> {
    if frames.is_empty() {
        return Err(AnalysisError::EmptyInput("no frames"));
    }
    if let Some(p) = perturb {
        if p.len() != frames.len() {
            return Err(AnalysisError::InvalidInput(format!(
                "{} perturbations for {} frames",
                p.len(),
                frames.len()
            )));
        }
    }
    let mut points = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let k = &f.rig.intrinsics;
        let (droll, dpitch) = perturb.map_or((0.0, 0.0), |p| p[i]);
        let h = if droll == 0.0 && dpitch == 0.0 { None } else { Some(ground_homography(k, droll, dpitch)?) };
        let attitude = match quantity {
            Quantity::Depth => None,
            _ => Some(plane_to_attitude(&f.ground)?),
        };
        for l in &f.labels {
            let Ok(px) = project_point(&bottom_center(&l.bbox, &f.ground), k) else {
                continue;
            };
            let value = match (quantity, attitude) {
                (Quantity::Roll, Some(a)) => a.roll,
                (Quantity::Pitch, Some(a)) => a.pitch,
                _ => match ground_depth_at_pixel(px, k, &f.ground) {
                    Ok(z) => z,
                    Err(_) => continue,
                },
            };
            let v = match h {
                None => px.v,
                Some(h) => match warp(&h, px) {
                    Some(q) => q.v,
                    None => continue,
                },
            };
            if v.is_finite() && value.is_finite() {
                points.push(ScatterPoint { frame: i, v, value });
            }
        }
    }
    if points.is_empty() {
        return Err(AnalysisError::EmptyInput("no projectable objects"));
    }
    Ok(ScatterSeries {
        quantity,
        condition: if perturb.is_some() { Condition::Perturbed } else { Condition::Clean },
        frame_ids: frames.iter().map(|f| f.id.clone()).collect(),
        points,
    })
}

fn warp(h: &nalgebra::Matrix3<f64>, px: Pixel) -> Option<Pixel> {
    let q = h * nalgebra::Vector3::new(px.u, px.v, 1.0);
    (q.z > 0.0).then(|| Pixel::new(q.x / q.z, q.y / q.z))
}

/// Intersection of the two normalised `bins x bins` histograms of
/// `(v, value)` over the joint bounding box of both series. Symmetric,
/// in `[0, 1]`, and 1 for identical series.
pub fn overlap_coefficient(a: &ScatterSeries, b: &ScatterSeries, bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyInput("empty series"));
    }
    if a.quantity != b.quantity {
        return Err(AnalysisError::QuantityMismatch(a.quantity, b.quantity));
    }
    if bins == 0 {
        return Err(AnalysisError::InvalidInput("overlap needs at least one bin".into()));
    }
    let all = a.points.iter().chain(&b.points);
    let (mut v0, mut v1, mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        v0 = v0.min(p.v);
        v1 = v1.max(p.v);
        x0 = x0.min(p.value);
        x1 = x1.max(p.value);
    }
    let axis = |lo: f64, hi: f64| if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let (v0, v1) = axis(v0, v1);
    let (x0, x1) = axis(x0, x1);
    let index = |x: f64, lo: f64, hi: f64| (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
    let grid = |s: &ScatterSeries| {
        let mut g = vec![0u64; bins * bins];
        for p in &s.points {
            g[index(p.v, v0, v1) * bins + index(p.value, x0, x1)] += 1;
        }
        g
    };
    let (ga, gb) = (grid(a), grid(b));
    // exact integer sum of min(x / na, y / nb), scaled by na * nb
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let common: u128 = ga.iter().zip(&gb).map(|(&x, &y)| (x as u128 * nb).min(y as u128 * na)).sum();
    Ok(common as f64 / (na * nb) as f64)
}

/// `n` seeded `(droll, dpitch)` pairs from a normal distribution with mean
/// 0 and standard deviation `sigma` (radians), truncated at three sigma.
pub fn sample_perturbations(n: usize, sigma: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(AnalysisError::InvalidInput(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![(0.0, 0.0); n]);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| AnalysisError::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || loop {
        let x: f64 = normal.sample(&mut rng);
        if x.abs() <= 3.0 * sigma {
            return x;
        }
    };
    Ok((0..n).map(|_| (draw(), draw())).collect())
}

/// Clean-versus-perturbed overlap for each quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub sigma: f64,
    pub seed: u64,
    pub depth: f64,
    pub roll: f64,
    pub pitch: f64,
}

impl RobustnessReport {
    /// Both attitude series overlap their clean version more than depth.
    pub fn attitude_more_robust(&self) -> bool {
        self.roll > self.depth && self.pitch > self.depth
    }

    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Depth => self.depth,
            Quantity::Roll => self.roll,
            Quantity::Pitch => self.pitch,
        }
    }
}

/// Perturbs every frame once (see [`sample_perturbations`]) and measures
/// how much each quantity's scatter moves.
pub fn robustness_report(frames: &[FrameRecord], sigma: f64, seed: u64) -> Result<RobustnessReport> {
    let perturb = sample_perturbations(frames.len(), sigma, seed)?;
    let overlap = |q| -> Result<f64> {
        let clean = v_correlation_series(frames, q, None)?;
        let moved = v_correlation_series(frames, q, Some(&perturb))?;
        overlap_coefficient(&clean, &moved, OVERLAP_BINS)
    };
    Ok(RobustnessReport {
        sigma,
        seed,
        depth: overlap(Quantity::Depth)?,
        roll: overlap(Quantity::Roll)?,
        pitch: overlap(Quantity::Pitch)?,
    })
}

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Box2D, CalibFile, DatasetError, FrameRecord, LabelRecord, Result};
use crate::geometry::{
    project_point, rot_x, rot_z, BBox3D, CameraExtrinsics, CameraIntrinsics, CameraRig, Pixel,
};

/// Parameters of a synthetic roadside scene. Ranges are inclusive
/// `(low, high)` intervals sampled uniformly; angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub roll: (f64, f64),
    pub pitch: (f64, f64),
    pub height: (f64, f64),
    /// Camera-frame depth of the objects' bottom centres, metres.
    pub depth: (f64, f64),
    pub objects_per_frame: usize,
    pub frames: usize,
    pub image_height: usize,
    pub image_width: usize,
    pub focal: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    /// A pole-mounted camera about 6 m up, pitched about 10 degrees down,
    /// seeing traffic 10 to 200 m away in a 512x928 image.
    fn default() -> Self {
        let pitch = 10f64.to_radians();
        Self {
            roll: (-0.01, 0.01),
            pitch: (pitch - 0.01, pitch + 0.01),
            height: (5.75, 6.25),
            depth: (10.0, 200.0),
            objects_per_frame: 25,
            frames: 40,
            image_height: 512,
            image_width: 928,
            focal: 500.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let ranges = [("roll", self.roll), ("pitch", self.pitch), ("height", self.height), ("depth", self.depth)];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(DatasetError::Config(format!("{name} range ({lo}, {hi}) is empty")));
            }
        }
        for (name, (lo, hi)) in [("roll", self.roll), ("pitch", self.pitch)] {
            if lo <= -half_pi || hi >= half_pi {
                return Err(DatasetError::Config(format!("{name} range must lie within (-pi/2, pi/2)")));
            }
        }
        if self.height.0 <= 0.0 || self.depth.0 <= 0.0 {
            return Err(DatasetError::Config("height and depth ranges must be positive".into()));
        }
        if self.image_height == 0 || self.image_width == 0 || !(self.focal > 0.0) {
            return Err(DatasetError::Config("image size and focal length must be positive".into()));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: self.focal,
            fy: self.focal,
            cx: self.image_width as f64 / 2.0,
            cy: self.image_height as f64 / 2.0,
        }
    }
}

struct Category {
    name: &'static str,
    length: (f64, f64),
    width: (f64, f64),
    height: (f64, f64),
}

const CATEGORIES: [Category; 4] = [
    Category { name: "Car", length: (3.8, 4.8), width: (1.6, 1.9), height: (1.4, 1.6) },
    Category { name: "Van", length: (4.5, 5.5), width: (1.8, 2.0), height: (1.8, 2.2) },
    Category { name: "Truck", length: (6.0, 10.0), width: (2.3, 2.6), height: (2.8, 3.6) },
    Category { name: "Bus", length: (10.0, 12.0), width: (2.4, 2.6), height: (3.0, 3.4) },
];

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w >= std::f64::consts::PI { w - two_pi } else { w }
}

fn inside(px: Pixel, w: usize, h: usize) -> bool {
    px.u >= 0.0 && px.u < w as f64 && px.v >= 0.0 && px.v < h as f64
}

const PLACEMENT_TRIES: usize = 64;
const DEPTH_TRIES: usize = 1000;

/// Generates frame `index` of the scene. Each frame draws from its own
/// ChaCha stream, so frames can be produced in any order or in parallel.
pub fn synthesize_frame(cfg: &SceneConfig, index: usize) -> Result<FrameRecord> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);

    let roll = uniform(&mut rng, cfg.roll);
    let pitch = uniform(&mut rng, cfg.pitch);
    let height = uniform(&mut rng, cfg.height);
    // world frame: level-camera axes with the origin on the ground below the
    // camera, ground plane y = 0
    let rotation = rot_z(roll) * rot_x(pitch);
    let centre = Vector3::new(0.0, -height, 0.0);
    let extrinsics = CameraExtrinsics::new(rotation, -(rotation * centre))?;
    let k = cfg.intrinsics();
    let rig = CameraRig { intrinsics: k, extrinsics };
    let ground = rig.ground_in_camera(&Vector3::new(0.0, -1.0, 0.0), 0.0)?;
    let up = ground.normal();
    let (w, h) = (cfg.image_width, cfg.image_height);

    let mut labels = Vec::with_capacity(cfg.objects_per_frame);
    for _ in 0..cfg.objects_per_frame {
        let cat = &CATEGORIES[rng.gen_range(0..CATEGORIES.len())];
        let dims = (uniform(&mut rng, cat.length), uniform(&mut rng, cat.width), uniform(&mut rng, cat.height));
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let mut placed = None;
        'depth: for _ in 0..DEPTH_TRIES {
            let z = uniform(&mut rng, cfg.depth);
            for _ in 0..PLACEMENT_TRIES {
                let u = rng.gen_range(0.0..w as f64);
                let x = (u - k.cx) * z / k.fx;
                let y = -(ground.alpha() * x + ground.gamma() * z + ground.d()) / ground.beta();
                let bottom = Vector3::new(x, y, z);
                let centre = bottom + up * (dims.2 / 2.0);
                let ok = |p: &Vector3<f64>| project_point(p, &k).is_ok_and(|px| inside(px, w, h));
                if ok(&bottom) && ok(&centre) {
                    placed = Some(centre);
                    break 'depth;
                }
            }
        }
        let c = placed.ok_or_else(|| {
            DatasetError::Config(format!("depth range {:?} is not visible in the image", cfg.depth))
        })?;
        let bbox = BBox3D { x: c.x, y: c.y, z: c.z, l: dims.0, w: dims.1, h: dims.2, theta };
        let corners: Vec<Pixel> = bbox.corners(&ground).iter().filter_map(|p| project_point(p, &k).ok()).collect();
        let clip_u = |u: f64| u.clamp(0.0, w as f64);
        let clip_v = |v: f64| v.clamp(0.0, h as f64);
        let bbox2d = Box2D {
            left: clip_u(corners.iter().map(|p| p.u).fold(f64::INFINITY, f64::min)),
            top: clip_v(corners.iter().map(|p| p.v).fold(f64::INFINITY, f64::min)),
            right: clip_u(corners.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max)),
            bottom: clip_v(corners.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max)),
        };
        labels.push(LabelRecord {
            category: cat.name.to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: wrap_angle(theta - c.x.atan2(c.z)),
            bbox2d,
            bbox,
            score: None,
        });
    }
    Ok(FrameRecord { id: format!("{index:06}"), labels, calib: CalibFile::from_rig(&rig), rig, ground })
}

/// Generates `cfg.frames` frames. Output depends only on `cfg`.
pub fn synthesize_scene(cfg: &SceneConfig) -> Result<Vec<FrameRecord>> {
    cfg.validate()?;
    (0..cfg.frames).into_par_iter().map(|i| synthesize_frame(cfg, i)).collect()
}

use nalgebra::{Matrix3, Vector3};

use super::{parse_f64, DatasetError, Result};
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, CameraRig, GeometryError};

/// Key names of the two calibration rows. Releases of roadside datasets
/// disagree on these, so they are configurable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibKeys {
    pub projection: String,
    pub extrinsics: String,
}

impl Default for CalibKeys {
    fn default() -> Self {
        Self { projection: "P2".into(), extrinsics: "Tr_world_to_cam".into() }
    }
}

impl CalibKeys {
    /// Parses overrides such as `P2=cam_K,Tr_world_to_cam=Tr_cam`.
    pub fn with_overrides(spec: &str) -> std::result::Result<Self, String> {
        let mut keys = Self::default();
        for pair in spec.split(',').filter(|p| !p.is_empty()) {
            let (from, to) = pair.split_once('=').ok_or_else(|| format!("expected KEY=NAME, got {pair:?}"))?;
            match from {
                "P2" => keys.projection = to.to_string(),
                "Tr_world_to_cam" => keys.extrinsics = to.to_string(),
                other => return Err(format!("unknown calibration key {other:?}")),
            }
        }
        Ok(keys)
    }
}

/// Raw calibration rows as written in the file, row-major 3x4.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibFile {
    pub projection: [f64; 12],
    pub world_to_cam: [f64; 12],
}

/// Rotations farther than this from orthonormal are rejected; closer ones are
/// snapped to the nearest rotation.
const ROTATION_SNAP_TOL: f64 = 1e-3;

impl CalibFile {
    pub fn from_rig(rig: &CameraRig) -> Self {
        let k = &rig.intrinsics;
        Self {
            projection: [k.fx, 0.0, k.cx, 0.0, 0.0, k.fy, k.cy, 0.0, 0.0, 0.0, 1.0, 0.0],
            world_to_cam: rig.extrinsics.to_row_major(),
        }
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        let p = &self.projection;
        let structural = [(1, 0.0), (4, 0.0), (8, 0.0), (9, 0.0), (10, 1.0)];
        for (i, expect) in structural {
            if (p[i] - expect).abs() > 1e-9 {
                return Err(GeometryError::Invalid {
                    what: "intrinsics",
                    reason: format!("projection entry {i} is {} (expected {expect}: zero skew, unit last row)", p[i]),
                }
                .into());
            }
        }
        Ok(CameraIntrinsics::new(p[0], p[5], p[2], p[6])?)
    }

    pub fn extrinsics(&self) -> Result<CameraExtrinsics> {
        let m = &self.world_to_cam;
        let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let t = Vector3::new(m[3], m[7], m[11]);
        if let Ok(e) = CameraExtrinsics::new(r, t) {
            return Ok(e);
        }
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err <= ROTATION_SNAP_TOL) || r.determinant() <= 0.0 {
            return Err(GeometryError::Invalid {
                what: "extrinsics",
                reason: format!("rotation is not a rotation (max |R^T R - I| = {err:e})"),
            }
            .into());
        }
        let svd = r.svd(true, true);
        let snapped = svd.u.unwrap() * svd.v_t.unwrap();
        Ok(CameraExtrinsics::new(snapped, t)?)
    }

    pub fn rig(&self) -> Result<CameraRig> {
        Ok(CameraRig { intrinsics: self.intrinsics()?, extrinsics: self.extrinsics()? })
    }

    pub fn serialize(&self, keys: &CalibKeys) -> String {
        let row = |v: &[f64; 12]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        format!("{}: {}\n{}: {}\n", keys.projection, row(&self.projection), keys.extrinsics, row(&self.world_to_cam))
    }
}

/// Parses a calibration file. Lines are `KEY: v1 ... v12`; keys other than
/// the configured two are ignored, each required key must appear once.
pub fn parse_calib(text: &str, keys: &CalibKeys) -> Result<CalibFile> {
    let mut projection = None;
    let mut world_to_cam = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| DatasetError::parse(lineno, 1, "expected `KEY: values`"))?;
        let key = key.trim();
        let slot = if key == keys.projection {
            &mut projection
        } else if key == keys.extrinsics {
            &mut world_to_cam
        } else {
            continue;
        };
        if slot.is_some() {
            return Err(DatasetError::parse(lineno, 1, format!("duplicate key {key:?}")));
        }
        let toks: Vec<&str> = rest.split_whitespace().collect();
        if toks.len() != 12 {
            return Err(DatasetError::parse(
                lineno,
                toks.len().min(12) + 2,
                format!("{key} needs 12 values, found {}", toks.len()),
            ));
        }
        let mut row = [0.0; 12];
        for (j, t) in toks.iter().enumerate() {
            row[j] = parse_f64(t, lineno, j + 2)?;
        }
        *slot = Some(row);
    }
    let missing = |k: &str| DatasetError::parse(text.lines().count().max(1), 1, format!("missing key {k:?}"));
    Ok(CalibFile {
        projection: projection.ok_or_else(|| missing(&keys.projection))?,
        world_to_cam: world_to_cam.ok_or_else(|| missing(&keys.extrinsics))?,
    })
}

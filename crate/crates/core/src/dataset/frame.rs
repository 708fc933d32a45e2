use std::path::{Path, PathBuf};

use super::{
    parse_calib, parse_ground_plane, parse_labels, serialize_ground_plane, serialize_labels, CalibFile, CalibKeys,
    DatasetError, LabelRecord, Result,
};
use crate::geometry::{BBox3D, CameraRig, GroundPlane};

/// One annotated camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: String,
    pub labels: Vec<LabelRecord>,
    pub calib: CalibFile,
    pub rig: CameraRig,
    pub ground: GroundPlane,
}

impl FrameRecord {
    pub fn boxes(&self) -> Vec<BBox3D> {
        self.labels.iter().map(|l| l.bbox).collect()
    }

    /// Re-checks every geometric invariant; returns one message per
    /// violation.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if let Err(e) = l.bbox.validate() {
                issues.push(format!("{}: object {i}: {e}", self.id));
            }
        }
        if let Err(e) = self.rig.intrinsics.validate() {
            issues.push(format!("{}: {e}", self.id));
        }
        if let Err(e) = self.rig.extrinsics.validate() {
            issues.push(format!("{}: {e}", self.id));
        }
        if let Err(e) = GroundPlane::new(self.ground.alpha(), self.ground.beta(), self.ground.gamma(), self.ground.d()) {
            issues.push(format!("{}: {e}", self.id));
        }
        issues
    }
}

/// Directories holding the three per-frame text files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSet {
    pub calib: PathBuf,
    pub labels: PathBuf,
    pub denorm: PathBuf,
}

impl FrameSet {
    /// The conventional `calib/`, `label/`, `denorm/` layout under `root`.
    pub fn under(root: impl AsRef<Path>) -> Self {
        let root = root.as_ref();
        Self { calib: root.join("calib"), labels: root.join("label"), denorm: root.join("denorm") }
    }

    /// Frame ids: the stems of `*.txt` files in the label directory, sorted.
    pub fn frame_ids(&self) -> Result<Vec<String>> {
        let read = std::fs::read_dir(&self.labels).map_err(|e| io_err(&self.labels, e))?;
        let mut ids = Vec::new();
        for entry in read {
            let path = entry.map_err(|e| io_err(&self.labels, e))?.path();
            if path.extension().is_some_and(|x| x == "txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load_frame(&self, id: &str, keys: &CalibKeys) -> Result<FrameRecord> {
        let file = |dir: &Path| dir.join(format!("{id}.txt"));
        let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| io_err(&p, e)).map(|t| (p, t));

        let (p, text) = read(file(&self.calib))?;
        let calib = parse_calib(&text, keys).map_err(|e| e.in_file(&p))?;
        let rig = calib.rig().map_err(|e| e.in_file(&p))?;
        let (p, text) = read(file(&self.labels))?;
        let labels = parse_labels(&text).map_err(|e| e.in_file(&p))?;
        let (p, text) = read(file(&self.denorm))?;
        let ground = parse_ground_plane(&text).map_err(|e| e.in_file(&p))?;
        Ok(FrameRecord { id: id.to_string(), labels, calib, rig, ground })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io { path: path.display().to_string(), source }
}

pub fn load_frames(set: &FrameSet, keys: &CalibKeys) -> Result<Vec<FrameRecord>> {
    set.frame_ids()?.iter().map(|id| set.load_frame(id, keys)).collect()
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Writes frames in the layout read by [`load_frames`]. Returns the written
/// paths in a stable order.
pub fn write_frames(set: &FrameSet, frames: &[FrameRecord], keys: &CalibKeys) -> Result<Vec<PathBuf>> {
    for dir in [&set.calib, &set.labels, &set.denorm] {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut written = Vec::with_capacity(frames.len() * 3);
    for f in frames {
        let name = format!("{}.txt", f.id);
        let entries = [
            (set.calib.join(&name), f.calib.serialize(keys)),
            (set.labels.join(&name), serialize_labels(&f.labels)),
            (set.denorm.join(&name), serialize_ground_plane(&f.ground)),
        ];
        for (path, text) in entries {
            write_atomic(&path, &text)?;
            written.push(path);
        }
    }
    Ok(written)
}

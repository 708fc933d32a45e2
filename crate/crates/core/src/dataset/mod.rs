//! Roadside dataset files and a deterministic synthetic scene generator.
//!
//! On-disk layout of a frame set rooted at `dir`:
//! `dir/calib/<id>.txt`, `dir/label/<id>.txt`, `dir/denorm/<id>.txt`.

mod calib;
mod frame;
mod labels;
mod synth;

pub use calib::{parse_calib, CalibFile, CalibKeys};
pub use frame::{load_frames, write_frames, FrameRecord, FrameSet};
pub use labels::{
    parse_detections, parse_labels, serialize_labels, Box2D, LabelRecord,
};
pub use synth::{synthesize_frame, synthesize_scene, SceneConfig};

use crate::geometry::{GeometryError, GroundPlane};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid scene config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    InFile { path: String, source: Box<DatasetError> },
}

impl DatasetError {
    pub(crate) fn parse(line: usize, column: usize, reason: impl Into<String>) -> Self {
        Self::Parse { line, column, reason: reason.into() }
    }

    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        Self::InFile { path: path.display().to_string(), source: Box::new(self) }
    }

    /// True for syntax errors, including those wrapped with a file path.
    pub fn is_parse(&self) -> bool {
        match self {
            Self::Parse { .. } | Self::Io { .. } | Self::Config(_) => true,
            Self::InFile { source, .. } => source.is_parse(),
            Self::Geometry(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;

pub(crate) fn parse_f64(tok: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| DatasetError::parse(line, column, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(DatasetError::parse(line, column, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

/// Parses a denorm file: four whitespace-separated reals on one line.
pub fn parse_ground_plane(text: &str) -> Result<GroundPlane> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let (line, content) = match lines.as_slice() {
        [one] => *one,
        [] => return Err(DatasetError::parse(1, 1, "empty denorm file")),
        [_, (second, _), ..] => return Err(DatasetError::parse(*second, 1, "denorm file must hold one line")),
    };
    let toks: Vec<&str> = content.split_whitespace().collect();
    if toks.len() != 4 {
        return Err(DatasetError::parse(line, toks.len().min(4) + 1, format!("expected 4 values, found {}", toks.len())));
    }
    let v: Vec<f64> = toks
        .iter()
        .enumerate()
        .map(|(i, t)| parse_f64(t, line, i + 1))
        .collect::<Result<_>>()?;
    Ok(GroundPlane::new(v[0], v[1], v[2], v[3])?)
}

pub fn serialize_ground_plane(g: &GroundPlane) -> String {
    let [a, b, c, d] = g.to_array();
    format!("{a} {b} {c} {d}\n")
}

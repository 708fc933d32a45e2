use serde::{Deserialize, Serialize};

use super::{parse_f64, DatasetError, Result};
use crate::geometry::BBox3D;

/// Axis-aligned image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Box2D {
    pub fn area(&self) -> f64 {
        (self.right - self.left).max(0.0) * (self.bottom - self.top).max(0.0)
    }
}

/// One object line.
///
/// Fields, whitespace separated: `category truncated occluded alpha left top
/// right bottom h w l x y z rotation_y`, optionally followed by a detection
/// `score` in result files. `(x, y, z)` is the 3D box centre in the camera
/// frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub category: String,
    pub truncated: f64,
    pub occluded: u8,
    pub alpha: f64,
    pub bbox2d: Box2D,
    pub bbox: BBox3D,
    pub score: Option<f64>,
}

const LABEL_FIELDS: usize = 15;

fn parse_line(line: &str, lineno: usize, allow_score: bool) -> Result<LabelRecord> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let max = if allow_score { LABEL_FIELDS + 1 } else { LABEL_FIELDS };
    if toks.len() < LABEL_FIELDS {
        return Err(DatasetError::parse(
            lineno,
            toks.len() + 1,
            format!("expected {LABEL_FIELDS} fields, found {}", toks.len()),
        ));
    }
    if toks.len() > max {
        return Err(DatasetError::parse(lineno, max + 1, "unexpected trailing field"));
    }
    let num = |i: usize| parse_f64(toks[i], lineno, i + 1);
    let occluded: u8 = toks[2]
        .parse()
        .map_err(|_| DatasetError::parse(lineno, 3, format!("occlusion must be an integer 0-255, found {:?}", toks[2])))?;
    let bbox = BBox3D { h: num(8)?, w: num(9)?, l: num(10)?, x: num(11)?, y: num(12)?, z: num(13)?, theta: num(14)? };
    bbox.validate()
        .map_err(|e| DatasetError::parse(lineno, 9, e.to_string()))?;
    let score = if toks.len() > LABEL_FIELDS { Some(num(LABEL_FIELDS)?) } else { None };
    Ok(LabelRecord {
        category: toks[0].to_string(),
        truncated: num(1)?,
        occluded,
        alpha: num(3)?,
        bbox2d: Box2D { left: num(4)?, top: num(5)?, right: num(6)?, bottom: num(7)? },
        bbox,
        score,
    })
}

fn parse_all(text: &str, allow_score: bool) -> Result<Vec<LabelRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1, allow_score))
        .collect()
}

/// Parses a ground-truth label file. Blank lines are skipped; anything else
/// must be a complete 15-field record.
pub fn parse_labels(text: &str) -> Result<Vec<LabelRecord>> {
    parse_all(text, false)
}

/// Parses a detection result file: label lines with an optional trailing
/// score.
pub fn parse_detections(text: &str) -> Result<Vec<LabelRecord>> {
    parse_all(text, true)
}

pub fn serialize_labels(records: &[LabelRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let b = &r.bbox;
        let d = &r.bbox2d;
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            r.category, r.truncated, r.occluded, r.alpha, d.left, d.top, d.right, d.bottom, b.h, b.w, b.l, b.x, b.y, b.z, b.theta
        ));
        if let Some(s) = r.score {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CAR: &str = "Car 0 0 -1.57 100.5 200.25 180 260 1.5 1.8 4.2 2.1 5.5 30.0 0.12";

    #[test]
    fn empty_file() {
        assert!(parse_labels("").unwrap().is_empty());
        assert!(parse_labels("\n\n").unwrap().is_empty());
    }

    #[test]
    fn field_mapping() {
        let r = &parse_labels(CAR).unwrap()[0];
        assert_eq!((r.bbox.l, r.bbox.w, r.bbox.h), (4.2, 1.8, 1.5));
        assert_eq!((r.bbox.x, r.bbox.y, r.bbox.z, r.bbox.theta), (2.1, 5.5, 30.0, 0.12));
        assert_eq!(r.bbox2d, Box2D { left: 100.5, top: 200.25, right: 180.0, bottom: 260.0 });
        assert_eq!(r.category, "Car");
        assert_eq!(r.score, None);
    }

    #[test]
    fn errors_carry_positions() {
        let text = format!("{CAR}\nCar 0 0 -1.57 100 200 180 260 1.5 1.8 4.2 2.1 5.5 30.0\n");
        assert!(matches!(parse_labels(&text), Err(DatasetError::Parse { line: 2, column: 15, .. })));
        let text = format!("{CAR} 0.9");
        assert!(matches!(parse_labels(&text), Err(DatasetError::Parse { line: 1, column: 16, .. })));
        assert_eq!(parse_detections(&text).unwrap()[0].score, Some(0.9));
        let text = CAR.replace("4.2", "abc");
        assert!(matches!(parse_labels(&text), Err(DatasetError::Parse { line: 1, column: 11, .. })));
        let text = CAR.replace(" 1.5 ", " -1.5 ");
        assert!(matches!(parse_labels(&text), Err(DatasetError::Parse { column: 9, .. })));
        let text = CAR.replace("Car 0 0", "Car 0 x");
        assert!(matches!(parse_labels(&text), Err(DatasetError::Parse { column: 3, .. })));
    }

    fn record() -> impl Strategy<Value = LabelRecord> {
        (
            prop::sample::select(vec!["Car", "Van", "Truck", "Bus"]),
            (0.0f64..1.0, 0u8..4, -3.0f64..3.0),
            prop::array::uniform4(-500.0f64..2000.0),
            prop::array::uniform3(0.1f64..20.0),
            prop::array::uniform3(-100.0f64..200.0),
            -3.0f64..3.0,
            prop::option::of(0.0f64..1.0),
        )
            .prop_map(|(cat, (tr, oc, al), b2, dims, loc, th, score)| LabelRecord {
                category: cat.to_string(),
                truncated: tr,
                occluded: oc,
                alpha: al,
                bbox2d: Box2D { left: b2[0], top: b2[1], right: b2[2], bottom: b2[3] },
                bbox: BBox3D { h: dims[0], w: dims[1], l: dims[2], x: loc[0], y: loc[1], z: loc[2], theta: th },
                score,
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(records in prop::collection::vec(record(), 0..100)) {
            let text = serialize_labels(&records);
            let back = parse_detections(&text).unwrap();
            prop_assert_eq!(&back, &records);
            prop_assert_eq!(serialize_labels(&back), text);
        }
    }
}

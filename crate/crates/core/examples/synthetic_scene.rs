//! Generate a small synthetic roadside dataset, write it as label, calib
//! and denorm files, and read it back.

use gpk::dataset::{load_frames, synthesize_scene, write_frames, CalibKeys, FrameSet, SceneConfig};
use gpk::geometry::bottom_center;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SceneConfig { frames: 4, objects_per_frame: 8, seed: 7, ..SceneConfig::default() };
    let frames = synthesize_scene(&cfg)?;
    let dir = tempfile::tempdir()?;
    let set = FrameSet::under(dir.path());
    let keys = CalibKeys::default();
    let written = write_frames(&set, &frames, &keys)?;
    println!("wrote {} files under {}", written.len(), dir.path().display());

    let back = load_frames(&set, &keys)?;
    println!("reloaded {} frames, identical: {}", back.len(), back == frames);
    let f = &back[0];
    let worst = f.labels.iter().map(|l| f.ground.signed_distance(&bottom_center(&l.bbox, &f.ground)).abs()).fold(0.0, f64::max);
    println!("frame {}: {} objects, max bottom-centre distance to ground {worst:.1e} m", f.id, f.labels.len());
    println!("first label line: {}", std::fs::read_to_string(set.labels.join("000000.txt"))?.lines().next().unwrap_or(""));
    Ok(())
}

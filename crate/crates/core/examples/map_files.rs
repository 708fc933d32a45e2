//! Write a refined plane-equation map and a depth map as GPKM files and
//! read them back.

use gpk::dataset::{synthesize_frame, SceneConfig};
use gpk::maps::{build_ground_depth_map, build_refined_denorm_map, DenormMap, GroundDepthMap, MapFile, MapGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SceneConfig::default();
    let frame = synthesize_frame(&cfg, 3)?;
    let grid = MapGrid::new(cfg.image_height, cfg.image_width, 16)?;
    let (h, w) = grid.dims();
    let k = grid.intrinsics(&frame.rig.intrinsics);
    let dir = tempfile::tempdir()?;

    let refined = build_refined_denorm_map(&frame.ground, &frame.boxes(), &k, h, w)?;
    let path = dir.path().join("refined.gpkm");
    MapFile::from(&refined).write(&path)?;
    let bytes = std::fs::read(&path)?;
    let back = DenormMap::try_from(MapFile::from_bytes(&bytes)?)?;
    println!("refined map: {} bytes, {}x{}x4", bytes.len(), back.height(), back.width());
    println!("re-encoded bytes identical: {}", MapFile::from(&back).to_bytes() == bytes);

    let depth = build_ground_depth_map(&k, &frame.ground, h, w)?;
    let file = MapFile::from(&depth);
    let back = GroundDepthMap::try_from(MapFile::from_bytes(&file.to_bytes())?)?;
    println!("depth map: {} of {} pixels on the ground", back.valid_count(), h * w);
    Ok(())
}

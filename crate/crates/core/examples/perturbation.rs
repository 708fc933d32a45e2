//! Rotate the camera mount by a small roll/pitch offset and check that the
//! image homography moves pixels exactly where the rotated camera sees them.

use gpk::dataset::{synthesize_frame, SceneConfig};
use gpk::geometry::{bottom_center, ground_homography, perturb_extrinsics, project_point};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = synthesize_frame(&SceneConfig::default(), 0)?;
    let (k, e) = (frame.rig.intrinsics, frame.rig.extrinsics);
    let (droll, dpitch) = (0.05, -0.08);
    let moved = perturb_extrinsics(&e, droll, dpitch);
    let h = ground_homography(&k, droll, dpitch)?;
    println!("camera centre kept: {:.2e}", (moved.camera_center() - e.camera_center()).norm());

    let mut worst: f64 = 0.0;
    for l in &frame.labels {
        let cam = bottom_center(&l.bbox, &frame.ground);
        let world = e.rotation.transpose() * (cam - e.translation);
        let clean = project_point(&cam, &k)?;
        let direct = project_point(&moved.to_camera(&world), &k)?;
        let q = h * Vector3::new(clean.u, clean.v, 1.0);
        let (u, v) = (q.x / q.z, q.y / q.z);
        worst = worst.max((u - direct.u).hypot(v - direct.v));
    }
    println!("{} bottom centres, worst homography error {worst:.2e} px", frame.labels.len());
    Ok(())
}

//! Depth of the ground seen through individual pixels, and a full ground
//! depth map, for a camera 6 m up and pitched 10 degrees down.

use gpk::geometry::{attitude_to_plane, ground_depth_at_pixel, CameraAttitude, CameraIntrinsics, Pixel};
use gpk::maps::build_ground_depth_map;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = CameraIntrinsics::new(500.0, 500.0, 464.0, 256.0)?;
    let ground = attitude_to_plane(&CameraAttitude::new(0.0, 10f64.to_radians(), 6.0)?)?;
    println!("ground plane (alpha, beta, gamma, d) = {:?}", ground.to_array());

    for v in [511.5, 400.0, 300.0, 260.0, 200.0] {
        match ground_depth_at_pixel(Pixel::new(464.0, v), &k, &ground) {
            Ok(z) => println!("row {v:>5}: ground at {z:8.2} m"),
            Err(e) => println!("row {v:>5}: {e}"),
        }
    }

    let map = build_ground_depth_map(&k, &ground, 512, 928)?;
    let valid = map.valid_count();
    let far = map.depths().iter().zip(map.mask()).filter(|(_, &ok)| ok).map(|(z, _)| *z).fold(0.0, f64::max);
    println!("depth map 512x928: {valid} ground pixels, farthest {far:.1} m");
    Ok(())
}

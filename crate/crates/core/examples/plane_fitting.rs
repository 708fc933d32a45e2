//! Fit a plane to three ground points and read the camera attitude off it.

use gpk::geometry::{attitude_to_plane, plane_from_three_points, plane_to_attitude, CameraAttitude};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = CameraAttitude::new(0.02, 0.17, 6.2)?;
    let g = attitude_to_plane(&truth)?;

    // three points on the plane: pick (x, z) and solve for y
    let on_plane = |x: f64, z: f64| Vector3::new(x, -(g.alpha() * x + g.gamma() * z + g.d()) / g.beta(), z);
    let (p1, p2, p3) = (on_plane(-4.0, 20.0), on_plane(5.0, 35.0), on_plane(1.0, 80.0));
    let fitted = plane_from_three_points(&p1, &p2, &p3)?;
    for p in [p1, p2, p3] {
        println!("residual {:.2e}", fitted.signed_distance(&p));
    }

    let a = plane_to_attitude(&fitted)?;
    println!("roll {:.6} pitch {:.6} height {:.6}", a.roll, a.pitch, a.height);
    println!("truth roll {:.6} pitch {:.6} height {:.6}", truth.roll, truth.pitch, truth.height);

    let collinear = plane_from_three_points(&p1, &p2, &(p2 * 2.0 - p1));
    println!("collinear points: {}", collinear.unwrap_err());
    Ok(())
}

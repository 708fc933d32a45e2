//! Evaluate the detection losses on hand-picked values and combine them with
//! the default weights.

use gpk::attention::{
    angle_l1_loss, focal_loss, giou_loss_2d, laplace_depth_loss, total_loss, LossComponents, LossWeights, FOCAL_ALPHA,
    FOCAL_GAMMA,
};
use gpk::dataset::Box2D;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let class = focal_loss(0.7, true, FOCAL_GAMMA, FOCAL_ALPHA)?;
    let a = Box2D { left: 100.0, top: 80.0, right: 180.0, bottom: 140.0 };
    let b = Box2D { left: 110.0, top: 90.0, right: 200.0, bottom: 150.0 };
    let giou = giou_loss_2d(&a, &b)?;
    let depth = laplace_depth_loss(41.0, 42.5, 2.0)?;
    let angle = angle_l1_loss(3.1, -3.1);
    println!("focal {class:.5}  1-GIoU {giou:.5}  angle {angle:.5}");
    println!("laplace {:.5}  d/d_pred {:.5}  d/d_sigma {:.5}", depth.value, depth.d_pred, depth.d_sigma);

    let c = LossComponents { class, giou, depth: depth.value, angle, ..LossComponents::default() };
    let w = LossWeights::default();
    println!("weights {:?}", w.get());
    println!("total {:.5}", total_loss(&c, &w));
    println!("unit components total {}", total_loss(&LossComponents::from_array([1.0; 8]), &w));
    Ok(())
}

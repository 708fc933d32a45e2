//! Depth histogram of annotated bottom centres against the per-pixel roll,
//! pitch and height histograms of the refined plane-equation maps.

use gpk::analysis::{attitude_histograms, depth_histogram, histogram_csv, HistogramRange};
use gpk::dataset::{synthesize_scene, SceneConfig};
use gpk::maps::MapGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SceneConfig::default();
    let frames = synthesize_scene(&cfg)?;
    let depth = depth_histogram(&frames, 20, HistogramRange::Auto)?;
    let att = attitude_histograms(&frames, 20, &MapGrid::new(cfg.image_height, cfg.image_width, 16)?)?;

    print!("{}", histogram_csv(&depth));
    for (name, h) in [("depth", &depth), ("roll", &att.roll), ("pitch", &att.pitch), ("height", &att.height)] {
        let (lo, hi) = h.occupied_range().unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{name:>6}: {} samples over [{lo:.4}, {hi:.4}], relative support {:.3}",
            h.total(),
            h.relative_support().unwrap_or(f64::NAN)
        );
    }
    let ratio = depth.relative_support().unwrap_or(0.0) / att.pitch.relative_support().unwrap_or(f64::INFINITY);
    println!("depth spreads {ratio:.1}x wider than pitch relative to its mean");
    Ok(())
}

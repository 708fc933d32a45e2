//! Perturb every frame's camera by N(0, 0.3) rad in roll and pitch and
//! measure how much the row-vs-depth and row-vs-attitude scatters move.

use gpk::analysis::{robustness_report, sample_perturbations, scatter_csv, v_correlation_series, Quantity};
use gpk::dataset::{synthesize_scene, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..5 {
        let frames = synthesize_scene(&SceneConfig { seed, ..SceneConfig::default() })?;
        let r = robustness_report(&frames, 0.3, seed)?;
        println!(
            "seed {seed}: overlap depth {:.3} roll {:.3} pitch {:.3} -> attitude more robust: {}",
            r.depth,
            r.roll,
            r.pitch,
            r.attitude_more_robust()
        );
    }

    let frames = synthesize_scene(&SceneConfig { frames: 2, objects_per_frame: 3, ..SceneConfig::default() })?;
    let offsets = sample_perturbations(frames.len(), 0.3, 0)?;
    let clean = v_correlation_series(&frames, Quantity::Pitch, None)?;
    let moved = v_correlation_series(&frames, Quantity::Pitch, Some(&offsets))?;
    print!("{}", scatter_csv(&[&clean, &moved]));
    Ok(())
}

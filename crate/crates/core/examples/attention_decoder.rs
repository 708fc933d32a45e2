//! Seeded forward pass through the visual encoder, ground encoder and the
//! three-block ground-guided decoder. Without residual paths the encoders
//! average their tokens together, so the decoder's ground attention ends up
//! flat; the same first-block weights applied to raw ground tokens show
//! where queries would look before that mixing.

use gpk::attention::{ground_cross_attention, random_matrix, AttentionMap, FeatureSequence, GroundGuidedModel, ModelConfig, Role};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn summarize(label: &str, a: &AttentionMap, cols: usize) {
    println!("{label}:");
    for q in 0..3 {
        let row = a.weights().row(q);
        let (best, w) = row.iter().enumerate().fold((0, f64::MIN), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
        let spread = w - row.min();
        println!(
            "  query {q}: row sum {:.12}, peak cell ({}, {}) weight {w:.4}, max-min {spread:.2e}",
            row.sum(),
            best / cols,
            best % cols
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig { channels: 32, heads: 4, hidden: 64, queries: 10, ..ModelConfig::default() };
    let model = GroundGuidedModel::seeded(cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // a 128x224 image: 8x14 ground tokens at stride 16
    let (rows, cols) = (8, 14);
    let visual = FeatureSequence::new(random_matrix(60, cfg.channels, 1.0, &mut rng), Role::Visual)?;
    let ground = FeatureSequence::new(random_matrix(rows * cols, cfg.channels, 1.0, &mut rng), Role::Ground)?;
    let out = model.forward(&visual, &ground)?;

    println!("queries out: {} x {}, uniform weight {:.4}", out.queries.len(), out.queries.channels(), 1.0 / (rows * cols) as f64);
    summarize("decoder block 1, encoded ground", &out.ground_attention[0], cols);
    let (_, raw) = ground_cross_attention(&model.queries, &ground, &model.decoder.blocks[0].ground_attention)?;
    summarize("decoder block 1, raw ground tokens", &raw, cols);
    Ok(())
}

//! Forward-only reference transformer blocks for ground-guided detection:
//! multi-head self and cross attention, the token-wise FFN, visual/ground
//! encoders, the ground-guided decoder, and the training losses with
//! analytic gradients. Nothing here is trained; weights are seeded.

mod blocks;
mod fixture;
mod invariants;
mod layers;
mod losses;
mod tensor;

pub use blocks::{
    decoder_block, encoder_block, ffn, ground_cross_attention, multi_head_attention, positional_encoding,
    self_attention, visual_cross_attention, Decoder, Encoder, GroundGuidedModel, ModelConfig, ModelOutput,
};
pub use fixture::{fixture_inputs, matrix_digest, Fixture, FixtureShapes};
pub use invariants::{gradient_check, run_invariant_suite, InvariantResult};
pub use layers::{AttentionWeights, DecoderBlockWeights, EncoderBlockWeights, FfnWeights, GroundPredictor, Linear, LinearGroundHead};
pub use losses::{
    angle_l1_loss, focal_loss, focal_loss_grad, frame_losses, giou_2d, giou_loss_2d, l1_loss, l1_loss_grad,
    laplace_depth_loss, total_loss, LaplaceLoss, LossComponents, LossWeights, FOCAL_ALPHA, FOCAL_GAMMA,
};
pub use tensor::{random_matrix, AttentionMap, FeatureSequence, Mat, QuerySet, Role};

#[derive(Debug, thiserror::Error)]
pub enum AttentionError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("expected {expected:?} features, got {got:?}")]
    RoleMismatch { expected: Role, got: Role },
    #[error("outside the loss domain: {0}")]
    Domain(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Map(#[from] crate::maps::MapError),
}

pub type Result<T> = std::result::Result<T, AttentionError>;

//! Factorized light field: a position network emitting `[u, v, w]` and a
//! direction network emitting β, combined as `Sig([u, v, w]ᵀ β)`, plus its
//! photometric training loop.

mod checkpoint;
mod factorized;
mod mlp;
mod train;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use factorized::{logits, predict_color, DirectionWeights, EmbeddingTriplet, FactorizedField, FieldConfig};
pub use mlp::{encode_into, Mlp, MlpSpec, Tape};
pub use train::{
    adam_step, grad, hard_ray_resample, loss, lr_schedule, lr_schedule_cosine, per_ray_losses, precompute_hits,
    sample_with_hard, top_decile, train, train_with_hits, AdamState, Gradients, LossOptions, LossRecord, MissPolicy,
    TrainConfig, TrainOutcome, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
};

use crate::error::Result;

/// Field with `width`-wide networks of the given depths and default encodings.
pub fn init_field(dim: usize, pos_depth: usize, dir_depth: usize, width: usize, seed: u64) -> Result<FactorizedField> {
    FactorizedField::init(
        &FieldConfig {
            dim,
            pos_depth,
            pos_width: width,
            dir_depth,
            dir_width: width,
            ..FieldConfig::default()
        },
        seed,
    )
}

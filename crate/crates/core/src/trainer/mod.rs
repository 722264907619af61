//! Negative sampling, ranking loss, optimization and checkpoints.

mod checkpoint;
mod config;
mod features;
mod optim;
mod train;

pub use checkpoint::{Checkpoint, Scorer, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::TrainConfig;
pub use features::Featurizer;
pub use optim::{clip_global_norm, Adam};
pub use train::{batch_loss, build_vocabulary, sample_negatives, train, train_with_progress, EpochMetrics, TrainOutcome};

//! A miniature fully-convolutional pose regressor and its trainer.

mod checkpoint;
mod network;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use network::{backward, forward, forward_trace, LayerShape, ModelConfig, ModelParams, Trace};
pub use train::{
    history_csv, prepare_input, prepare_sample, sample_loss, sample_loss_grad, train, train_from,
    Adam, EpochRecord, PlateauScheduler, TrainConfig, TrainOutcome, TrainingSample,
};

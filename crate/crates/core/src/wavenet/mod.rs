//! Conditional WaveNet: mu-law codec, conditioning, teacher-forced forward
//! and backward passes, autoregressive generation, training and weight files.

mod conditioning;
mod config;
mod generate;
mod mulaw;
mod net;
mod params;
mod real;
mod train;
mod weights;

pub use conditioning::{prepare_conditioning, shift_for_conditioning, Conditioning, DEFAULT_COND_SHIFT};
pub use config::{TrainConfig, WaveNetConfig};
pub use generate::{generate, Direction, GenerationStream, SamplingMode};
pub use mulaw::{mulaw_decode, mulaw_encode, MuLawParams};
pub use net::{softmax_rows, wavenet_forward};
pub use params::{LayerParams, WaveNet};
pub use real::Real;
pub use train::{
    batch_loss_and_gradient, ema_update, teacher_forcing, BatchSampler, OptimizerState, TrainExample,
    Trainer, TrainingClip,
};
pub use weights::{load_weights, save_weights, WaveNetWeights};

#[cfg(test)]
mod tests;

//! Latent diffusion numerics: noise schedule, forward and reverse steps,
//! classifier-free guidance, music embeddings, beat/chord encoders and the
//! cross-attention conditioning chain, with a small trainable denoiser.

mod checkpoint;
mod embed;
mod encoders;
mod layers;
mod sampling;
mod schedule;
mod toy;

pub use checkpoint::{Checkpoint, NamedTensor};
pub use embed::{fme_embed, mpe_embed, rotation, SinusoidConfig};
pub use encoders::{BeatEncoder, ChordEncoder, INVERSION_STATES};
pub use layers::{munet_condition, AttentionMaps, ConditionBundle, Linear, MultiHeadAttention, MunetConditioning};
pub use sampling::{
    cfg_mix, diffusion_loss, diffusion_loss_with_draws, forward_chain, forward_sample,
    gaussian_latent, reverse_step, toy_denoise_loop, Denoiser, LossDraw, OracleDenoiser,
};
pub use schedule::{make_schedule, NoiseSchedule, DEFAULT_BETA_MAX, DEFAULT_BETA_MIN};
pub use toy::{ToyDenoiser, ToyTrainer, TrainReport};

use ndarray::Array2;

/// Stand-in for a VAE latent: `[time × channels]`.
pub type Latent = Array2<f64>;

pub const DEFAULT_D_MODEL: usize = 64;
pub const DEFAULT_D_EMBED: usize = 32;
pub const DEFAULT_STEPS: usize = 200;

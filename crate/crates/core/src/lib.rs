//! Music caption dataset tooling: audio analysis, augmentation, caption
//! templating, controllability and quality metrics, and the latent
//! diffusion conditioning numerics.

pub mod audio;
pub mod augment;
pub mod caption;
pub mod diffusion;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod mir;
pub mod synth;

pub use error::{Error, Result};

//! Audio clips, WAV I/O and the spectral front end shared by the extractors
//! and the augmentations.

mod resample;
mod spectral;
mod wav;

pub use resample::{resample, resample_by_ratio};
pub use spectral::{
    chroma, chroma_in_band, onset_envelope, pitch_class_of, stft, Chromagram, Spectrogram,
    CHROMA_FLOOR_HZ,
};
pub use wav::{read_wav, write_wav, WavWriteReport};

use crate::error::{Error, Result};

/// Sample rate every extractor works at.
pub const CANONICAL_RATE: u32 = 16_000;

/// Lowest sample rate accepted anywhere in the toolkit.
pub const MIN_SAMPLE_RATE: u32 = 8_000;

/// Default STFT window (samples) for onset analysis.
pub const DEFAULT_WINDOW: usize = 1024;
/// Default STFT hop (samples) for onset analysis.
pub const DEFAULT_HOP: usize = 256;

/// Mono PCM audio with nominal amplitude range [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate} Hz is below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("audio contains non-finite samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// A clip of `seconds` of silence.
    pub fn silence(seconds: f64, sample_rate: u32) -> Result<Self> {
        let len = (seconds * sample_rate as f64).round() as usize;
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|s| s * s).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Samples in `[start, start + seconds)`, zero-padded past the end.
    pub fn segment(&self, start_seconds: f64, seconds: f64) -> Result<Self> {
        let rate = self.sample_rate as f64;
        let start = (start_seconds * rate).round().max(0.0) as usize;
        let len = (seconds * rate).round() as usize;
        let mut out = vec![0.0; len];
        for (i, o) in out.iter_mut().enumerate() {
            if let Some(s) = self.samples.get(start + i) {
                *o = *s;
            }
        }
        Self::new(out, self.sample_rate)
    }

    /// Truncate or zero-pad to exactly `len` samples.
    pub fn with_len(mut self, len: usize) -> Result<Self> {
        self.samples.resize(len, 0.0);
        Self::new(self.samples, self.sample_rate)
    }

    /// Resampled to [`CANONICAL_RATE`] unless already there.
    pub fn to_canonical(&self) -> Result<Self> {
        resample(self, CANONICAL_RATE)
    }
}

use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::AudioClip;
use crate::error::{Error, Result};

/// Bins below this frequency (A1) are left out of the chromagram.
pub const CHROMA_FLOOR_HZ: f64 = 55.0;

/// Frames on each side of the centered mean subtracted from the flux.
const ONSET_LOCAL_MEAN_FRAMES: usize = 8;

/// Magnitude STFT. Frame `t` covers samples `[t*hop, t*hop + window)`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    /// `[n_frames x n_bins]`, non-negative.
    pub frames: Array2<f64>,
    pub hop_seconds: f64,
    pub window_seconds: f64,
    /// Center frequency of every bin.
    pub bin_hz: Vec<f64>,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.ncols()
    }

    /// Time of the middle of frame `t`.
    pub fn frame_center(&self, t: usize) -> f64 {
        t as f64 * self.hop_seconds + 0.5 * self.window_seconds
    }
}

/// Pitch-class energy per frame, `0 = C .. 11 = B`.
#[derive(Debug, Clone)]
pub struct Chromagram {
    /// `[n_frames x 12]`, non-negative.
    pub frames: Array2<f64>,
    pub hop_seconds: f64,
    pub window_seconds: f64,
}

impl Chromagram {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn frame_center(&self, t: usize) -> f64 {
        t as f64 * self.hop_seconds + 0.5 * self.window_seconds
    }

    /// Mean over all frames.
    pub fn mean(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        let n = self.n_frames().max(1) as f64;
        for row in self.frames.rows() {
            for (o, v) in out.iter_mut().zip(row.iter()) {
                *o += v / n;
            }
        }
        out
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed magnitude STFT.
pub fn stft(clip: &AudioClip, window_samples: usize, hop_samples: usize) -> Result<Spectrogram> {
    if !window_samples.is_power_of_two() {
        return Err(Error::invalid(format!(
            "window {window_samples} is not a power of two"
        )));
    }
    if hop_samples == 0 || hop_samples > window_samples {
        return Err(Error::invalid(format!(
            "hop {hop_samples} must be in 1..={window_samples}"
        )));
    }
    let x = clip.samples();
    if x.len() < window_samples {
        return Err(Error::TooShort {
            needed_seconds: window_samples as f64 / clip.sample_rate() as f64,
            actual_seconds: clip.duration(),
        });
    }
    let n_frames = (x.len() - window_samples) / hop_samples + 1;
    let n_bins = window_samples / 2 + 1;
    let window = hann(window_samples);
    let fft = FftPlanner::new().plan_fft_forward(window_samples);

    let mut frames = Array2::zeros((n_frames, n_bins));
    let mut buf = vec![Complex::new(0.0, 0.0); window_samples];
    for (t, mut row) in frames.rows_mut().into_iter().enumerate() {
        let start = t * hop_samples;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(x[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in row.iter_mut().enumerate() {
            *v = buf[k].norm();
        }
    }

    let rate = clip.sample_rate() as f64;
    Ok(Spectrogram {
        frames,
        hop_seconds: hop_samples as f64 / rate,
        window_seconds: window_samples as f64 / rate,
        bin_hz: (0..n_bins)
            .map(|k| k as f64 * rate / window_samples as f64)
            .collect(),
    })
}

/// Half-wave rectified spectral flux with a centered local mean removed and
/// the result clamped at zero. One value per frame; frame 0 is always 0.
pub fn onset_envelope(spec: &Spectrogram) -> Vec<f64> {
    let n = spec.n_frames();
    let mut flux = vec![0.0; n];
    for t in 1..n {
        let cur = spec.frames.row(t);
        let prev = spec.frames.row(t - 1);
        flux[t] = cur
            .iter()
            .zip(prev.iter())
            .map(|(c, p)| (c - p).max(0.0))
            .sum();
    }
    let w = ONSET_LOCAL_MEAN_FRAMES;
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(w);
            let hi = (t + w + 1).min(n);
            let mean = flux[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            (flux[t] - mean).max(0.0)
        })
        .collect()
}

/// Pitch class of a frequency, rounding to the nearest equal-tempered
/// semitone relative to A440.
pub fn pitch_class_of(freq_hz: f64) -> usize {
    let semis = (12.0 * (freq_hz / 440.0).log2()).round() as i64;
    (semis + 9).rem_euclid(12) as usize
}

/// Fold bins with `lo_hz <= f < hi_hz` into the 12 pitch classes.
pub fn chroma_in_band(spec: &Spectrogram, lo_hz: f64, hi_hz: f64) -> Chromagram {
    let classes: Vec<Option<usize>> = spec
        .bin_hz
        .iter()
        .map(|&f| (f >= lo_hz && f < hi_hz && f > 0.0).then(|| pitch_class_of(f)))
        .collect();
    let mut frames = Array2::zeros((spec.n_frames(), 12));
    for (src, mut dst) in spec.frames.rows().into_iter().zip(frames.rows_mut()) {
        for (mag, class) in src.iter().zip(&classes) {
            if let Some(c) = class {
                dst[*c] += mag;
            }
        }
    }
    Chromagram {
        frames,
        hop_seconds: spec.hop_seconds,
        window_seconds: spec.window_seconds,
    }
}

/// Chromagram over all bins at or above [`CHROMA_FLOOR_HZ`].
pub fn chroma(spec: &Spectrogram) -> Chromagram {
    chroma_in_band(spec, CHROMA_FLOOR_HZ, f64::INFINITY)
}

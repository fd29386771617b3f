use std::f64::consts::PI;

use super::{AudioClip, MIN_SAMPLE_RATE};
use crate::error::{Error, Result};

/// Zero crossings of the interpolation kernel on each side, measured at the
/// lower of the two rates.
const KERNEL_ZERO_CROSSINGS: f64 = 24.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(u: f64) -> f64 {
    // u in [-1, 1]
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let a = PI * (u + 1.0);
    0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos()
}

/// Band-limited resampling of raw samples by `ratio` = output rate / input
/// rate. Output length is `round(len * ratio)`.
pub fn resample_by_ratio(samples: &[f64], ratio: f64) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio.is_finite(), "ratio must be positive");
    let out_len = (samples.len() as f64 * ratio).round() as usize;
    if (ratio - 1.0).abs() < 1e-15 {
        return samples.to_vec();
    }
    let cutoff = ratio.min(1.0) * ROLLOFF;
    let half_width = KERNEL_ZERO_CROSSINGS / cutoff;
    let n = samples.len() as isize;

    (0..out_len)
        .map(|i| {
            let center = i as f64 / ratio;
            let lo = ((center - half_width).ceil() as isize).max(0);
            let hi = ((center + half_width).floor() as isize).min(n - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = center - k as f64;
                acc += samples[k as usize] * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            acc
        })
        .collect()
}

/// Resample a clip to `target_rate`. Equal rates return the clip unchanged.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate < MIN_SAMPLE_RATE {
        return Err(Error::invalid(format!(
            "target rate {target_rate} Hz is below {MIN_SAMPLE_RATE} Hz"
        )));
    }
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let ratio = target_rate as f64 / clip.sample_rate() as f64;
    AudioClip::new(resample_by_ratio(clip.samples(), ratio), target_rate)
}

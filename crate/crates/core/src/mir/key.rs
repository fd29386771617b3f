//! Krumhansl-Schmuckler key finding over the mean chromagram.

use super::chords::harmony_chroma;
use super::types::{KeyEstimate, Mode, PitchClass};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Krumhansl-Kessler probe-tone ratings, tonic first.
pub const MAJOR_PROFILE: [f64; 12] = [
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88,
];
pub const MINOR_PROFILE: [f64; 12] = [
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17,
];

const MIN_CLIP_SECONDS: f64 = 1.0;

fn pearson(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for i in 0..12 {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma).powi(2);
        db += (b[i] - mb).powi(2);
    }
    if da <= 0.0 || db <= 0.0 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

/// Best of the 24 rotated profiles for a 12-bin pitch-class distribution.
/// Ties go to major, then to the lower pitch class.
pub fn key_from_chroma(chroma: &[f64; 12]) -> Result<KeyEstimate> {
    if chroma.iter().sum::<f64>() <= 1e-9 {
        return Err(Error::NoKey);
    }
    let mut best: Option<(KeyEstimate, f64)> = None;
    for (mode, profile) in [(Mode::Major, &MAJOR_PROFILE), (Mode::Minor, &MINOR_PROFILE)] {
        for root in 0..12 {
            let rotated: [f64; 12] = std::array::from_fn(|c| profile[(c + 12 - root) % 12]);
            let r = pearson(chroma, &rotated);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((KeyEstimate::new(PitchClass::wrapping(root as i64), mode), r));
            }
        }
    }
    Ok(best.unwrap().0)
}

pub fn estimate_key(clip: &AudioClip) -> Result<KeyEstimate> {
    if clip.duration() < MIN_CLIP_SECONDS {
        return Err(Error::TooShort {
            needed_seconds: MIN_CLIP_SECONDS,
            actual_seconds: clip.duration(),
        });
    }
    let (full, _) = harmony_chroma(clip)?;
    key_from_chroma(&full.mean())
}

//! Music diversification: pitch shift, speed change and gradual volume
//! change, plus the matching feature co-transformation.

mod vocoder;

pub use vocoder::{time_scale, VOCODER_HOP, VOCODER_WINDOW};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{resample_by_ratio, AudioClip};
use crate::error::{Error, Result};
use crate::mir::{Beat, BeatGrid, ChordEvent, ChordSequence, FeatureSet, TempoBpm};

pub const MAX_SEMITONES: i32 = 3;
pub const MIN_STRETCH: f64 = 0.75;
pub const MAX_STRETCH: f64 = 1.25;
pub const MIN_GAIN: f64 = 0.1;
pub const MAX_GAIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampDirection {
    Crescendo,
    Decrescendo,
}

impl RampDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            RampDirection::Crescendo => "crescendo",
            RampDirection::Decrescendo => "decrescendo",
        }
    }
}

/// One audio alteration, as stored in manifests, e.g.
/// `{"kind":"pitch_shift","k":2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    PitchShift {
        k: i32,
    },
    TimeStretch {
        factor: f64,
    },
    VolumeRamp {
        direction: RampDirection,
        g_min: f64,
        pivot_seconds: f64,
    },
}

impl Augmentation {
    /// Checks the parameter ranges. `duration` bounds the ramp pivot.
    pub fn validate(&self, duration: f64) -> Result<()> {
        match *self {
            Augmentation::PitchShift { k } => check_semitones(k),
            Augmentation::TimeStretch { factor } => check_stretch(factor),
            Augmentation::VolumeRamp {
                g_min,
                pivot_seconds,
                ..
            } => check_ramp(g_min, pivot_seconds, duration),
        }
    }

    pub fn apply(&self, clip: &AudioClip) -> Result<AudioClip> {
        match *self {
            Augmentation::PitchShift { k } => pitch_shift(clip, k),
            Augmentation::TimeStretch { factor } => time_stretch(clip, factor),
            Augmentation::VolumeRamp {
                direction,
                g_min,
                pivot_seconds,
            } => volume_ramp(clip, direction, g_min, pivot_seconds),
        }
    }
}

fn check_semitones(k: i32) -> Result<()> {
    if k == 0 || k.abs() > MAX_SEMITONES {
        return Err(Error::invalid(format!(
            "pitch shift {k} outside +-1..={MAX_SEMITONES} semitones"
        )));
    }
    Ok(())
}

fn check_stretch(factor: f64) -> Result<()> {
    if !(MIN_STRETCH..=MAX_STRETCH).contains(&factor) || factor == 1.0 {
        return Err(Error::invalid(format!(
            "stretch factor {factor} outside [{MIN_STRETCH}, {MAX_STRETCH}] or equal to 1"
        )));
    }
    Ok(())
}

fn check_ramp(g_min: f64, pivot: f64, duration: f64) -> Result<()> {
    if !(MIN_GAIN..=MAX_GAIN).contains(&g_min) {
        return Err(Error::invalid(format!(
            "ramp minimum gain {g_min} outside [{MIN_GAIN}, {MAX_GAIN}]"
        )));
    }
    if !(pivot > 0.0 && pivot <= duration) {
        return Err(Error::invalid(format!(
            "ramp pivot {pivot} s outside (0, {duration}]"
        )));
    }
    Ok(())
}

/// Scale down so the peak does not exceed 1.
fn limit_peak(mut samples: Vec<f64>) -> Vec<f64> {
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        samples.iter_mut().for_each(|s| *s /= peak);
    }
    samples
}

/// Shift all frequencies by `2^(k/12)` keeping the duration: resample by
/// `2^(-k/12)`, then time-scale back to the original length.
pub fn pitch_shift(clip: &AudioClip, k: i32) -> Result<AudioClip> {
    check_semitones(k)?;
    let ratio = 2f64.powf(k as f64 / 12.0);
    let squeezed = resample_by_ratio(clip.samples(), 1.0 / ratio);
    let mut restored = time_scale(&squeezed, 1.0 / ratio);
    restored.resize(clip.len(), 0.0);
    AudioClip::new(limit_peak(restored), clip.sample_rate())
}

/// Change speed by `factor` (> 1 is faster) without changing pitch.
pub fn time_stretch(clip: &AudioClip, factor: f64) -> Result<AudioClip> {
    check_stretch(factor)?;
    let out = time_scale(clip.samples(), factor);
    AudioClip::new(limit_peak(out), clip.sample_rate())
}

/// Linear gain ramp between `g_min` and 1. A crescendo rises from `g_min`
/// at the start to 1 at the pivot; a decrescendo holds 1 until the pivot
/// and then falls to `g_min` at the end.
pub fn volume_ramp(
    clip: &AudioClip,
    direction: RampDirection,
    g_min: f64,
    pivot_seconds: f64,
) -> Result<AudioClip> {
    check_ramp(g_min, pivot_seconds, clip.duration())?;
    let rate = clip.sample_rate() as f64;
    let duration = clip.duration();
    let out = clip
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let t = i as f64 / rate;
            let gain = match direction {
                RampDirection::Crescendo if t < pivot_seconds => {
                    g_min + (1.0 - g_min) * t / pivot_seconds
                }
                RampDirection::Crescendo => 1.0,
                RampDirection::Decrescendo if t <= pivot_seconds => 1.0,
                RampDirection::Decrescendo => {
                    let span = (duration - pivot_seconds).max(f64::MIN_POSITIVE);
                    1.0 - (1.0 - g_min) * ((t - pivot_seconds) / span).min(1.0)
                }
            };
            s * gain
        })
        .collect();
    AudioClip::new(out, clip.sample_rate())
}

/// Carry extracted features through an augmentation. Events later than
/// `window_seconds` after a time stretch are dropped.
pub fn co_transform_features(
    features: &FeatureSet,
    aug: &Augmentation,
    window_seconds: f64,
) -> Result<FeatureSet> {
    match *aug {
        Augmentation::PitchShift { k } => Ok(FeatureSet {
            beats: features.beats.clone(),
            chords: features.chords.as_ref().map(|s| {
                ChordSequence::new(
                    s.entries()
                        .iter()
                        .map(|e| ChordEvent {
                            root: e.root.transpose(k),
                            ..*e
                        })
                        .collect(),
                )
                .expect("transposition keeps times ordered")
            }),
            key: features.key.map(|key| key.transpose(k)),
            bpm: features.bpm,
        }),
        Augmentation::TimeStretch { factor } => {
            let beats = match &features.beats {
                None => None,
                Some(g) => {
                    let entries: Vec<Beat> = g
                        .entries()
                        .iter()
                        .map(|b| Beat {
                            beat_type: b.beat_type,
                            time: b.time / factor,
                        })
                        .filter(|b| b.time <= window_seconds)
                        .collect();
                    Some(BeatGrid::new(g.meter(), entries)?)
                }
            };
            let chords = match &features.chords {
                None => None,
                Some(s) => Some(ChordSequence::new(
                    s.entries()
                        .iter()
                        .map(|e| ChordEvent {
                            time: e.time / factor,
                            ..*e
                        })
                        .filter(|e| e.time <= window_seconds)
                        .collect(),
                )?),
            };
            let bpm = features
                .bpm
                .map(|b| TempoBpm::new(b.bpm() * factor))
                .transpose()?;
            Ok(FeatureSet {
                beats,
                chords,
                key: features.key,
                bpm,
            })
        }
        Augmentation::VolumeRamp { .. } => Ok(features.clone()),
    }
}

/// The eleven dataset-build variants for one clip: every nonzero semitone
/// shift in -3..=3, four speed changes of +-5..25 %, one volume ramp.
pub fn plan_dataset_augmentations<R: Rng + ?Sized>(
    rng: &mut R,
    duration: f64,
) -> Vec<Augmentation> {
    let mut plan: Vec<Augmentation> = (-MAX_SEMITONES..=MAX_SEMITONES)
        .filter(|&k| k != 0)
        .map(|k| Augmentation::PitchShift { k })
        .collect();
    for _ in 0..4 {
        let amount = rng.random_range(0.05..=0.25);
        let factor = if rng.random_bool(0.5) {
            1.0 + amount
        } else {
            1.0 - amount
        };
        plan.push(Augmentation::TimeStretch { factor });
    }
    let direction = if rng.random_bool(0.5) {
        RampDirection::Crescendo
    } else {
        RampDirection::Decrescendo
    };
    let g_min = rng.random_range(MIN_GAIN..=MAX_GAIN);
    let pivot_seconds = match direction {
        RampDirection::Crescendo => duration * rng.random_range(0.25..=1.0),
        RampDirection::Decrescendo => duration * rng.random_range(0.05..=0.75),
    };
    plan.push(Augmentation::VolumeRamp {
        direction,
        g_min,
        pivot_seconds,
    });
    plan
}

#[cfg(test)]
mod tests;

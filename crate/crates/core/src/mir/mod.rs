//! Beat, tempo, chord and key extraction.

mod beats;
mod chords;
mod dump;
mod key;
mod types;

pub use beats::{estimate_tempo, track_beats};
pub use chords::{recognize_chords, MIN_RUN_SECONDS, SELF_TRANSITION_BONUS};
pub use dump::FeatureDump;
pub use key::{estimate_key, key_from_chroma, MAJOR_PROFILE, MINOR_PROFILE};
pub use types::{
    Beat, BeatGrid, ChordEvent, ChordSequence, ChordType, FeatureSet, KeyEstimate, Mode,
    PitchClass, Spelling, TempoBpm,
};

use crate::audio::AudioClip;
use crate::error::Result;

/// Which extractors failed on a clip, with their messages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtractionReport {
    pub warnings: Vec<String>,
}

/// Run all four extractors. Individual failures leave that feature absent
/// and are reported; only audio-level errors are returned.
pub fn extract_features(clip: &AudioClip) -> Result<(FeatureSet, ExtractionReport)> {
    let clip = clip.to_canonical()?;
    let mut report = ExtractionReport::default();
    let mut features = FeatureSet::default();

    match track_beats(&clip) {
        Ok(grid) => {
            match estimate_tempo(&grid) {
                Ok(bpm) => features.bpm = Some(bpm),
                Err(e) => report.warnings.push(format!("tempo: {e}")),
            }
            features.beats = Some(grid);
        }
        Err(e) => report.warnings.push(format!("beats: {e}")),
    }
    match recognize_chords(&clip) {
        Ok(seq) => features.chords = Some(seq),
        Err(e) => report.warnings.push(format!("chords: {e}")),
    }
    match estimate_key(&clip) {
        Ok(k) => features.key = Some(k),
        Err(e) => report.warnings.push(format!("key: {e}")),
    }
    Ok((features, report))
}

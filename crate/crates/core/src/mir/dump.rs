use serde::{Deserialize, Serialize};

use super::types::{
    Beat, BeatGrid, ChordEvent, ChordSequence, ChordType, FeatureSet, KeyEstimate, Mode,
    PitchClass, TempoBpm,
};
use crate::error::{Error, Result};

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyDump {
    pub root: String,
    pub mode: Mode,
}

/// JSON form of a [`FeatureSet`]: beats as `[type, time]`, chords as
/// `[rootName, ctype, inverted, time]`, times rounded to milliseconds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureDump {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beats: Option<Vec<(u8, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chords: Option<Vec<(String, String, bool, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<KeyDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bpm: Option<f64>,
}

impl FeatureDump {
    pub fn from_features(id: Option<String>, f: &FeatureSet) -> Self {
        let spelling = f.spelling();
        Self {
            id,
            beats: f.beats.as_ref().map(|g| {
                g.entries()
                    .iter()
                    .map(|b| (b.beat_type, round3(b.time)))
                    .collect()
            }),
            meter: f.meter(),
            chords: f.chords.as_ref().map(|s| {
                s.entries()
                    .iter()
                    .map(|e| {
                        (
                            e.root.name(spelling).to_string(),
                            e.ctype.label().to_string(),
                            e.inverted,
                            round3(e.time),
                        )
                    })
                    .collect()
            }),
            key: f.key.map(|k| KeyDump {
                root: k.root_name().to_string(),
                mode: k.mode,
            }),
            bpm: f.bpm.map(|b| round3(b.bpm())),
        }
    }

    pub fn to_features(&self) -> Result<FeatureSet> {
        let beats = match &self.beats {
            None => None,
            Some(list) => {
                let meter = self
                    .meter
                    .or_else(|| list.iter().map(|b| b.0).max())
                    .unwrap_or(4);
                let entries = list
                    .iter()
                    .map(|&(beat_type, time)| Beat { beat_type, time })
                    .collect();
                Some(BeatGrid::new(meter, entries)?)
            }
        };
        let chords = match &self.chords {
            None => None,
            Some(list) => {
                let entries = list
                    .iter()
                    .map(|(root, ctype, inverted, time)| {
                        Ok(ChordEvent {
                            root: PitchClass::parse(root)?,
                            ctype: ChordType::from_label(ctype).ok_or_else(|| {
                                Error::Parse(format!("unknown chord type {ctype:?}"))
                            })?,
                            inverted: *inverted,
                            time: *time,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(ChordSequence::new(entries)?)
            }
        };
        let key = match &self.key {
            None => None,
            Some(k) => Some(KeyEstimate::new(PitchClass::parse(&k.root)?, k.mode)),
        };
        let bpm = self.bpm.map(TempoBpm::new).transpose()?;
        Ok(FeatureSet {
            beats,
            chords,
            key,
            bpm,
        })
    }
}

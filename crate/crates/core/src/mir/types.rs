use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pitch modulo octave, `0 = C .. 11 = B`. Enharmonic spellings collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PitchClass(u8);

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];
const FLAT_NAMES: [&str; 12] = [
    "C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B",
];

/// Accidental style used when turning pitch classes into names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spelling {
    #[default]
    Sharps,
    Flats,
}

impl Spelling {
    /// Flat spelling for keys whose signature is F, Bb, Eb, Ab, Db or Gb
    /// major (or the relative minor of one of those), sharps otherwise.
    pub fn for_key(key: &KeyEstimate) -> Self {
        let major_root = match key.mode {
            Mode::Major => key.root.index(),
            Mode::Minor => (key.root.index() + 3) % 12,
        };
        match major_root {
            5 | 10 | 3 | 8 | 1 | 6 => Spelling::Flats,
            _ => Spelling::Sharps,
        }
    }
}

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);
    pub const A: PitchClass = PitchClass(9);

    pub fn new(index: u8) -> Result<Self> {
        if index < 12 {
            Ok(Self(index))
        } else {
            Err(Error::invalid(format!("pitch class {index} out of range 0..12")))
        }
    }

    /// Wraps any integer into 0..12.
    pub fn wrapping(index: i64) -> Self {
        Self(index.rem_euclid(12) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Self::wrapping(self.0 as i64 + semitones as i64)
    }

    pub fn name(self, spelling: Spelling) -> &'static str {
        match spelling {
            Spelling::Sharps => SHARP_NAMES[self.index()],
            Spelling::Flats => FLAT_NAMES[self.index()],
        }
    }

    /// Parse a root name: letter A-G followed by an optional `#` or `b`.
    pub fn parse(name: &str) -> Result<Self> {
        let (pc, rest) = Self::parse_prefix(name)?;
        if rest.is_empty() {
            Ok(pc)
        } else {
            Err(Error::Parse(format!("trailing characters in note name {name:?}")))
        }
    }

    /// Parse a root name at the start of `s`, returning the remainder.
    pub fn parse_prefix(s: &str) -> Result<(Self, &str)> {
        let mut chars = s.chars();
        let base: i64 = match chars.next() {
            Some('C') => 0,
            Some('D') => 2,
            Some('E') => 4,
            Some('F') => 5,
            Some('G') => 7,
            Some('A') => 9,
            Some('B') => 11,
            _ => return Err(Error::Parse(format!("invalid root letter in {s:?}"))),
        };
        let rest = chars.as_str();
        if let Some(r) = rest.strip_prefix('#') {
            Ok((Self::wrapping(base + 1), r))
        } else if let Some(r) = rest.strip_prefix('b') {
            Ok((Self::wrapping(base - 1), r))
        } else {
            Ok((Self::wrapping(base), rest))
        }
    }
}

impl TryFrom<u8> for PitchClass {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PitchClass> for u8 {
    fn from(p: PitchClass) -> u8 {
        p.0
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name(Spelling::Sharps))
    }
}

/// Chord quality vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChordType {
    #[serde(rename = "maj")]
    Major,
    #[serde(rename = "min")]
    Minor,
    #[serde(rename = "7")]
    Dominant7,
    #[serde(rename = "maj7")]
    Major7,
    #[serde(rename = "min7")]
    Minor7,
    #[serde(rename = "6")]
    Major6,
    #[serde(rename = "min6")]
    Minor6,
    #[serde(rename = "dim")]
    Diminished,
    #[serde(rename = "aug")]
    Augmented,
    #[serde(rename = "sus2")]
    Sus2,
    #[serde(rename = "sus4")]
    Sus4,
}

impl ChordType {
    pub const ALL: [ChordType; 11] = [
        ChordType::Major,
        ChordType::Minor,
        ChordType::Dominant7,
        ChordType::Major7,
        ChordType::Minor7,
        ChordType::Major6,
        ChordType::Minor6,
        ChordType::Diminished,
        ChordType::Augmented,
        ChordType::Sus2,
        ChordType::Sus4,
    ];

    /// Semitone offsets of the chord tones above the root.
    pub fn intervals(self) -> &'static [usize] {
        match self {
            ChordType::Major => &[0, 4, 7],
            ChordType::Minor => &[0, 3, 7],
            ChordType::Dominant7 => &[0, 4, 7, 10],
            ChordType::Major7 => &[0, 4, 7, 11],
            ChordType::Minor7 => &[0, 3, 7, 10],
            ChordType::Major6 => &[0, 4, 7, 9],
            ChordType::Minor6 => &[0, 3, 7, 9],
            ChordType::Diminished => &[0, 3, 6],
            ChordType::Augmented => &[0, 4, 8],
            ChordType::Sus2 => &[0, 2, 7],
            ChordType::Sus4 => &[0, 5, 7],
        }
    }

    /// Suffix appended to the root in chord names ("" for major).
    pub fn suffix(self) -> &'static str {
        match self {
            ChordType::Major => "",
            ChordType::Minor => "m",
            ChordType::Dominant7 => "7",
            ChordType::Major7 => "maj7",
            ChordType::Minor7 => "m7",
            ChordType::Major6 => "6",
            ChordType::Minor6 => "m6",
            ChordType::Diminished => "dim",
            ChordType::Augmented => "aug",
            ChordType::Sus2 => "sus2",
            ChordType::Sus4 => "sus4",
        }
    }

    pub fn from_suffix(suffix: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.suffix() == suffix)
    }

    /// Short label used in feature dumps ("maj", "min", "7", ...).
    pub fn label(self) -> &'static str {
        match self {
            ChordType::Major => "maj",
            ChordType::Minor => "min",
            ChordType::Dominant7 => "7",
            ChordType::Major7 => "maj7",
            ChordType::Minor7 => "min7",
            ChordType::Major6 => "6",
            ChordType::Minor6 => "min6",
            ChordType::Diminished => "dim",
            ChordType::Augmented => "aug",
            ChordType::Sus2 => "sus2",
            ChordType::Sus4 => "sus4",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.label() == label)
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).unwrap()
    }

    /// Binary major/minor reduction used by the CMOT metric.
    pub fn is_minor_family(self) -> bool {
        matches!(
            self,
            ChordType::Minor | ChordType::Minor6 | ChordType::Minor7 | ChordType::Diminished
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordEvent {
    pub root: PitchClass,
    pub ctype: ChordType,
    pub inverted: bool,
    pub time: f64,
}

impl ChordEvent {
    pub fn new(root: PitchClass, ctype: ChordType, time: f64) -> Self {
        Self {
            root,
            ctype,
            inverted: false,
            time,
        }
    }

    pub fn name(&self, spelling: Spelling) -> String {
        format!("{}{}", self.root.name(spelling), self.ctype.suffix())
    }
}

/// Time-ordered chord labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChordSequence {
    entries: Vec<ChordEvent>,
}

impl ChordSequence {
    pub fn new(entries: Vec<ChordEvent>) -> Result<Self> {
        for e in &entries {
            if !(e.time.is_finite() && e.time >= 0.0) {
                return Err(Error::invalid(format!("chord time {} is not >= 0", e.time)));
            }
        }
        if entries.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid("chord times must be strictly increasing"));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[ChordEvent] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Chord names joined with ", " as used in captions.
    pub fn names(&self, spelling: Spelling) -> Vec<String> {
        self.entries.iter().map(|e| e.name(spelling)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyEstimate {
    pub root: PitchClass,
    pub mode: Mode,
}

impl KeyEstimate {
    pub fn new(root: PitchClass, mode: Mode) -> Self {
        Self { root, mode }
    }

    /// Root name under the key's own accidental style, e.g. "Bb".
    pub fn root_name(&self) -> &'static str {
        self.root.name(Spelling::for_key(self))
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Self {
            root: self.root.transpose(semitones),
            mode: self.mode,
        }
    }
}

impl fmt::Display for KeyEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.root_name(), self.mode.as_str())
    }
}

/// Tempo in beats per minute, `0 < bpm < 1000`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TempoBpm(f64);

impl TempoBpm {
    pub fn new(bpm: f64) -> Result<Self> {
        if bpm.is_finite() && bpm > 0.0 && bpm < 1000.0 {
            Ok(Self(bpm))
        } else {
            Err(Error::invalid(format!("tempo {bpm} BPM outside (0, 1000)")))
        }
    }

    pub fn bpm(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TempoBpm {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TempoBpm> for f64 {
    fn from(t: TempoBpm) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beat {
    /// Position within the bar, `1..=meter`.
    pub beat_type: u8,
    pub time: f64,
}

/// Beat and downbeat positions with the bar length they were counted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatGrid {
    meter: u8,
    entries: Vec<Beat>,
}

impl BeatGrid {
    pub fn new(meter: u8, entries: Vec<Beat>) -> Result<Self> {
        if !(1..=4).contains(&meter) {
            return Err(Error::invalid(format!("meter {meter} outside 1..=4")));
        }
        for b in &entries {
            if !(1..=meter).contains(&b.beat_type) {
                return Err(Error::invalid(format!(
                    "beat type {} outside 1..={meter}",
                    b.beat_type
                )));
            }
            if !(b.time.is_finite() && b.time >= 0.0) {
                return Err(Error::invalid(format!("beat time {} is not >= 0", b.time)));
            }
        }
        if entries.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid("beat times must be strictly increasing"));
        }
        Ok(Self { meter, entries })
    }

    /// Beats at `times` whose types cycle `1..=meter` starting from `first_type`.
    pub fn cycling(meter: u8, first_type: u8, times: &[f64]) -> Result<Self> {
        if !(1..=4).contains(&meter) || !(1..=meter).contains(&first_type) {
            return Err(Error::invalid(format!(
                "beat type {first_type} / meter {meter} out of range"
            )));
        }
        let entries = times
            .iter()
            .enumerate()
            .map(|(i, &time)| Beat {
                beat_type: ((first_type as usize - 1 + i) % meter as usize) as u8 + 1,
                time,
            })
            .collect();
        Self::new(meter, entries)
    }

    pub fn meter(&self) -> u8 {
        self.meter
    }

    pub fn entries(&self) -> &[Beat] {
        &self.entries
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|b| b.time).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The four extracted music features. Any of them may be missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    pub beats: Option<BeatGrid>,
    pub chords: Option<ChordSequence>,
    pub key: Option<KeyEstimate>,
    pub bpm: Option<TempoBpm>,
}

impl FeatureSet {
    pub fn meter(&self) -> Option<u8> {
        self.beats.as_ref().map(BeatGrid::meter)
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_none() && self.chords.is_none() && self.key.is_none() && self.bpm.is_none()
    }

    /// Spelling used for chord names in captions and dumps.
    pub fn spelling(&self) -> Spelling {
        self.key.as_ref().map(Spelling::for_key).unwrap_or_default()
    }
}

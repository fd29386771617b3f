use crate::error::{Error, Result};
use crate::mir::{BeatGrid, ChordEvent, ChordSequence, ChordType, PitchClass, Spelling};

/// Predictor outputs past this time are discarded.
pub const PREDICTION_HORIZON_SECONDS: f64 = 10.0;

const BEAT_PREFIX: &str = "Timestamps: ";
const METER_MARK: &str = "Max Beat: ";

/// `Timestamps: 0.50, 1.00, Max Beat: 2`.
pub fn verbalize_beats(grid: &BeatGrid) -> String {
    let times: Vec<String> = grid.times().iter().map(|t| format!("{t:.2}")).collect();
    format!("{BEAT_PREFIX}{}, {METER_MARK}{}", times.join(", "), grid.meter())
}

/// Inverse of [`verbalize_beats`]: returns the meter and the timestamps.
pub fn parse_beats_verbalization(text: &str) -> Result<(u8, Vec<f64>)> {
    let body = text
        .trim()
        .strip_prefix(BEAT_PREFIX.trim_end())
        .ok_or_else(|| Error::Parse(format!("missing {BEAT_PREFIX:?} prefix")))?;
    let (list, meter) = body
        .rsplit_once(METER_MARK)
        .ok_or_else(|| Error::Parse(format!("missing {METER_MARK:?}")))?;
    let meter: u8 = meter
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("meter {meter:?} is not an integer")))?;
    if !(1..=4).contains(&meter) {
        return Err(Error::Parse(format!("meter {meter} outside 1..=4")));
    }
    let list = list.trim_end();
    let list = list
        .strip_suffix(',')
        .ok_or_else(|| Error::Parse("missing comma before meter".into()))?;
    let times = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| Error::Parse(format!("bad timestamp {s:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parse("timestamps must be strictly increasing".into()));
    }
    Ok((meter, times))
}

/// `Am at 1.11; E at 4.14; C#maj7 at 7.18`, with sharp spelling.
pub fn verbalize_chords(seq: &ChordSequence) -> String {
    seq.entries()
        .iter()
        .map(|c| {
            format!(
                "{}{} at {:.2}",
                c.root.name(Spelling::Sharps),
                c.ctype.suffix(),
                c.time
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Inverse of [`verbalize_chords`]. Entries after the prediction horizon
/// are dropped.
pub fn parse_chords_verbalization(text: &str) -> Result<ChordSequence> {
    let mut entries = Vec::new();
    for token in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, time) = token
            .split_once(" at ")
            .ok_or_else(|| Error::Parse(format!("chord token {token:?} lacks ' at '")))?;
        let (root, suffix) = PitchClass::parse_prefix(name.trim())?;
        let ctype = ChordType::from_suffix(suffix)
            .ok_or_else(|| Error::Parse(format!("unknown chord suffix in {name:?}")))?;
        let time: f64 = time
            .trim()
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| Error::Parse(format!("bad chord time in {token:?}")))?;
        entries.push(ChordEvent::new(root, ctype, time));
    }
    if entries.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(Error::Parse("chord times must be strictly increasing".into()));
    }
    entries.retain(|c| c.time <= PREDICTION_HORIZON_SECONDS);
    ChordSequence::new(entries)
}

/// Turn predicted inter-beat intervals into a beat grid: times are cumulative
/// sums, types cycle from 1, and beats past the horizon are dropped.
pub fn decode_beat_prediction(meter: u8, intervals: &[f64]) -> Result<BeatGrid> {
    if let Some(bad) = intervals.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::invalid(format!("beat interval {bad} is not positive")));
    }
    let times: Vec<f64> = intervals
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .take_while(|t| *t <= PREDICTION_HORIZON_SECONDS)
        .collect();
    BeatGrid::cycling(meter, 1, &times)
}

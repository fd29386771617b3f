use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caption::tempo_to_marking;
use crate::error::{Error, Result};
use crate::mir::{ChordSequence, FeatureSet, KeyEstimate, Mode, TempoBpm};

fn score(hit: bool) -> f64 {
    if hit {
        100.0
    } else {
        0.0
    }
}

/// Tempo bin match.
pub fn tb(gt: TempoBpm, pred: TempoBpm) -> f64 {
    score(tempo_to_marking(gt.bpm()) == tempo_to_marking(pred.bpm()))
}

/// Tempo bin match, tolerating the neighbouring bins.
pub fn tbt(gt: TempoBpm, pred: TempoBpm) -> f64 {
    let a = tempo_to_marking(gt.bpm()).index() as i64;
    let b = tempo_to_marking(pred.bpm()).index() as i64;
    score((a - b).abs() <= 1)
}

/// Exact key match on pitch classes.
pub fn ck(gt: KeyEstimate, pred: KeyEstimate) -> f64 {
    score(gt.root == pred.root && gt.mode == pred.mode)
}

/// Key match that also accepts the relative major/minor.
pub fn ckd(gt: KeyEstimate, pred: KeyEstimate) -> f64 {
    let relative = |k: KeyEstimate| match k.mode {
        Mode::Major => KeyEstimate::new(k.root.transpose(9), Mode::Minor),
        Mode::Minor => KeyEstimate::new(k.root.transpose(3), Mode::Major),
    };
    score(ck(gt, pred) > 0.0 || relative(gt) == pred)
}

/// (root, type) tokens; inversions are ignored.
fn tokens(seq: &ChordSequence) -> Vec<(usize, usize)> {
    seq.entries()
        .iter()
        .map(|c| (c.root.index(), c.ctype.index()))
        .collect()
}

/// (root, minor-family) tokens.
fn reduced_tokens(seq: &ChordSequence) -> Vec<(usize, usize)> {
    seq.entries()
        .iter()
        .map(|c| (c.root.index(), c.ctype.is_minor_family() as usize))
        .collect()
}

/// Perfect sequence match.
pub fn pcm(gt: &ChordSequence, pred: &ChordSequence) -> f64 {
    score(tokens(gt) == tokens(pred))
}

fn lcs_len(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Sequence match with tolerance for missing and extra chords:
/// 100·LCS / max(|pred|, |gt|).
pub fn ecm(gt: &ChordSequence, pred: &ChordSequence) -> f64 {
    let (g, p) = (tokens(gt), tokens(pred));
    let denom = g.len().max(p.len());
    if denom == 0 {
        return 100.0;
    }
    100.0 * lcs_len(&g, &p) as f64 / denom as f64
}

fn multiset_overlap(gt: &[(usize, usize)], pred: &[(usize, usize)]) -> f64 {
    if gt.is_empty() {
        return if pred.is_empty() { 100.0 } else { 0.0 };
    }
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for t in pred {
        *counts.entry(*t).or_default() += 1;
    }
    let hits = gt
        .iter()
        .filter(|t| match counts.get_mut(t) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count();
    100.0 * hits as f64 / gt.len() as f64
}

/// Order-free chord match: 100·|gt ∩ pred| / |gt| over multisets.
pub fn cmo(gt: &ChordSequence, pred: &ChordSequence) -> f64 {
    multiset_overlap(&tokens(gt), &tokens(pred))
}

/// [`cmo`] with chord types reduced to major or minor.
pub fn cmot(gt: &ChordSequence, pred: &ChordSequence) -> f64 {
    multiset_overlap(&reduced_tokens(gt), &reduced_tokens(pred))
}

/// Beat count match.
pub fn bm(gt: u8, pred: u8) -> f64 {
    score(gt == pred)
}

/// Target features and features extracted from generated audio.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSample {
    pub gt: FeatureSet,
    pub pred: FeatureSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Tb,
    Tbt,
    Ck,
    Ckd,
    Pcm,
    Ecm,
    Cmo,
    Cmot,
    Bm,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Tb,
        Metric::Tbt,
        Metric::Ck,
        Metric::Ckd,
        Metric::Pcm,
        Metric::Ecm,
        Metric::Cmo,
        Metric::Cmot,
        Metric::Bm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tb => "TB",
            Metric::Tbt => "TBT",
            Metric::Ck => "CK",
            Metric::Ckd => "CKD",
            Metric::Pcm => "PCM",
            Metric::Ecm => "ECM",
            Metric::Cmo => "CMO",
            Metric::Cmot => "CMOT",
            Metric::Bm => "BM",
        }
    }

    fn index(self) -> usize {
        Metric::ALL.iter().position(|m| *m == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Mean score in [0, 100]; `None` when no sample had the target feature.
    pub mean: Option<f64>,
    pub count: usize,
}

/// Per-metric means, serialized with the upper-case metric names as keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    summaries: [MetricSummary; 9],
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> MetricSummary {
        self.summaries[metric.index()]
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.get(metric).mean
    }
}

impl Serialize for MetricReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(9))?;
        for m in Metric::ALL {
            map.serialize_entry(m.name(), &self.get(m))?;
        }
        map.end()
    }
}

/// Scores for every metric whose target feature is present. A missing
/// prediction scores 0.
fn sample_scores(s: &ControlSample) -> [Option<f64>; 9] {
    let mut out = [None; 9];
    let mut set = |m: Metric, v: f64| out[m.index()] = Some(v);
    if let Some(g) = s.gt.bpm {
        set(Metric::Tb, s.pred.bpm.map_or(0.0, |p| tb(g, p)));
        set(Metric::Tbt, s.pred.bpm.map_or(0.0, |p| tbt(g, p)));
    }
    if let Some(g) = s.gt.key {
        set(Metric::Ck, s.pred.key.map_or(0.0, |p| ck(g, p)));
        set(Metric::Ckd, s.pred.key.map_or(0.0, |p| ckd(g, p)));
    }
    if let Some(g) = s.gt.chords.as_ref().filter(|c| !c.is_empty()) {
        let empty = ChordSequence::empty();
        let p = s.pred.chords.as_ref().unwrap_or(&empty);
        set(Metric::Pcm, pcm(g, p));
        set(Metric::Ecm, ecm(g, p));
        set(Metric::Cmo, cmo(g, p));
        set(Metric::Cmot, cmot(g, p));
    }
    if let Some(g) = s.gt.meter() {
        set(Metric::Bm, s.pred.meter().map_or(0.0, |p| bm(g, p)));
    }
    out
}

/// Mean of each metric over the samples where its target is present.
pub fn evaluate_dataset(samples: &[ControlSample]) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let zero = || [(0.0f64, 0usize); 9];
    let totals = samples
        .par_iter()
        .fold(zero, |mut acc, s| {
            for (slot, v) in acc.iter_mut().zip(sample_scores(s)) {
                if let Some(v) = v {
                    slot.0 += v;
                    slot.1 += 1;
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
            a
        });
    let mut report = MetricReport::default();
    for (summary, (sum, count)) in report.summaries.iter_mut().zip(totals) {
        *summary = MetricSummary {
            mean: (count > 0).then(|| sum / count as f64),
            count,
        };
    }
    Ok(report)
}

//! Template-matching chord recognition with best-path smoothing.

use super::types::{ChordEvent, ChordSequence, ChordType, PitchClass};
use crate::audio::{chroma, chroma_in_band, stft, AudioClip, Chromagram, CHROMA_FLOOR_HZ};
use crate::error::{Error, Result};

/// STFT window and hop (samples at 16 kHz) for harmonic analysis.
pub(crate) const HARMONY_WINDOW: usize = 4096;
pub(crate) const HARMONY_HOP: usize = 1024;

const MIN_CLIP_SECONDS: f64 = 1.0;
/// Log-domain bonus for keeping the same label between frames.
pub const SELF_TRANSITION_BONUS: f64 = 0.1;
/// Runs shorter than this are absorbed by a neighbour.
pub const MIN_RUN_SECONDS: f64 = 0.3;
/// Upper edge of the bass register used for the inversion flag.
const BASS_CEILING_HZ: f64 = 200.0;
/// Bass energy must reach this share of the full chroma energy before the
/// bass note is trusted.
const BASS_MIN_SHARE: f64 = 0.08;
const FLOOR_SCORE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    NoChord,
    Chord(PitchClass, ChordType),
}

struct Template {
    label: Label,
    weights: [f64; 12],
}

fn templates() -> Vec<Template> {
    let mut out = Vec::with_capacity(133);
    for root in 0..12u8 {
        for ctype in ChordType::ALL {
            let mut weights = [0.0; 12];
            let norm = 1.0 / (ctype.intervals().len() as f64).sqrt();
            for &iv in ctype.intervals() {
                weights[(root as usize + iv) % 12] = norm;
            }
            out.push(Template {
                label: Label::Chord(PitchClass::new(root).unwrap(), ctype),
                weights,
            });
        }
    }
    out.push(Template {
        label: Label::NoChord,
        weights: [0.0; 12],
    });
    out
}

/// Harmonic-analysis chromagrams of a canonical-rate clip: (full, bass).
pub(crate) fn harmony_chroma(clip: &AudioClip) -> Result<(Chromagram, Chromagram)> {
    let clip = clip.to_canonical()?;
    let clip = if clip.len() < HARMONY_WINDOW {
        clip.clone().with_len(HARMONY_WINDOW)?
    } else {
        clip
    };
    let spec = stft(&clip, HARMONY_WINDOW, HARMONY_HOP)?;
    Ok((chroma(&spec), chroma_in_band(&spec, CHROMA_FLOOR_HZ, BASS_CEILING_HZ)))
}

fn frame_is_silent(energy: f64, loudest: f64) -> bool {
    energy <= 1e-6 || energy <= 1e-3 * loudest
}

/// Per-frame log scores, `[n_frames][n_templates]`.
fn emission_scores(chroma: &Chromagram, templates: &[Template]) -> Vec<Vec<f64>> {
    let energies: Vec<f64> = chroma.frames.rows().into_iter().map(|r| r.sum()).collect();
    let loudest = energies.iter().cloned().fold(0.0, f64::max);
    chroma
        .frames
        .rows()
        .into_iter()
        .zip(&energies)
        .map(|(row, &energy)| {
            let silent = frame_is_silent(energy, loudest);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            templates
                .iter()
                .map(|t| match (t.label, silent) {
                    (Label::NoChord, true) => 0.0,
                    (Label::NoChord, false) | (Label::Chord(..), true) => FLOOR_SCORE.ln(),
                    (Label::Chord(..), false) => {
                        let cos = row
                            .iter()
                            .zip(&t.weights)
                            .map(|(c, w)| c * w)
                            .sum::<f64>()
                            / norm;
                        cos.max(FLOOR_SCORE).ln()
                    }
                })
                .collect()
        })
        .collect()
}

/// Best label path with a bonus for staying on the same label.
fn best_path(scores: &[Vec<f64>], bonus: f64) -> Vec<usize> {
    let Some(first) = scores.first() else {
        return Vec::new();
    };
    let k = first.len();
    let mut acc = first.clone();
    let mut back = vec![vec![0usize; k]; scores.len()];
    for (t, row) in scores.iter().enumerate().skip(1) {
        let (best_prev, best_val) = acc
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let mut next = vec![0.0; k];
        for j in 0..k {
            let stay = acc[j] + bonus;
            if stay >= best_val {
                next[j] = stay + row[j];
                back[t][j] = j;
            } else {
                next[j] = best_val + row[j];
                back[t][j] = best_prev;
            }
        }
        acc = next;
    }
    let mut j = acc
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
        .0;
    let mut path = vec![0; scores.len()];
    for t in (0..scores.len()).rev() {
        path[t] = j;
        j = back[t][j];
    }
    path
}

#[derive(Debug, Clone, Copy)]
struct Run {
    label: usize,
    start: usize,
    end: usize,
}

fn runs_of(path: &[usize]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (t, &label) in path.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.label == label => r.end = t + 1,
            _ => runs.push(Run {
                label,
                start: t,
                end: t + 1,
            }),
        }
    }
    runs
}

fn merge_equal(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(last) if last.label == r.label => last.end = r.end,
            _ => out.push(r),
        }
    }
    out
}

/// Absorb runs shorter than `min_frames` into the neighbour whose label
/// explains those frames better.
fn absorb_short_runs(mut runs: Vec<Run>, min_frames: usize, scores: &[Vec<f64>]) -> Vec<Run> {
    loop {
        if runs.len() < 2 {
            return runs;
        }
        let Some(i) = (0..runs.len())
            .filter(|&i| runs[i].end - runs[i].start < min_frames)
            .min_by_key(|&i| runs[i].end - runs[i].start)
        else {
            return runs;
        };
        let fit = |label: usize| -> f64 {
            (runs[i].start..runs[i].end).map(|t| scores[t][label]).sum()
        };
        let target = match (i.checked_sub(1), runs.get(i + 1)) {
            (Some(p), Some(n)) => {
                if fit(runs[p].label) >= fit(n.label) {
                    p
                } else {
                    i + 1
                }
            }
            (Some(p), None) => p,
            (None, _) => i + 1,
        };
        let label = runs[target].label;
        runs[i].label = label;
        runs = merge_equal(runs);
    }
}

/// Chord labels over time. Silent input yields an empty sequence.
pub fn recognize_chords(clip: &AudioClip) -> Result<ChordSequence> {
    if clip.duration() < MIN_CLIP_SECONDS {
        return Err(Error::TooShort {
            needed_seconds: MIN_CLIP_SECONDS,
            actual_seconds: clip.duration(),
        });
    }
    let duration = clip.duration();
    let (full, bass) = harmony_chroma(clip)?;
    let templates = templates();
    let scores = emission_scores(&full, &templates);
    let path = best_path(&scores, SELF_TRANSITION_BONUS);
    let min_frames = (MIN_RUN_SECONDS / full.hop_seconds).ceil() as usize;
    let runs = absorb_short_runs(merge_equal(runs_of(&path)), min_frames, &scores);

    let mut entries: Vec<ChordEvent> = Vec::new();
    for run in runs {
        let Label::Chord(root, ctype) = templates[run.label].label else {
            continue;
        };
        let time = if run.start == 0 {
            0.0
        } else {
            full.frame_center(run.start).min(duration)
        };
        if entries.last().is_some_and(|e| time <= e.time) {
            continue;
        }
        let inverted = bass_inversion(&full, &bass, run.start, run.end, root, ctype);
        entries.push(ChordEvent {
            root,
            ctype,
            inverted,
            time,
        });
    }
    ChordSequence::new(entries)
}

fn bass_inversion(
    full: &Chromagram,
    bass: &Chromagram,
    start: usize,
    end: usize,
    root: PitchClass,
    ctype: ChordType,
) -> bool {
    let mut bass_sum = [0.0; 12];
    let mut total = 0.0;
    for t in start..end {
        for (c, v) in bass.frames.row(t).iter().enumerate() {
            bass_sum[c] += v;
        }
        total += full.frames.row(t).sum();
    }
    let bass_total: f64 = bass_sum.iter().sum();
    if total <= 0.0 || bass_total < BASS_MIN_SHARE * total {
        return false;
    }
    let peak = (0..12)
        .max_by(|&a, &b| bass_sum[a].total_cmp(&bass_sum[b]))
        .unwrap();
    let tones: Vec<usize> = ctype
        .intervals()
        .iter()
        .map(|iv| (root.index() + iv) % 12)
        .collect();
    peak != root.index() && tones.contains(&peak)
}

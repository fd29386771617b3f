//! Onset-envelope beat tracking: autocorrelation tempo prior, dynamic
//! programming beat placement, accent-based meter estimate.

use super::types::{BeatGrid, TempoBpm};
use crate::audio::{onset_envelope, stft, AudioClip, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::error::{Error, Result};

const MIN_CLIP_SECONDS: f64 = 2.0;
const MIN_BPM: f64 = 40.0;
const MAX_BPM: f64 = 210.0;
/// Center and width (octaves) of the log-Gaussian tempo prior.
const PRIOR_CENTER_BPM: f64 = 120.0;
const PRIOR_OCTAVES: f64 = 1.0;
/// Penalty on squared log deviation of an inter-beat interval from the period.
const TIGHTNESS: f64 = 100.0;
/// Accent autocorrelation a meter needs before it beats the default of 4.
const METER_MIN_CORRELATION: f64 = 0.2;
/// Smaller meters win when within this fraction of the best correlation.
const METER_PREFER_SMALLER: f64 = 0.9;

/// Beat positions with meter-cycled beat types.
pub fn track_beats(clip: &AudioClip) -> Result<BeatGrid> {
    if clip.duration() < MIN_CLIP_SECONDS {
        return Err(Error::TooShort {
            needed_seconds: MIN_CLIP_SECONDS,
            actual_seconds: clip.duration(),
        });
    }
    let clip = clip.to_canonical()?;
    let spec = stft(&clip, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let env = onset_envelope(&spec);
    let fps = 1.0 / spec.hop_seconds;

    let period = estimate_period(&env, fps).ok_or(Error::NoBeats)?;
    let frames = place_beats(&env, period);
    if frames.len() < 2 {
        return Err(Error::NoBeats);
    }

    let strengths: Vec<f64> = frames
        .iter()
        .map(|&f| {
            let lo = f.saturating_sub(2);
            let hi = (f + 3).min(env.len());
            env[lo..hi].iter().cloned().fold(0.0, f64::max)
        })
        .collect();
    let (meter, phase) = estimate_meter(&strengths);
    let first_type = ((meter as usize - phase % meter as usize) % meter as usize) as u8 + 1;

    let times: Vec<f64> = frames.iter().map(|&f| spec.frame_center(f)).collect();
    BeatGrid::cycling(meter, first_type, &times)
}

/// Mean of `60 / dt` over consecutive beats.
pub fn estimate_tempo(grid: &BeatGrid) -> Result<TempoBpm> {
    let times = grid.times();
    if times.len() < 2 {
        return Err(Error::invalid(format!(
            "tempo needs at least 2 beats, got {}",
            times.len()
        )));
    }
    let n = (times.len() - 1) as f64;
    let bpm = times.windows(2).map(|w| 60.0 / (w[1] - w[0])).sum::<f64>() / n;
    TempoBpm::new(bpm)
}

fn tempo_prior(bpm: f64) -> f64 {
    let octaves = (bpm / PRIOR_CENTER_BPM).log2() / PRIOR_OCTAVES;
    (-0.5 * octaves * octaves).exp()
}

/// Beat period in frames from the prior-weighted envelope autocorrelation.
fn estimate_period(env: &[f64], fps: f64) -> Option<f64> {
    let n = env.len();
    let min_lag = (60.0 * fps / MAX_BPM).floor().max(1.0) as usize;
    let max_lag = ((60.0 * fps / MIN_BPM).ceil() as usize).min(n.saturating_sub(2));
    if max_lag <= min_lag + 1 {
        return None;
    }
    let energy: f64 = env.iter().map(|v| v * v).sum();
    if energy <= 1e-12 {
        return None;
    }
    let acf: Vec<f64> = (0..=max_lag + 1)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            env[..n - lag]
                .iter()
                .zip(&env[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (n - lag) as f64
        })
        .collect();

    let best = (min_lag..=max_lag)
        .map(|lag| (lag, acf[lag] * tempo_prior(60.0 * fps / lag as f64)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if best.1 <= 0.0 {
        return None;
    }
    let lag = best.0;
    // Parabolic refinement on the raw autocorrelation.
    let (y0, y1, y2) = (acf[lag - 1], acf[lag], acf[lag + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let offset = if denom.abs() > 1e-12 {
        (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(lag as f64 + offset)
}

/// Dynamic-programming beat placement: each beat collects onset strength and
/// pays for deviating from the period.
fn place_beats(env: &[f64], period: f64) -> Vec<usize> {
    let n = env.len();
    let std = {
        let mean = env.iter().sum::<f64>() / n as f64;
        (env.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let local: Vec<f64> = env.iter().map(|v| v / std.max(1e-12)).collect();

    let mut score = vec![0.0; n];
    let mut back: Vec<Option<usize>> = vec![None; n];
    let lo_off = (period / 2.0).round().max(1.0) as usize;
    let hi_off = (2.0 * period).round() as usize;
    for t in 0..n {
        let mut best: Option<(usize, f64)> = None;
        if t >= lo_off {
            let start = t.saturating_sub(hi_off);
            for tau in start..=t - lo_off {
                let dev = ((t - tau) as f64 / period).ln();
                let s = score[tau] - TIGHTNESS * dev * dev;
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((tau, s));
                }
            }
        }
        match best {
            Some((tau, s)) if s > 0.0 => {
                score[t] = local[t] + s;
                back[t] = Some(tau);
            }
            _ => score[t] = local[t],
        }
    }

    // Start backtracking from the best-scoring frame within the final period.
    let tail_start = n.saturating_sub(period.ceil() as usize + 1);
    let mut t = (tail_start..n)
        .max_by(|&a, &b| score[a].total_cmp(&score[b]))
        .unwrap_or(n - 1);
    let mut beats = vec![t];
    while let Some(prev) = back[t] {
        beats.push(prev);
        t = prev;
    }
    beats.reverse();

    // Drop weak leading/trailing beats that only pad the path.
    let threshold = 0.1 * local.iter().cloned().fold(0.0, f64::max);
    let strong = |f: &usize| {
        let lo = f.saturating_sub(2);
        let hi = (f + 3).min(n);
        local[lo..hi].iter().cloned().fold(0.0, f64::max) >= threshold
    };
    let first = beats.iter().position(strong).unwrap_or(0);
    let last = beats.iter().rposition(strong).unwrap_or(beats.len() - 1);
    beats[first..=last].to_vec()
}

/// Meter in {2, 3, 4} and the index of the first downbeat, from the
/// autocorrelation of beat-synchronous accent strengths.
fn estimate_meter(strengths: &[f64]) -> (u8, usize) {
    let n = strengths.len();
    let mean = strengths.iter().sum::<f64>() / n.max(1) as f64;
    let dev: Vec<f64> = strengths.iter().map(|s| s - mean).collect();
    let var: f64 = dev.iter().map(|d| d * d).sum();

    let mut meter = 4u8;
    if var > 1e-3 * mean.abs().max(1e-12).powi(2) * n as f64 {
        let corr: Vec<(u8, f64)> = [2u8, 3, 4]
            .iter()
            .filter(|&&m| (m as usize) < n)
            .map(|&m| {
                let c: f64 = dev[..n - m as usize]
                    .iter()
                    .zip(&dev[m as usize..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / (n - m as usize) as f64
                    / (var / n as f64);
                (m, c)
            })
            .collect();
        let best = corr.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        if best >= METER_MIN_CORRELATION {
            meter = corr
                .iter()
                .find(|c| c.1 >= METER_PREFER_SMALLER * best)
                .map(|c| c.0)
                .unwrap_or(4);
        }
    }

    let m = meter as usize;
    let phase = (0..m.min(n.max(1)))
        .max_by(|&a, &b| {
            let mean_at = |p: usize| {
                let v: Vec<f64> = strengths.iter().skip(p).step_by(m).cloned().collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            };
            mean_at(a).total_cmp(&mean_at(b)).then(b.cmp(&a))
        })
        .unwrap_or(0);
    (meter, phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::click_train;

    #[test]
    fn tempo_of_constant_interval() {
        let g = BeatGrid::cycling(4, 1, &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(estimate_tempo(&g).unwrap().bpm(), 120.0);
    }

    #[test]
    fn tempo_averages_reciprocals() {
        // mean(60/0.4, 60/0.6) = mean(150, 100)
        let g = BeatGrid::cycling(4, 1, &[0.0, 0.4, 1.0]).unwrap();
        assert_eq!(estimate_tempo(&g).unwrap().bpm(), 125.0);
    }

    #[test]
    fn single_beat_has_no_tempo() {
        let g = BeatGrid::cycling(4, 1, &[0.3]).unwrap();
        assert!(estimate_tempo(&g).is_err());
    }

    #[test]
    fn silence_has_no_beats() {
        let clip = AudioClip::silence(4.0, 16_000).unwrap();
        assert!(matches!(track_beats(&clip), Err(Error::NoBeats)));
    }

    #[test]
    fn short_clip_is_rejected() {
        let clip = AudioClip::silence(1.0, 16_000).unwrap();
        assert!(matches!(track_beats(&clip), Err(Error::TooShort { .. })));
    }

    #[test]
    fn accented_duple_click_train() {
        let clicks: Vec<f64> = (0..16).map(|i| 0.25 + 0.5 * i as f64).collect();
        let accents: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { 0.45 }).collect();
        let clip = click_train(&clicks, &accents, 8.5, 16_000);
        let grid = track_beats(&clip).unwrap();
        assert_eq!(grid.meter(), 2);
        for b in grid.entries() {
            let nearest = clicks
                .iter()
                .map(|c| (c - b.time).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.07, "beat at {} is {nearest} s from a click", b.time);
        }
        assert!(grid.len() >= 14);
        // Downbeats land on the accented clicks.
        for b in grid.entries().iter().filter(|b| b.beat_type == 1) {
            let idx = ((b.time - 0.25) / 0.5).round() as usize;
            assert_eq!(idx % 2, 0, "downbeat at {}", b.time);
        }
    }

    #[test]
    fn uniform_click_train_interval() {
        let clicks: Vec<f64> = (0..20).map(|i| 0.2 + 0.4 * i as f64).collect();
        let clip = click_train(&clicks, &[1.0; 20], 8.4, 16_000);
        let grid = track_beats(&clip).unwrap();
        let mut ibi: Vec<f64> = grid.times().windows(2).map(|w| w[1] - w[0]).collect();
        ibi.sort_by(f64::total_cmp);
        let median = ibi[ibi.len() / 2];
        assert!((median - 0.4).abs() <= 0.05, "median {median}");
    }

    #[test]
    fn triple_meter_is_detected() {
        let clicks: Vec<f64> = (0..18).map(|i| 0.3 + 0.45 * i as f64).collect();
        let accents: Vec<f64> = (0..18).map(|i| if i % 3 == 0 { 1.0 } else { 0.4 }).collect();
        let clip = click_train(&clicks, &accents, 8.5, 16_000);
        assert_eq!(track_beats(&clip).unwrap().meter(), 3);
    }
}

//! Synthesized fixture signals: tones, click trains, scales and chords with
//! known ground truth.

use std::f64::consts::PI;

use crate::audio::AudioClip;

/// Equal-tempered frequency of a MIDI note (A4 = 69 = 440 Hz).
pub fn midi_to_hz(note: f64) -> f64 {
    440.0 * 2f64.powf((note - 69.0) / 12.0)
}

/// Sum of equal-amplitude sines, scaled so the peak stays below `amplitude`.
pub fn tones(freqs: &[f64], seconds: f64, amplitude: f64, rate: u32) -> AudioClip {
    let n = (seconds * rate as f64).round() as usize;
    let scale = amplitude / freqs.len().max(1) as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            freqs.iter().map(|f| (2.0 * PI * f * t).sin()).sum::<f64>() * scale
        })
        .collect();
    AudioClip::new(samples, rate).expect("valid synthesized clip")
}

pub fn sine(freq: f64, seconds: f64, amplitude: f64, rate: u32) -> AudioClip {
    tones(&[freq], seconds, amplitude, rate)
}

/// Short decaying noise-plus-tone bursts at `times` with per-click gains.
pub fn click_train(times: &[f64], accents: &[f64], seconds: f64, rate: u32) -> AudioClip {
    let n = (seconds * rate as f64).round() as usize;
    let mut out = vec![0.0; n];
    let burst = (0.03 * rate as f64) as usize;
    // Deterministic pseudo-noise so fixtures are reproducible.
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for (i, &t) in times.iter().enumerate() {
        let gain = accents.get(i).copied().unwrap_or(1.0);
        let start = (t * rate as f64).round() as usize;
        for j in 0..burst {
            let Some(o) = out.get_mut(start + j) else {
                break;
            };
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let noise = (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
            let tone = (2.0 * PI * 1000.0 * j as f64 / rate as f64).sin();
            let env = (-(j as f64) / (0.004 * rate as f64)).exp();
            *o += 0.45 * gain * env * (0.5 * noise + 0.5 * tone);
        }
    }
    AudioClip::new(out, rate).expect("valid synthesized clip")
}

/// Notes played one after another, each `note_seconds` long with short
/// fades to avoid clicks.
pub fn note_sequence(midi_notes: &[f64], note_seconds: f64, rate: u32) -> AudioClip {
    let per = (note_seconds * rate as f64).round() as usize;
    let fade = (0.01 * rate as f64) as usize;
    let mut out = Vec::with_capacity(per * midi_notes.len());
    for &note in midi_notes {
        let f = midi_to_hz(note);
        for j in 0..per {
            let t = j as f64 / rate as f64;
            let g = (j.min(per - 1 - j) as f64 / fade as f64).min(1.0);
            // Fundamental plus a quieter octave partial.
            let s = (2.0 * PI * f * t).sin() + 0.3 * (4.0 * PI * f * t).sin();
            out.push(0.4 * g * s / 1.3);
        }
    }
    AudioClip::new(out, rate).expect("valid synthesized clip")
}

/// Ascending major scale from `tonic_midi` to its octave.
pub fn major_scale(tonic_midi: f64, note_seconds: f64, rate: u32) -> AudioClip {
    let steps = [0.0, 2.0, 4.0, 5.0, 7.0, 9.0, 11.0, 12.0];
    let notes: Vec<f64> = steps.iter().map(|s| tonic_midi + s).collect();
    note_sequence(&notes, note_seconds, rate)
}

/// Ascending harmonic minor scale from `tonic_midi` to its octave.
pub fn harmonic_minor_scale(tonic_midi: f64, note_seconds: f64, rate: u32) -> AudioClip {
    let steps = [0.0, 2.0, 3.0, 5.0, 7.0, 8.0, 11.0, 12.0];
    let notes: Vec<f64> = steps.iter().map(|s| tonic_midi + s).collect();
    note_sequence(&notes, note_seconds, rate)
}

/// Blocks of simultaneous notes, each held for its duration.
pub fn chord_blocks(blocks: &[(&[f64], f64)], rate: u32) -> AudioClip {
    let fade = (0.01 * rate as f64) as usize;
    let mut out = Vec::new();
    for (notes, seconds) in blocks {
        let per = (seconds * rate as f64).round() as usize;
        let freqs: Vec<f64> = notes.iter().map(|&n| midi_to_hz(n)).collect();
        for j in 0..per {
            let t = j as f64 / rate as f64;
            let g = (j.min(per - 1 - j) as f64 / fade as f64).min(1.0);
            let s: f64 = freqs.iter().map(|f| (2.0 * PI * f * t).sin()).sum();
            out.push(0.6 * g * s / freqs.len().max(1) as f64);
        }
    }
    AudioClip::new(out, rate).expect("valid synthesized clip")
}

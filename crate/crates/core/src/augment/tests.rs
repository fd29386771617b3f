use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use super::*;
use crate::mir::{ChordType, KeyEstimate, Mode, PitchClass};
use crate::synth::{sine, tones};

/// Dominant frequency via a full-length FFT of the central part.
fn peak_hz(clip: &AudioClip) -> f64 {
    let x = clip.samples();
    let skip = x.len() / 10;
    let mut buf: Vec<Complex<f64>> = x[skip..x.len() - skip]
        .iter()
        .map(|&s| Complex::new(s, 0.0))
        .collect();
    let n = buf.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let k = (1..n / 2)
        .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
        .unwrap();
    k as f64 * clip.sample_rate() as f64 / n as f64
}

#[test]
fn pitch_shift_up_two_semitones() {
    let clip = sine(440.0, 2.0, 0.5, 16_000);
    let out = pitch_shift(&clip, 2).unwrap();
    let expected = 440.0 * 2f64.powf(2.0 / 12.0);
    assert!((expected - 493.88).abs() < 0.01);
    assert!((peak_hz(&out) - expected).abs() <= 0.01 * expected);
}

#[test]
fn pitch_shift_up_then_down_restores_frequency() {
    let clip = sine(440.0, 2.0, 0.5, 16_000);
    let out = pitch_shift(&pitch_shift(&clip, 3).unwrap(), -3).unwrap();
    assert!((peak_hz(&out) - 440.0).abs() <= 4.4);
}

#[test]
fn pitch_shift_keeps_duration() {
    let clip = sine(330.0, 10.0, 0.5, 16_000);
    let out = pitch_shift(&clip, -2).unwrap();
    assert!((out.duration() - 10.0).abs() <= 0.1);
}

#[test]
fn pitch_shift_range_is_enforced() {
    let clip = sine(330.0, 1.0, 0.5, 16_000);
    assert!(pitch_shift(&clip, 0).is_err());
    assert!(pitch_shift(&clip, 4).is_err());
    assert!(pitch_shift(&clip, -4).is_err());
}

#[test]
fn time_stretch_duration() {
    let clip = sine(440.0, 10.0, 0.5, 16_000);
    let out = time_stretch(&clip, 1.25).unwrap();
    assert!((out.duration() - 8.0).abs() <= 0.08);
}

#[test]
fn time_stretch_keeps_pitch() {
    let clip = sine(440.0, 2.0, 0.5, 16_000);
    let out = time_stretch(&clip, 0.8).unwrap();
    assert!((out.duration() - 2.5).abs() <= 0.025);
    assert!((peak_hz(&out) - 440.0).abs() <= 4.4);
}

#[test]
fn time_stretch_rejects_unit_and_out_of_range() {
    let clip = sine(440.0, 1.0, 0.5, 16_000);
    assert!(time_stretch(&clip, 1.0).is_err());
    assert!(time_stretch(&clip, 1.3).is_err());
    assert!(time_stretch(&clip, 0.7).is_err());
}

/// RMS of a linearly ramped unit-RMS carrier over gain interval [a, b]:
/// sqrt((b^3 - a^3) / (3 (b - a))).
fn ramp_rms(a: f64, b: f64) -> f64 {
    ((b.powi(3) - a.powi(3)) / (3.0 * (b - a))).sqrt()
}

#[test]
fn crescendo_rms_ratio_matches_closed_form() {
    let clip = sine(500.0, 4.0, 0.5, 16_000);
    let out = volume_ramp(&clip, RampDirection::Crescendo, 0.5, clip.duration()).unwrap();
    let n = out.len();
    let tenth = n / 10;
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    let ratio = rms(&out.samples()[..tenth]) / rms(&out.samples()[n - tenth..]);
    let expected = ramp_rms(0.5, 0.55) / ramp_rms(0.95, 1.0);
    assert!((expected - 0.5386).abs() < 1e-4);
    assert!((ratio - expected).abs() < 0.005, "ratio {ratio}");
}

#[test]
fn ramp_rejects_unit_gain() {
    let clip = sine(500.0, 1.0, 0.5, 16_000);
    assert!(volume_ramp(&clip, RampDirection::Crescendo, 1.0, 0.5).is_err());
    assert!(volume_ramp(&clip, RampDirection::Crescendo, 0.3, 0.0).is_err());
    assert!(volume_ramp(&clip, RampDirection::Crescendo, 0.3, 1.5).is_err());
}

#[test]
fn decrescendo_leaves_first_half_untouched() {
    let clip = tones(&[220.0, 331.0], 2.0, 0.8, 16_000);
    let out = volume_ramp(&clip, RampDirection::Decrescendo, 0.2, 1.0).unwrap();
    let half = clip.len() / 2;
    assert_eq!(&out.samples()[..half], &clip.samples()[..half]);
    // The ramp reaches g_min at the last sample.
    let last = clip.len() - 1;
    let t = last as f64 / 16_000.0;
    let expected_gain = 1.0 - 0.8 * ((t - 1.0) / 1.0);
    assert!((out.samples()[last] - clip.samples()[last] * expected_gain).abs() < 1e-12);
}

#[test]
fn ramp_keeps_peak_and_signs() {
    let clip = tones(&[220.0, 331.0], 2.0, 0.8, 16_000);
    let out = volume_ramp(&clip, RampDirection::Crescendo, 0.3, 1.0).unwrap();
    assert!((out.peak() - clip.peak()).abs() < 1e-12);
    for (a, b) in clip.samples().iter().zip(out.samples()) {
        assert_eq!(a.signum() * (a.abs() > 0.0) as i32 as f64, b.signum() * (b.abs() > 0.0) as i32 as f64);
    }
}

fn bb_minor_features() -> FeatureSet {
    let bb = PitchClass::new(10).unwrap();
    let ab = PitchClass::new(8).unwrap();
    FeatureSet {
        beats: Some(BeatGrid::cycling(3, 1, &[0.5, 8.5]).unwrap()),
        chords: Some(
            ChordSequence::new(vec![
                ChordEvent::new(bb, ChordType::Minor, 0.0),
                ChordEvent::new(ab, ChordType::Major, 4.0),
            ])
            .unwrap(),
        ),
        key: Some(KeyEstimate::new(bb, Mode::Minor)),
        bpm: Some(TempoBpm::new(100.0).unwrap()),
    }
}

#[test]
fn co_transform_pitch_shift() {
    let f = bb_minor_features();
    let g = co_transform_features(&f, &Augmentation::PitchShift { k: 2 }, 10.0).unwrap();
    assert_eq!(g.key, Some(KeyEstimate::new(PitchClass::C, Mode::Minor)));
    let names = g.chords.as_ref().unwrap().names(g.spelling());
    assert_eq!(names, vec!["Cm", "Bb"]);
    assert_eq!(g.beats, f.beats);
    assert_eq!(g.bpm, f.bpm);
}

#[test]
fn co_transform_time_stretch() {
    let f = bb_minor_features();
    let g = co_transform_features(&f, &Augmentation::TimeStretch { factor: 1.25 }, 10.0).unwrap();
    assert_eq!(g.bpm.unwrap().bpm(), 125.0);
    assert_eq!(g.chords.as_ref().unwrap().entries()[1].time, 3.2);

    // 8.5 / 0.8 = 10.625 s falls outside the 10 s window.
    let h = co_transform_features(&f, &Augmentation::TimeStretch { factor: 0.8 }, 10.0).unwrap();
    assert_eq!(h.beats.as_ref().unwrap().times(), vec![0.625]);
    assert_eq!(h.bpm.unwrap().bpm(), 80.0);
}

#[test]
fn co_transform_volume_is_identity() {
    let f = bb_minor_features();
    let aug = Augmentation::VolumeRamp {
        direction: RampDirection::Crescendo,
        g_min: 0.3,
        pivot_seconds: 5.0,
    };
    assert_eq!(co_transform_features(&f, &aug, 10.0).unwrap(), f);
}

#[test]
fn descriptor_json_shape() {
    let json = serde_json::to_string(&Augmentation::PitchShift { k: 2 }).unwrap();
    assert_eq!(json, r#"{"kind":"pitch_shift","k":2}"#);
    let v: Augmentation =
        serde_json::from_str(r#"{"kind":"volume_ramp","direction":"decrescendo","g_min":0.2,"pivot_seconds":3.0}"#)
            .unwrap();
    assert!(matches!(v, Augmentation::VolumeRamp { direction: RampDirection::Decrescendo, .. }));
}

#[test]
fn dataset_plan_has_eleven_valid_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let plan = plan_dataset_augmentations(&mut rng, 10.0);
        assert_eq!(plan.len(), 11);
        let shifts: Vec<i32> = plan
            .iter()
            .filter_map(|a| match a {
                Augmentation::PitchShift { k } => Some(*k),
                _ => None,
            })
            .collect();
        assert_eq!(shifts, vec![-3, -2, -1, 1, 2, 3]);
        for a in &plan {
            a.validate(10.0).unwrap();
            if let Augmentation::TimeStretch { factor } = a {
                let d = (factor - 1.0).abs();
                assert!((0.05 - 1e-12..=0.25 + 1e-12).contains(&d));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn outputs_are_finite_and_bounded(
        freq in 110.0f64..1500.0,
        amp in 0.1f64..1.0,
        k in prop::sample::select(vec![-3, -2, -1, 1, 2, 3]),
        factor in prop::sample::select(vec![0.75, 0.9, 1.1, 1.25]),
        g_min in 0.1f64..=0.5,
    ) {
        let clip = tones(&[freq, freq * 1.5], 1.0, amp, 16_000);
        let outs = [
            pitch_shift(&clip, k).unwrap(),
            time_stretch(&clip, factor).unwrap(),
            volume_ramp(&clip, RampDirection::Decrescendo, g_min, 0.4).unwrap(),
        ];
        for out in outs {
            prop_assert!(out.samples().iter().all(|s| s.is_finite()));
            prop_assert!(out.peak() <= 1.0 + 1e-6);
        }
    }
}

#[test]
fn phase_locking_keeps_two_partials_apart() {
    // Two partials a fifth apart survive a stretch with both peaks intact.
    let clip = tones(&[300.0, 450.0], 2.0, 0.8, 16_000);
    let out = time_stretch(&clip, 1.2).unwrap();
    let x = out.samples();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&s| Complex::new(s, 0.0)).collect();
    let n = buf.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag = |f: f64| {
        let k = (f * n as f64 / 16_000.0).round() as usize;
        (k - 3..=k + 3).map(|j| buf[j].norm()).fold(0.0, f64::max)
    };
    let floor = mag(375.0);
    assert!(mag(300.0) > 10.0 * floor && mag(450.0) > 10.0 * floor);
    let _ = PI;
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tunecap::audio::AudioClip;
use tunecap::augment::{pitch_shift, time_stretch};
use tunecap::caption::{
    mask_probability, parse_beats_verbalization, parse_chords_verbalization, sample_control_count,
    tempo_to_marking, verbalize_beats, verbalize_chords, TempoMarking,
};
use tunecap::dataset::{build_musicbench, musicbench_counts, BuildConfig, SourceRecord, TestSelection};
use tunecap::diffusion::{
    cfg_mix, fme_embed, forward_chain, gaussian_latent, make_schedule, mpe_embed, rotation,
    toy_denoise_loop, LossDraw, OracleDenoiser, SinusoidConfig, ToyDenoiser, ToyTrainer,
    diffusion_loss_with_draws, Latent,
};
use tunecap::metrics::{cmo, cmot, ecm, frechet_distance, pcm, tb, tbt, EmbeddingSet};
use tunecap::mir::{
    estimate_key, estimate_tempo, recognize_chords, track_beats, BeatGrid, ChordEvent,
    ChordSequence, ChordType, PitchClass, TempoBpm,
};
use tunecap::synth::{chord_blocks, click_train, major_scale, midi_to_hz, tones};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn within(elapsed: Duration, budget: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < budget, || format!("{what} took {elapsed:?}, budget {budget:?}"))
}

fn chords(names: &[&str]) -> ChordSequence {
    let events = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let (root, rest) = PitchClass::parse_prefix(n).unwrap();
            ChordEvent::new(root, ChordType::from_suffix(rest).unwrap(), i as f64)
        })
        .collect();
    ChordSequence::new(events).unwrap()
}

fn chord_metric_examples() -> Outcome {
    let gt = chords(&["G7", "F7", "C7", "G7"]);
    let near = chords(&["G7", "F7", "C", "G7"]);
    let far = chords(&["Fm6", "G", "Dm", "G", "C", "Gm"]);
    let start = Instant::now();
    let first = [pcm(&gt, &near), ecm(&gt, &near), cmo(&gt, &near), cmot(&gt, &near)];
    let second = [cmot(&gt, &far), cmo(&gt, &far), ecm(&gt, &far)];
    let elapsed = start.elapsed();
    ensure(first == [0.0, 75.0, 75.0, 100.0], || format!("example 1 PCM/ECM/CMO/CMOT = {first:?}"))?;
    ensure(second == [75.0, 0.0, 0.0], || format!("example 2 CMOT/CMO/ECM = {second:?}"))?;
    within(elapsed, Duration::from_millis(1), "chord metrics")?;
    Ok(format!("example 1 {first:?}, example 2 {second:?}, {elapsed:?}"))
}

fn tempo_bins() -> Outcome {
    let table: [(&str, f64, f64); 9] = [
        ("Grave", 0.0, 40.0),
        ("Largo", 40.0, 60.0),
        ("Adagio", 60.0, 70.0),
        ("Andante", 70.0, 90.0),
        ("Moderato", 90.0, 110.0),
        ("Allegro", 110.0, 140.0),
        ("Vivace", 140.0, 160.0),
        ("Presto", 160.0, 210.0),
        ("Prestissimo", 210.0, f64::INFINITY),
    ];
    // TBT for representative tempos of row/column bins; 1 = within one bin
    let adjacency = [
        "110000000", "111000000", "011100000", "001110000", "000111000",
        "000011100", "000001110", "000000111", "000000011",
    ];
    let start = Instant::now();
    for (m, (name, lo, hi)) in TempoMarking::ALL.iter().zip(table) {
        ensure(m.name() == name && m.bounds() == (lo, hi), || format!("{} {:?}", m.name(), m.bounds()))?;
        ensure(tempo_to_marking(hi.min(1e6)) == *m, || format!("{hi} not in {name}"))?;
    }
    for (bpm, want) in [(95.0, "Moderato"), (40.0, "Grave"), (211.0, "Prestissimo")] {
        let got = tempo_to_marking(bpm).name();
        ensure(got == want, || format!("{bpm} -> {got}, expected {want}"))?;
    }
    let rep = |(_, lo, hi): (&str, f64, f64)| TempoBpm::new(if hi.is_finite() { (lo + hi) / 2.0 } else { lo + 30.0 }).unwrap();
    for (i, row) in adjacency.iter().enumerate() {
        for (j, cell) in row.chars().enumerate() {
            let (a, b) = (rep(table[i]), rep(table[j]));
            let want = if cell == '1' { 100.0 } else { 0.0 };
            ensure(tbt(a, b) == want, || format!("TBT({}, {}) = {}", table[i].0, table[j].0, tbt(a, b)))?;
            ensure(tb(a, b) == if i == j { 100.0 } else { 0.0 }, || format!("TB({i}, {j})"))?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_millis(1), "bin checks")?;
    Ok(format!("9 bins, 81 TBT pairs, {elapsed:?}"))
}

fn tempo_formula() -> Outcome {
    let grid = BeatGrid::cycling(4, 1, &[0.0, 0.4, 1.0]).map_err(|e| e.to_string())?;
    let bpm = estimate_tempo(&grid).map_err(|e| e.to_string())?.bpm();
    ensure(bpm == 125.0, || format!("estimate_tempo = {bpm:?}"))?;
    Ok(format!("{bpm} BPM"))
}

fn diffusion_identity() -> Outcome {
    let start = Instant::now();
    let sched = make_schedule(200, 1e-4, 2e-2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z0 = gaussian_latent(&mut rng, (8, 16));
    let noises: Vec<Latent> = (0..200).map(|_| gaussian_latent(&mut rng, (8, 16))).collect();
    let z_n = forward_chain(&z0, &noises, &sched).map_err(|e| e.to_string())?;
    let oracle = OracleDenoiser { z0: z0.clone(), sched: &sched };
    let rec = toy_denoise_loop(&oracle, &z_n, None, &sched, 1.0, None::<&mut ChaCha8Rng>)
        .map_err(|e| e.to_string())?;
    let mse = (&rec - &z0).mapv(|v| v * v).mean().unwrap();
    let elapsed = start.elapsed();
    ensure(mse < 1e-3, || format!("MSE {mse:e}"))?;
    within(elapsed, Duration::from_secs(1), "forward/reverse")?;
    Ok(format!("MSE {mse:.3e}, {elapsed:?}"))
}

fn guidance_mix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = gaussian_latent(&mut rng, (8, 16));
    let u = gaussian_latent(&mut rng, (8, 16));
    let three = cfg_mix(&c, &u, 3.0).map_err(|e| e.to_string())?;
    let want = &c * 3.0 - &u * 2.0;
    let err = (&three - &want).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(err <= 1e-12, || format!("w=3 max error {err:e}"))?;
    let one = cfg_mix(&c, &u, 1.0).map_err(|e| e.to_string())?;
    let exact = one.iter().zip(c.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(exact, || "w=1 is not bit-identical to the conditional estimate".into())?;
    Ok(format!("w=3 max error {err:.1e}, w=1 bit-exact"))
}

fn rotation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fme = SinusoidConfig::new(32, 10_000.0).map_err(|e| e.to_string())?;
    let mpe = SinusoidConfig::new(32, 10_000.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (x, s, cfg, embed): (f64, f64, &SinusoidConfig, fn(f64, &SinusoidConfig) -> _) = if i % 2 == 0 {
            (rng.random_range(0.0..12.0), rng.random_range(-12.0..12.0), &fme, fme_embed)
        } else {
            (rng.random_range(0.0..10.0), rng.random_range(-10.0..10.0), &mpe, mpe_embed)
        };
        let lhs = embed(x + s, cfg);
        let rhs = rotation(s, cfg).dot(&embed(x, cfg));
        let err = (&lhs - &rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(err);
    }
    ensure(worst < 1e-9, || format!("max |embed(x+s) - R_s embed(x)| = {worst:e}"))?;
    Ok(format!("1000 pairs, max error {worst:.1e}"))
}

fn gradient_and_training() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let steps = 100;
    let sched = make_schedule(steps, 1e-4, 2e-2).map_err(|e| e.to_string())?;
    let mut model = ToyDenoiser::random(&mut rng, (4, 8), 0, 24);
    let z0 = ToyTrainer::synthetic_latents(&mut rng, 8, (4, 8));
    let draws: Vec<LossDraw> = z0.iter().map(|z| LossDraw::sample(&mut rng, steps, z.dim())).collect();
    let gamma = vec![1.0; steps];
    let (_, grad) = model.loss_and_grad(&z0, &draws, &sched, &gamma, None).map_err(|e| e.to_string())?;
    let base = model.params();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let i = rng.random_range(0..base.len());
        let mut p = base.clone();
        let mut eval = |v: f64| {
            p[i] = v;
            model.set_params(&p).unwrap();
            diffusion_loss_with_draws(&model, &z0, &draws, &sched, &gamma, None).unwrap()
        };
        let fd = (eval(base[i] + h) - eval(base[i] - h)) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    ensure(worst < 1e-4, || format!("worst relative gradient error {worst:e}"))?;

    let start = Instant::now();
    let sched = make_schedule(200, 1e-4, 2e-2).map_err(|e| e.to_string())?;
    let data = ToyTrainer::synthetic_latents(&mut rng, 256, (4, 8));
    let mut model = ToyDenoiser::random(&mut rng, (4, 8), 0, 64);
    let report = ToyTrainer::default().train(&mut model, &data, &sched, &mut rng).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ratio = report.final_loss / report.initial_loss;
    ensure(ratio < 0.25, || format!("final/initial loss {ratio:.3}"))?;
    within(elapsed, Duration::from_secs(60), "training")?;
    Ok(format!("20 params, worst rel error {worst:.1e}; loss ratio {ratio:.3} after 2000 steps in {elapsed:.1?}"))
}

fn tempo_of(clip: &AudioClip) -> Result<f64, String> {
    let grid = track_beats(clip).map_err(|e| e.to_string())?;
    Ok(estimate_tempo(&grid).map_err(|e| e.to_string())?.bpm())
}

fn mir_round_trips() -> Outcome {
    let start = Instant::now();
    let rate = 16_000;
    let mut correct = 0;
    for tonic in 0..12 {
        let clip = major_scale(60.0 + tonic as f64, 0.4, rate);
        let k0 = estimate_key(&clip).map_err(|e| e.to_string())?;
        let shifted = pitch_shift(&clip, 2).map_err(|e| e.to_string())?;
        let k1 = estimate_key(&shifted).map_err(|e| e.to_string())?;
        ensure(k1.root == k0.root.transpose(2) && k1.mode == k0.mode, || {
            format!("tonic {tonic}: {:?} -> {:?}", k0, k1)
        })?;
        correct += usize::from(k0.root.index() == tonic);
    }

    // base and stretched tempos both lie within half an octave of the
    // tracker's 120 BPM prior centre, so neither reading is octave-ambiguous
    let mut ratios = Vec::new();
    for spacing in [0.5, 0.55, 0.6, 0.65] {
        let times: Vec<f64> = (0..).map(|i| 0.1 + i as f64 * spacing).take_while(|t| *t < 9.8).collect();
        let accents: Vec<f64> = (0..times.len()).map(|i| if i % 4 == 0 { 1.0 } else { 0.6 }).collect();
        let clip = click_train(&times, &accents, 10.0, rate);
        let before = tempo_of(&clip)?;
        let after = tempo_of(&time_stretch(&clip, 1.25).map_err(|e| e.to_string())?)?;
        let ratio = after / before;
        ensure((ratio / 1.25 - 1.0).abs() <= 0.08, || {
            format!("spacing {spacing}: {before:.1} -> {after:.1} BPM, ratio {ratio:.3}")
        })?;
        ratios.push(format!("{ratio:.3}"));
    }

    let am = [45.0, 57.0, 60.0, 64.0];
    let e = [40.0, 56.0, 59.0, 64.0];
    let clip = chord_blocks(&[(&am, 4.0), (&e, 4.0)], rate);
    let got = recognize_chords(&clip).map_err(|e| e.to_string())?;
    let gt = chords(&["Am", "E"]);
    let score = ecm(&gt, &got);
    let names = got.names(tunecap::mir::Spelling::Sharps);
    ensure(score >= 75.0, || format!("Am→E recognized as {names:?}, ECM {score}"))?;

    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30), "MIR checks")?;
    Ok(format!(
        "12/12 key shifts ({correct}/12 tonics exact); stretch ratios {}; chords {names:?} ECM {score}; {elapsed:.1?}",
        ratios.join(", ")
    ))
}

/// Fréchet distance from plain covariance loops and the eigenvalues of the
/// non-symmetric product ΣaΣb.
fn oracle_frechet(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let stats = |x: &[Vec<f64>]| {
        let (n, d) = (x.len(), x[0].len());
        let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let cov = DMatrix::from_fn(d, d, |i, j| {
            x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n as f64 - 1.0)
        });
        (mean, cov)
    };
    let (ma, ca) = stats(a);
    let (mb, cb) = stats(b);
    let dm: f64 = ma.iter().zip(&mb).map(|(p, q)| (p - q).powi(2)).sum();
    let eig = (&ca * &cb).complex_eigenvalues();
    let tr_sqrt: f64 = eig.iter().map(|l| l.sqrt().re).sum();
    dm + ca.trace() + cb.trace() - 2.0 * tr_sqrt
}

fn frechet_checks() -> Outcome {
    let set = |rows: &[Vec<f64>]| {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.concat();
        EmbeddingSet::new(ndarray::Array2::from_shape_vec((rows.len(), d), flat).unwrap(), "t").unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gauss = |n: usize, d: usize, shift: f64| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|j| gaussian_latent(&mut rng, (1, 1))[[0, 0]] * (1.0 + j as f64 * 0.3) + shift).collect()).collect()
    };
    let a = gauss(50, 5, 0.0);
    let same = frechet_distance(&set(&a), &set(&a)).map_err(|e| e.to_string())?;
    ensure(same.abs() <= 1e-6, || format!("identical sets: {same:e}"))?;

    let one_a = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let one_b = vec![vec![2.0], vec![3.0], vec![4.0]];
    let moment = frechet_distance(&set(&one_a), &set(&one_b)).map_err(|e| e.to_string())?;
    ensure((moment - 9.0).abs() <= 1e-6, || format!("1-D moment-matched case: {moment}"))?;

    let mut worst = 0.0f64;
    for trial in 0..20 {
        let x = gauss(40, 5, 0.0);
        let y = gauss(60, 5, 0.2 * trial as f64);
        let got = frechet_distance(&set(&x), &set(&y)).map_err(|e| e.to_string())?;
        let want = oracle_frechet(&x, &y);
        worst = worst.max((got - want).abs() / want.abs().max(1e-12));
    }
    ensure(worst <= 1e-6, || format!("oracle relative error {worst:e}"))?;
    Ok(format!("identical {same:.1e}, 1-D {moment:.9}, 20 random 5-D sets within {worst:.1e} rel"))
}

fn dataset_formula() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sources: Vec<SourceRecord> = (0..10)
        .map(|i| {
            let name = format!("c{i}.wav");
            let clip = tones(&[midi_to_hz(55.0 + i as f64)], 3.0, 0.3, 16_000);
            tunecap::audio::write_wav(&clip, dir.path().join(&name)).unwrap();
            SourceRecord { id: format!("s{i}"), audio_path: name, caption: format!("A bright melody number {i}."), features: None }
        })
        .collect();
    let cfg = BuildConfig { test: TestSelection::Fraction(0.0), ..BuildConfig::new(1, dir.path()) };
    let out = build_musicbench(&sources, &cfg, &tunecap::caption::IdentityRephraser).map_err(|e| e.to_string())?;
    let train = out.train().count();
    ensure(train == 3 * 10 + 11 * 10, || format!("mini corpus train count {train}"))?;
    ensure(musicbench_counts(10, 10).total == 140, || "count formula on 10 records".into())?;

    let plan = tunecap::augment::plan_dataset_augmentations(&mut ChaCha8Rng::seed_from_u64(0), 10.0);
    let count = |f: fn(&tunecap::augment::Augmentation) -> bool| plan.iter().filter(|a| f(a)).count();
    use tunecap::augment::Augmentation as A;
    let mix = (
        count(|a| matches!(a, A::PitchShift { .. })),
        count(|a| matches!(a, A::TimeStretch { .. })),
        count(|a| matches!(a, A::VolumeRamp { .. })),
    );
    ensure(mix == (6, 4, 1), || format!("variant mix {mix:?}"))?;
    let full = musicbench_counts(5_479 - 400, 3_413);
    ensure((37_000..38_000).contains(&full.train_aug), || format!("TrainAug {}", full.train_aug))?;
    Ok(format!("mini corpus {train}; variants 6/4/1; TrainAug at full scale {}", full.train_aug))
}

fn sampling_policies() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 5];
    for _ in 0..100_000 {
        counts[sample_control_count(&mut rng)] += 1;
    }
    let pct: Vec<f64> = counts.iter().map(|c| *c as f64 / 1000.0).collect();
    for (p, w) in pct.iter().zip([25.0, 30.0, 20.0, 15.0, 10.0]) {
        ensure((p - w).abs() <= 1.0, || format!("count distribution {pct:?}%"))?;
    }
    for (n, m) in [(1usize, 2.0), (4, 4.0), (80, 4.0)] {
        let want = (10.0 * n as f64 / m).min(100.0) / 100.0;
        let got = mask_probability(n, m);
        ensure(got == want, || format!("mask probability N={n}, M={m}: {got} vs {want}"))?;
    }
    Ok(format!("counts {pct:?}%; mask 5%/10%/100%"))
}

fn verbalization_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10_000 {
        let meter = rng.random_range(1..=4u8);
        let mut t = 0u32;
        let times: Vec<f64> = (0..rng.random_range(0..25))
            .map(|_| {
                t += rng.random_range(1..60);
                t as f64 / 100.0
            })
            .collect();
        let grid = BeatGrid::cycling(meter, 1, &times).unwrap();
        let (m, parsed) = parse_beats_verbalization(&verbalize_beats(&grid)).map_err(|e| e.to_string())?;
        ensure(BeatGrid::cycling(m, 1, &parsed).unwrap() == grid, || format!("beats {times:?}"))?;

        let mut t = 0u32;
        let events: Vec<ChordEvent> = (0..rng.random_range(0..8))
            .map(|_| {
                t += rng.random_range(1..120);
                let ctype = ChordType::ALL[rng.random_range(0..ChordType::ALL.len())];
                ChordEvent::new(PitchClass::new(rng.random_range(0..12)).unwrap(), ctype, t as f64 / 100.0)
            })
            .collect();
        let seq = ChordSequence::new(events).unwrap();
        let text = verbalize_chords(&seq);
        let back = parse_chords_verbalization(&text).map_err(|e| e.to_string())?;
        ensure(back == seq, || format!("chords {text:?}"))?;
    }
    let literal = "Am at 1.11; E at 4.14; C#maj7 at 7.18";
    let seq = parse_chords_verbalization(literal).map_err(|e| e.to_string())?;
    ensure(seq.len() == 3, || format!("{} entries", seq.len()))?;
    let again = verbalize_chords(&seq);
    ensure(again == literal, || format!("re-verbalized as {again:?}"))?;
    Ok("10^4 beat and chord round trips; literal string byte-identical".into())
}

fn main() {
    let checks: [Check; 12] = [
        ("chord metrics on worked examples", chord_metric_examples),
        ("tempo bin table and TBT adjacency", tempo_bins),
        ("tempo from reciprocal inter-beat intervals", tempo_formula),
        ("diffusion forward/reverse identity", diffusion_identity),
        ("classifier-free guidance mix", guidance_mix),
        ("pitch/time embedding rotation invariance", rotation_invariance),
        ("toy denoiser gradients and training", gradient_and_training),
        ("MIR round trips on synthesized audio", mir_round_trips),
        ("Fréchet distance", frechet_checks),
        ("dataset construction counts", dataset_formula),
        ("caption sampling policies", sampling_policies),
        ("beat and chord verbalization round trips", verbalization_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

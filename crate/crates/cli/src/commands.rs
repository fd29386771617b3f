use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use clap::{ArgGroup, Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use tunecap::audio::{read_wav, write_wav};
use tunecap::augment::{co_transform_features, Augmentation, RampDirection};
use tunecap::caption::{
    decode_beat_prediction, enrich_caption, parse_beats_verbalization, parse_chords_verbalization,
    Caption, EnrichPolicy, HttpRephraser, IdentityRephraser, Rephraser,
};
use tunecap::dataset::{
    build_fmacaps, build_musicbench, read_jsonl, substream, verify_build, write_jsonl,
    BuildConfig, FmaCapsConfig, SourceRecord, TagFile, TestSelection,
};
use tunecap::diffusion::{
    gaussian_latent, make_schedule, toy_denoise_loop, BeatEncoder, Checkpoint, ChordEncoder,
    ConditionBundle, NamedTensor, SinusoidConfig, ToyDenoiser, ToyTrainer, DEFAULT_BETA_MAX,
    DEFAULT_BETA_MIN, DEFAULT_D_EMBED, DEFAULT_STEPS,
};
use tunecap::metrics::{evaluate_dataset, frechet_distance, kl_divergence, read_embeddings, read_probabilities, ControlSample};
use tunecap::mir::{extract_features, BeatGrid, ChordEvent, ChordSequence, ChordType, FeatureDump, FeatureSet, PitchClass};

use crate::config::pick;
use crate::{Command, Context, Outcome, ValidationError};

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

fn out_dir(ctx: &Context) -> anyhow::Result<&Path> {
    fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    Ok(&ctx.out)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(command: &Command, ctx: &Context) -> anyhow::Result<Outcome> {
    match command {
        Command::Extract(a) => extract(a, ctx),
        Command::Augment(a) => augment(a, ctx),
        Command::Enrich(a) => enrich(a, ctx),
        Command::BuildMusicbench(a) => build_mb(a, ctx),
        Command::BuildFmacaps(a) => build_fma(a, ctx),
        Command::EvalControl(a) => eval_control(a, ctx),
        Command::EvalQuality(a) => eval_quality(a, ctx),
        Command::DiffusionDemo(a) => diffusion_demo(a, ctx),
        Command::DecodePredictions(a) => decode(a, ctx),
    }
}

fn clip_id(path: &Path) -> anyhow::Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| invalid(format!("{}: unusable file name", path.display())))
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// WAV files or directories of WAV files.
    #[arg(long, required = true, num_args = 1..)]
    pub audio: Vec<PathBuf>,
}

fn collect_wavs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for entry in fs::read_dir(p).with_context(|| format!("listing {}", p.display()))? {
                let path = entry?.path();
                if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")) {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn extract(a: &ExtractArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let files = collect_wavs(&a.audio)?;
    if files.is_empty() {
        return Err(invalid("no WAV files found"));
    }
    let results: Vec<_> = files
        .par_iter()
        .map(|p| -> anyhow::Result<(FeatureDump, Vec<String>)> {
            let id = clip_id(p)?;
            let clip = read_wav(p)?.to_canonical()?;
            let (features, report) = extract_features(&clip)?;
            let warnings = report.warnings.into_iter().map(|w| format!("{id}: {w}")).collect();
            Ok((FeatureDump::from_features(Some(id), &features), warnings))
        })
        .collect();
    let mut dumps = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        let (dump, w) = r?;
        dumps.push(dump);
        warnings.extend(w);
    }
    write_jsonl(&out_dir(ctx)?.join("features.jsonl"), &dumps)?;
    Ok(Outcome {
        config: json!({ "audio": a.audio }),
        counts: BTreeMap::from([("clips".into(), dumps.len())]),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ramp {
    Crescendo,
    Decrescendo,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("alteration").required(true).args(["pitch_shift", "time_stretch", "ramp"])))]
pub struct AugmentArgs {
    #[arg(long)]
    pub audio: PathBuf,
    /// Semitones in −3..=3, excluding 0.
    #[arg(long, allow_hyphen_values = true)]
    pub pitch_shift: Option<i32>,
    /// Speed factor in [0.75, 1.25], excluding 1.
    #[arg(long)]
    pub time_stretch: Option<f64>,
    #[arg(long, value_enum, requires_all = ["g_min", "pivot"])]
    pub ramp: Option<Ramp>,
    /// Lowest gain of the ramp, in [0.1, 0.5].
    #[arg(long)]
    pub g_min: Option<f64>,
    /// Ramp turning point in seconds.
    #[arg(long)]
    pub pivot: Option<f64>,
}

fn augment(a: &AugmentArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let aug = match (a.pitch_shift, a.time_stretch, a.ramp) {
        (Some(k), _, _) => Augmentation::PitchShift { k },
        (_, Some(factor), _) => Augmentation::TimeStretch { factor },
        (_, _, Some(r)) => Augmentation::VolumeRamp {
            direction: match r {
                Ramp::Crescendo => RampDirection::Crescendo,
                Ramp::Decrescendo => RampDirection::Decrescendo,
            },
            g_min: a.g_min.expect("enforced by clap"),
            pivot_seconds: a.pivot.expect("enforced by clap"),
        },
        _ => unreachable!("one alteration is required"),
    };
    let id = clip_id(&a.audio)?;
    let clip = read_wav(&a.audio)?.to_canonical()?;
    aug.validate(clip.duration())?;
    let altered = aug.apply(&clip)?;
    let (features, report) = extract_features(&clip)?;
    let co = co_transform_features(&features, &aug, clip.duration())?;
    let dir = out_dir(ctx)?;
    let report_w = write_wav(&altered, dir.join(format!("{id}_aug.wav")))?;
    write_jsonl(
        &dir.join("features.jsonl"),
        &[
            FeatureDump::from_features(Some(id.clone()), &features),
            FeatureDump::from_features(Some(format!("{id}_aug")), &co),
        ],
    )?;
    let mut warnings: Vec<String> = report.warnings;
    if report_w.clipped_samples > 0 {
        warnings.push(format!("{id}_aug: {} samples clipped", report_w.clipped_samples));
    }
    Ok(Outcome {
        config: json!({ "audio": a.audio, "augmentation": aug }),
        counts: BTreeMap::from([("clips".into(), 1)]),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyArg {
    /// Add every available control sentence.
    All,
    /// Sample how many to add.
    Sampled,
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    /// JSONL of {id, audio_path, caption, features?}.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory that `audio_path` is relative to; used when features are absent.
    #[arg(long)]
    pub audio_root: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
}

#[derive(Debug, Serialize)]
struct EnrichedRecord {
    id: String,
    text: String,
    caption: Caption,
}

fn enrich(a: &EnrichArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let policy = match a.policy {
        Some(p) => p,
        None => match ctx.file.policy.as_deref() {
            None | Some("sampled") => PolicyArg::Sampled,
            Some("all") => PolicyArg::All,
            Some(other) => return Err(invalid(format!("unknown policy {other:?}"))),
        },
    };
    let sources: Vec<SourceRecord> = read_jsonl(&a.input)?;
    let results: Vec<Result<EnrichedRecord, String>> = sources
        .par_iter()
        .map(|s| {
            let features = match (&s.features, &a.audio_root) {
                (Some(d), _) => d.to_features().map_err(|e| e.to_string())?,
                (None, Some(root)) => {
                    let clip = read_wav(root.join(&s.audio_path))
                        .and_then(|c| c.to_canonical())
                        .map_err(|e| e.to_string())?;
                    extract_features(&clip).map_err(|e| e.to_string())?.0
                }
                (None, None) => return Err("no features and no --audio-root".to_string()),
            };
            let mut rng = substream(ctx.seed, &s.id, 0);
            let p = match policy {
                PolicyArg::All => EnrichPolicy::AllFour,
                PolicyArg::Sampled => EnrichPolicy::Sampled,
            };
            let caption = enrich_caption(&Caption::from_text(&s.caption), &features, p, &mut rng);
            Ok(EnrichedRecord { id: s.id.clone(), text: caption.text(), caption })
        })
        .collect();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (s, r) in sources.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => warnings.push(format!("{}: skipped: {e}", s.id)),
        }
    }
    write_jsonl(&out_dir(ctx)?.join("enriched.jsonl"), &records)?;
    Ok(Outcome {
        config: json!({ "in": a.input, "audio_root": a.audio_root, "policy": policy }),
        counts: BTreeMap::from([("records".into(), records.len()), ("skipped".into(), warnings.len())]),
        warnings,
    })
}

#[derive(Debug, Args)]
pub struct BuildMusicbenchArgs {
    /// JSONL source manifest of {id, audio_path, caption, features?}.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub audio_root: PathBuf,
    /// Fraction of each quality class held out for testing.
    #[arg(long, conflicts_with = "test_per_class")]
    pub test_fraction: Option<f64>,
    /// Number of clips per quality class held out for testing.
    #[arg(long)]
    pub test_per_class: Option<usize>,
    /// Endpoint of an external rephrasing service; identity when absent.
    #[arg(long)]
    pub rephrase_url: Option<String>,
}

fn build_mb(a: &BuildMusicbenchArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let sources: Vec<SourceRecord> = read_jsonl(&a.input)?;
    let mut cfg = BuildConfig::new(ctx.seed, &a.audio_root);
    cfg.test = match (a.test_per_class.or(ctx.file.test_per_class), a.test_fraction) {
        (_, Some(f)) => TestSelection::Fraction(f),
        (Some(n), None) => TestSelection::PerClass(n),
        (None, None) => ctx.file.test_fraction.map_or(cfg.test, TestSelection::Fraction),
    };
    let dir = out_dir(ctx)?;
    cfg.out_dir = Some(dir.to_path_buf());
    let url = a.rephrase_url.clone().or_else(|| ctx.file.rephrase_url.clone());
    let rephraser: Box<dyn Rephraser> = match &url {
        Some(u) => Box::new(HttpRephraser::new(u.clone())),
        None => Box::new(IdentityRephraser),
    };
    let out = build_musicbench(&sources, &cfg, rephraser.as_ref())?;
    verify_build(&out)?;
    out.write_manifests(&dir.join("manifests"))?;
    Ok(Outcome {
        config: json!({
            "in": a.input,
            "audio_root": a.audio_root,
            "test": format!("{:?}", cfg.test),
            "rephrase_url": url,
            "rephrase_probability": cfg.rephrase_probability,
        }),
        counts: out.counts(),
        warnings: out.warnings,
    })
}

#[derive(Debug, Args)]
pub struct BuildFmacapsArgs {
    /// Directory of source WAV files named `<id>.wav`.
    #[arg(long)]
    pub audio: PathBuf,
    /// JSON map of id to {category: [tags]}.
    #[arg(long)]
    pub tags: PathBuf,
    /// Optional JSON map of id to an expert-written caption.
    #[arg(long)]
    pub expert: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn build_fma(a: &BuildFmacapsArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let tags: TagFile = read_json(&a.tags)?;
    let expert: BTreeMap<String, String> = match &a.expert {
        Some(p) => read_json(p)?,
        None => BTreeMap::new(),
    };
    let dir = out_dir(ctx)?;
    let cfg = FmaCapsConfig { seed: ctx.seed, audio_dir: a.audio.clone(), out_dir: dir.to_path_buf() };
    let (records, warnings) = build_fmacaps(&tags, &expert, &cfg)?;
    let manifests = dir.join("manifests");
    fs::create_dir_all(&manifests).with_context(|| format!("creating {}", manifests.display()))?;
    write_jsonl(&manifests.join("fmacaps.jsonl"), &records)?;
    Ok(Outcome {
        config: json!({ "audio": a.audio, "tags": a.tags, "expert": a.expert }),
        counts: BTreeMap::from([("records".into(), records.len()), ("skipped".into(), warnings.iter().filter(|w| w.contains(": skipped:")).count())]),
        warnings,
    })
}

#[derive(Debug, Args)]
pub struct EvalControlArgs {
    /// Ground-truth feature dumps (JSONL, keyed by `id`).
    #[arg(long)]
    pub gt: PathBuf,
    /// Predicted feature dumps (JSONL, keyed by `id`).
    #[arg(long)]
    pub pred: PathBuf,
}

fn keyed_dumps(path: &Path) -> anyhow::Result<Vec<(String, FeatureSet)>> {
    let dumps: Vec<FeatureDump> = read_jsonl(path)?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(dumps.len());
    for (i, d) in dumps.into_iter().enumerate() {
        let id = d.id.clone().ok_or_else(|| invalid(format!("{}:{}: record without id", path.display(), i + 1)))?;
        if seen.insert(id.clone(), ()).is_some() {
            return Err(invalid(format!("{}: duplicate id {id:?}", path.display())));
        }
        let f = d.to_features().map_err(|e| invalid(format!("{}: {id}: {e}", path.display())))?;
        out.push((id, f));
    }
    Ok(out)
}

fn eval_control(a: &EvalControlArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let gt = keyed_dumps(&a.gt)?;
    let mut pred: HashMap<String, FeatureSet> = keyed_dumps(&a.pred)?.into_iter().collect();
    let mut warnings = Vec::new();
    let samples: Vec<ControlSample> = gt
        .into_iter()
        .map(|(id, g)| {
            let p = pred.remove(&id).unwrap_or_else(|| {
                warnings.push(format!("{id}: no prediction, scored as missing"));
                FeatureSet::default()
            });
            ControlSample { gt: g, pred: p }
        })
        .collect();
    let mut extra: Vec<_> = pred.into_keys().collect();
    extra.sort();
    warnings.extend(extra.iter().map(|id| format!("{id}: prediction without ground truth, ignored")));
    let report = evaluate_dataset(&samples).map_err(|e| invalid(e.to_string()))?;
    let path = out_dir(ctx)?.join("control_report.json");
    write_json(&path, &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome {
        config: json!({ "gt": a.gt, "pred": a.pred }),
        counts: BTreeMap::from([("samples".into(), samples.len()), ("unmatched_predictions".into(), extra.len())]),
        warnings,
    })
}

#[derive(Debug, Args)]
pub struct EvalQualityArgs {
    /// Embeddings of generated audio (`.csv`, or `.json` sidecar with `.bin`).
    #[arg(long, requires = "ref_embeddings")]
    pub gen_embeddings: Option<PathBuf>,
    /// Embeddings of reference audio.
    #[arg(long, requires = "gen_embeddings")]
    pub ref_embeddings: Option<PathBuf>,
    /// Class probabilities of generated audio (`id,p0,…` CSV).
    #[arg(long, requires = "ref_probs")]
    pub gen_probs: Option<PathBuf>,
    /// Class probabilities of reference audio.
    #[arg(long, requires = "gen_probs")]
    pub ref_probs: Option<PathBuf>,
}

fn eval_quality(a: &EvalQualityArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let mut report = serde_json::Map::new();
    let mut counts = BTreeMap::new();
    if let (Some(g), Some(r)) = (&a.gen_embeddings, &a.ref_embeddings) {
        let (g, r) = (read_embeddings(g)?, read_embeddings(r)?);
        report.insert("frechet_distance".into(), json!(frechet_distance(&g, &r)?));
        report.insert("embedding_source".into(), json!([g.source_tag(), r.source_tag()]));
        counts.insert("generated_embeddings".into(), g.n());
        counts.insert("reference_embeddings".into(), r.n());
    }
    if let (Some(g), Some(r)) = (&a.gen_probs, &a.ref_probs) {
        let (g, r) = (read_probabilities(g)?, read_probabilities(r)?);
        report.insert("kl_divergence".into(), json!(kl_divergence(&g, &r)?));
        counts.insert("probability_rows".into(), g.ids().len());
    }
    if report.is_empty() {
        bail!(ValidationError("give --gen-embeddings/--ref-embeddings and/or --gen-probs/--ref-probs".into()));
    }
    write_json(&out_dir(ctx)?.join("quality_report.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome {
        config: json!({
            "gen_embeddings": a.gen_embeddings, "ref_embeddings": a.ref_embeddings,
            "gen_probs": a.gen_probs, "ref_probs": a.ref_probs,
        }),
        counts,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Args)]
pub struct DiffusionDemoArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    /// Classifier-free guidance weight.
    #[arg(long)]
    pub guidance: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Optimizer steps on synthetic latents before sampling.
    #[arg(long)]
    pub train_steps: Option<usize>,
}

const DEMO_SHAPE: (usize, usize) = (8, 16);
const DEMO_HIDDEN: usize = 64;

fn demo_conditions(seed: u64) -> anyhow::Result<ConditionBundle> {
    let mut rng = substream(seed, "conditions", 0);
    let mpe = SinusoidConfig::new(16, 10_000.0)?;
    let fme = SinusoidConfig::new(16, 10_000.0)?;
    let beats = BeatEncoder::random(&mut rng, mpe, DEFAULT_D_EMBED);
    let chords = ChordEncoder::random(&mut rng, fme, mpe, DEFAULT_D_EMBED);
    let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
    let grid = BeatGrid::cycling(4, 1, &times)?;
    let seq = ChordSequence::new(vec![
        ChordEvent::new(PitchClass::new(9)?, ChordType::Minor, 0.0),
        ChordEvent::new(PitchClass::new(4)?, ChordType::Major, 4.0),
    ])?;
    // stand-in for text-encoder output
    let text = gaussian_latent(&mut rng, (4, DEFAULT_D_EMBED));
    Ok(ConditionBundle {
        text: Some(text),
        beats: Some(beats.encode(&grid)?),
        chords: Some(chords.encode(&seq)?),
    })
}

fn latent_checksum(z: &tunecap::diffusion::Latent) -> String {
    let mut h = Sha256::new();
    for v in z.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn diffusion_demo(a: &DiffusionDemoArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let f = &ctx.file;
    let steps = pick(a.steps, &f.steps, DEFAULT_STEPS);
    let guidance = pick(a.guidance, &f.guidance, 3.0);
    let beta_min = pick(a.beta_min, &f.beta_min, DEFAULT_BETA_MIN);
    let beta_max = pick(a.beta_max, &f.beta_max, DEFAULT_BETA_MAX);
    let train_steps = pick(a.train_steps, &f.train_steps, 0);
    let sched = make_schedule(steps, beta_min, beta_max).map_err(|e| invalid(e.to_string()))?;

    let mut rng = substream(ctx.seed, "denoiser", 0);
    let mut model = ToyDenoiser::random(&mut rng, DEMO_SHAPE, DEFAULT_D_EMBED, DEMO_HIDDEN);
    let mut counts = BTreeMap::from([("steps".into(), steps)]);
    let mut config = json!({
        "steps": steps, "guidance": guidance, "beta_min": beta_min, "beta_max": beta_max,
        "train_steps": train_steps, "latent_shape": DEMO_SHAPE,
    });
    if train_steps > 0 {
        let trainer = ToyTrainer { steps: train_steps, ..ToyTrainer::default() };
        let mut rng = substream(ctx.seed, "training", 0);
        let data = ToyTrainer::synthetic_latents(&mut rng, 256, DEMO_SHAPE);
        let report = trainer.train(&mut model, &data, &sched, &mut rng)?;
        config["initial_loss"] = json!(report.initial_loss);
        config["final_loss"] = json!(report.final_loss);
        counts.insert("train_steps".into(), train_steps);
    }
    let bundle = demo_conditions(ctx.seed)?;
    let mut rng = substream(ctx.seed, "sampling", 0);
    let z_n = gaussian_latent(&mut rng, DEMO_SHAPE);
    let z0 = toy_denoise_loop(&model, &z_n, Some(&bundle), &sched, guidance, Some(&mut rng))?;
    if z0.iter().any(|v| !v.is_finite()) {
        bail!(tunecap::Error::Numerical("sampled latent is not finite".into()));
    }
    let checksum = latent_checksum(&z0);

    let dir = out_dir(ctx)?;
    model.to_checkpoint().save(&dir.join("denoiser.ckpt"))?;
    let latent = Checkpoint {
        meta: BTreeMap::from([("seed".to_string(), json!(ctx.seed))]),
        tensors: vec![NamedTensor {
            name: "z0".into(),
            shape: vec![DEMO_SHAPE.0, DEMO_SHAPE.1],
            data: z0.iter().copied().collect(),
        }],
    };
    latent.save(&dir.join("latent.ckpt"))?;
    let n = z0.len() as f64;
    let mean = z0.sum() / n;
    let std = (z0.mapv(|v| (v - mean).powi(2)).sum() / n).sqrt();
    write_json(
        &dir.join("demo.json"),
        &json!({ "checksum": checksum, "shape": DEMO_SHAPE, "mean": mean, "std": std }),
    )?;
    println!("{checksum}");
    config["checksum"] = json!(checksum);
    Ok(Outcome { config, counts, warnings: Vec::new() })
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// JSONL of {id, beats?, beat_intervals?, chords?} predictor outputs.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalPrediction {
    meter: u8,
    intervals: Vec<f64>,
}

/// One predictor output line. `beats` and `chords` are verbalized strings.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Prediction {
    id: String,
    beats: Option<String>,
    beat_intervals: Option<IntervalPrediction>,
    chords: Option<String>,
}

fn decode(a: &DecodeArgs, ctx: &Context) -> anyhow::Result<Outcome> {
    let preds: Vec<Prediction> = read_jsonl(&a.input)?;
    let mut warnings = Vec::new();
    let mut dumps = Vec::with_capacity(preds.len());
    for p in &preds {
        let mut f = FeatureSet::default();
        let beats = match (&p.beats, &p.beat_intervals) {
            (Some(text), _) => Some(
                parse_beats_verbalization(text).and_then(|(meter, times)| BeatGrid::cycling(meter, 1, &times)),
            ),
            (None, Some(iv)) => Some(decode_beat_prediction(iv.meter, &iv.intervals)),
            (None, None) => None,
        };
        match beats {
            Some(Ok(g)) => f.beats = Some(g),
            Some(Err(e)) => warnings.push(format!("{}: beats: {e}", p.id)),
            None => {}
        }
        if let Some(text) = &p.chords {
            match parse_chords_verbalization(text) {
                Ok(s) => f.chords = Some(s),
                Err(e) => warnings.push(format!("{}: chords: {e}", p.id)),
            }
        }
        dumps.push(FeatureDump::from_features(Some(p.id.clone()), &f));
    }
    write_jsonl(&out_dir(ctx)?.join("decoded.jsonl"), &dumps)?;
    Ok(Outcome {
        config: json!({ "in": a.input }),
        counts: BTreeMap::from([("records".into(), dumps.len()), ("failed_fields".into(), warnings.len())]),
        warnings,
    })
}

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{file_stem, substream, derive_seed, write_jsonl, ManifestRecord, Provenance, SourceRecord, Split};
use crate::audio::{read_wav, write_wav, AudioClip};
use crate::augment::{co_transform_features, plan_dataset_augmentations, Augmentation};
use crate::caption::{
    enrich_caption, is_low_quality, rephrase_external, volume_sentence, Caption, ControlTag,
    EnrichPolicy, Rephraser,
};
use crate::error::{Error, Result};
use crate::mir::{extract_features, FeatureDump, FeatureSet};

/// Augmented variants per high-quality training clip.
pub const AUGMENTED_VARIANTS: usize = 11;
/// Share of augmented records whose caption is the rephrased one.
pub const REPHRASED_PROBABILITY: f64 = 0.85;

const ENRICH_VARIANT: u32 = 0;
const PLAN_VARIANT: u32 = 1000;

/// How many sources go to the test splits. Low- and high-quality sources
/// are sampled separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestSelection {
    /// `round(fraction · class size)` from each class.
    Fraction(f64),
    /// Exactly this many from each class.
    PerClass(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub seed: u64,
    pub test: TestSelection,
    pub rephrase_probability: f64,
    pub audio_root: PathBuf,
    /// Augmented audio is rendered and written under `<out>/audio` only when
    /// an output directory is set.
    pub out_dir: Option<PathBuf>,
}

impl BuildConfig {
    pub fn new(seed: u64, audio_root: impl Into<PathBuf>) -> Self {
        Self {
            seed,
            test: TestSelection::Fraction(0.1),
            rephrase_probability: REPHRASED_PROBABILITY,
            audio_root: audio_root.into(),
            out_dir: None,
        }
    }
}

/// Record counts implied by the construction for `train` training sources,
/// `high_quality` of which are augmented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct MusicBenchCounts {
    pub train_a: usize,
    pub train_b: usize,
    pub train_c: usize,
    pub train_aug: usize,
    pub total: usize,
}

pub fn musicbench_counts(train: usize, high_quality: usize) -> MusicBenchCounts {
    let train_aug = AUGMENTED_VARIANTS * high_quality;
    MusicBenchCounts {
        train_a: train,
        train_b: train,
        train_c: train,
        train_aug,
        total: 3 * train + train_aug,
    }
}

/// Ids of the sources chosen for testing and of the rest, each in input
/// order.
pub fn make_test_splits(
    sources: &[SourceRecord],
    selection: TestSelection,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut seen = HashSet::new();
    if let Some(dup) = sources.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(Error::invalid(format!("duplicate source id {:?}", dup.id)));
    }
    let mut chosen = HashSet::new();
    for (class, low) in [("low", true), ("high", false)] {
        let mut ids: Vec<&str> = sources
            .iter()
            .filter(|s| is_low_quality(&Caption::from_text(&s.caption)) == low)
            .map(|s| s.id.as_str())
            .collect();
        ids.sort_unstable();
        let take = match selection {
            TestSelection::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::invalid(format!("test fraction {f} outside [0, 1)")));
                }
                (f * ids.len() as f64).round() as usize
            }
            TestSelection::PerClass(n) => {
                if ids.len() < n {
                    return Err(Error::invalid(format!(
                        "insufficient records: {} {class}-quality sources, {n} needed for testing",
                        ids.len()
                    )));
                }
                n
            }
        };
        ids.shuffle(&mut substream(seed, class, 0));
        chosen.extend(ids.into_iter().take(take).map(str::to_string));
    }
    let (test, train) = sources
        .iter()
        .map(|s| s.id.clone())
        .partition(|id| chosen.contains(id));
    Ok((test, train))
}

/// Every manifest record of a build, in split order then source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildOutput {
    pub records: Vec<ManifestRecord>,
    pub warnings: Vec<String>,
}

impl BuildOutput {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn train(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.split.is_train())
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = Split::ALL
            .iter()
            .map(|s| (s.file_stem().to_string(), self.count(*s)))
            .filter(|(_, n)| *n > 0)
            .collect();
        out.insert("train".into(), self.train().count());
        out
    }

    /// Writes `<dir>/<split>.jsonl` for each non-empty split plus the
    /// training union as `train.jsonl`.
    pub fn write_manifests(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for split in Split::ALL {
            let recs: Vec<&ManifestRecord> = self.split(split).collect();
            if recs.is_empty() {
                continue;
            }
            let path = dir.join(format!("{}.jsonl", split.file_stem()));
            write_jsonl(&path, &recs)?;
            paths.push(path);
        }
        let train: Vec<&ManifestRecord> = self.train().collect();
        if !train.is_empty() {
            let path = dir.join("train.jsonl");
            write_jsonl(&path, &train)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// A source with its audio, features and parsed caption.
struct Prepared<'a> {
    source: &'a SourceRecord,
    clip: AudioClip,
    features: FeatureSet,
    caption: Caption,
    low_quality: bool,
}

fn prepare<'a>(src: &'a SourceRecord, cfg: &BuildConfig) -> Result<(Prepared<'a>, Vec<String>)> {
    let clip = read_wav(cfg.audio_root.join(&src.audio_path))?.to_canonical()?;
    let (features, warnings) = match &src.features {
        Some(dump) => (dump.to_features()?, Vec::new()),
        None => {
            let (f, report) = extract_features(&clip)?;
            let w = report
                .warnings
                .into_iter()
                .map(|w| format!("{}: {w}", src.id))
                .collect();
            (f, w)
        }
    };
    let caption = Caption::from_text(&src.caption);
    let low_quality = is_low_quality(&caption);
    Ok((
        Prepared {
            source: src,
            clip,
            features,
            caption,
            low_quality,
        },
        warnings,
    ))
}

fn record(
    p: &Prepared,
    id: String,
    split: Split,
    caption: Caption,
    features: &FeatureSet,
    provenance: Provenance,
) -> ManifestRecord {
    ManifestRecord {
        id,
        audio_path: p.source.audio_path.clone(),
        split,
        text: caption.text(),
        caption,
        features: Some(FeatureDump::from_features(None, features)),
        low_quality: p.low_quality,
        rephrased: None,
        provenance,
    }
}

fn plain_provenance(p: &Prepared, seed: u64) -> Provenance {
    Provenance {
        source_id: p.source.id.clone(),
        augmentation: None,
        seed,
    }
}

/// Records for one source: TestA/TestB, or TrainA/B/C plus augmented
/// variants for high-quality sources.
fn build_source(
    p: &Prepared,
    is_test: bool,
    cfg: &BuildConfig,
    rephraser: &dyn Rephraser,
) -> Result<(Vec<ManifestRecord>, Vec<String>)> {
    let id = &p.source.id;
    let mut warnings = Vec::new();
    let enrich_seed = derive_seed(cfg.seed, id, ENRICH_VARIANT);
    let mut rng = substream(cfg.seed, id, ENRICH_VARIANT);
    let full = enrich_caption(&p.caption, &p.features, EnrichPolicy::AllFour, &mut rng);
    if full.len() - p.caption.len() < 4 {
        warnings.push(format!("{id}: only {} control sentences available", full.len() - p.caption.len()));
    }
    let base_prov = plain_provenance(p, enrich_seed);
    let (a_split, b_split) = if is_test {
        (Split::TestA, Split::TestB)
    } else {
        (Split::TrainA, Split::TrainB)
    };
    let mut out = vec![
        record(p, id.clone(), a_split, p.caption.clone(), &p.features, base_prov.clone()),
        record(p, format!("{id}#B"), b_split, full.clone(), &p.features, base_prov.clone()),
    ];
    if is_test {
        return Ok((out, warnings));
    }
    let rephrased = rephrase_external(&full, rephraser);
    warnings.extend(rephrased.warning.map(|w| format!("{id}: {w}")));
    out.push(record(p, format!("{id}#C"), Split::TrainC, rephrased.caption, &p.features, base_prov));

    if p.low_quality {
        return Ok((out, warnings));
    }
    let duration = p.clip.duration();
    let plan = plan_dataset_augmentations(&mut substream(cfg.seed, id, PLAN_VARIANT), duration);
    for (v, aug) in plan.iter().enumerate() {
        let variant = v as u32 + 1;
        let seed = derive_seed(cfg.seed, id, variant);
        let mut rng = substream(cfg.seed, id, variant);
        let features = co_transform_features(&p.features, aug, duration)?;
        check_co_transform(&p.features, &features, aug, 1e-9)?;
        let mut caption = enrich_caption(&p.caption, &features, EnrichPolicy::Sampled, &mut rng);
        if let Some(s) = volume_sentence(aug, duration, &mut rng) {
            caption.push(s.sentence, ControlTag::Volume);
        }
        let use_rephrased = rng.random_bool(cfg.rephrase_probability);
        if use_rephrased {
            let r = rephrase_external(&caption, rephraser);
            warnings.extend(r.warning.map(|w| format!("{id}: {w}")));
            caption = r.caption;
        }
        let rec_id = format!("{id}#aug{variant:02}");
        let audio_path = format!("audio/{}_aug{variant:02}.wav", file_stem(id));
        if let Some(out_dir) = &cfg.out_dir {
            let clip = aug.apply(&p.clip)?;
            let path = out_dir.join(&audio_path);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let report = write_wav(&clip, &path)?;
            if report.clipped_samples > 0 {
                warnings.push(format!("{rec_id}: {} samples clipped", report.clipped_samples));
            }
        }
        let mut rec = record(
            p,
            rec_id,
            Split::TrainAug,
            caption,
            &features,
            Provenance {
                source_id: id.clone(),
                augmentation: Some(*aug),
                seed,
            },
        );
        rec.audio_path = audio_path;
        rec.rephrased = Some(use_rephrased);
        out.push(rec);
    }
    Ok((out, warnings))
}

/// Build the test and training manifests. Sources that cannot be read or
/// analysed are skipped with a warning.
pub fn build_musicbench(
    sources: &[SourceRecord],
    cfg: &BuildConfig,
    rephraser: &dyn Rephraser,
) -> Result<BuildOutput> {
    if !(0.0..=1.0).contains(&cfg.rephrase_probability) {
        return Err(Error::invalid("rephrase probability outside [0, 1]"));
    }
    let (test_ids, _) = make_test_splits(sources, cfg.test, cfg.seed)?;
    let test: HashSet<&str> = test_ids.iter().map(String::as_str).collect();
    type SourceResult = std::result::Result<(Vec<ManifestRecord>, Vec<String>), String>;
    let per_source: Vec<SourceResult> = sources
        .par_iter()
        .map(|src| {
            let (p, mut warnings) = prepare(src, cfg).map_err(|e| format!("{}: skipped: {e}", src.id))?;
            let (recs, w) = build_source(&p, test.contains(src.id.as_str()), cfg, rephraser)
                .map_err(|e| format!("{}: skipped: {e}", src.id))?;
            warnings.extend(w);
            Ok((recs, warnings))
        })
        .collect();
    let mut out = BuildOutput::default();
    let mut all = Vec::new();
    for r in per_source {
        match r {
            Ok((recs, w)) => {
                all.extend(recs);
                out.warnings.extend(w);
            }
            Err(w) => {
                warn!("{w}");
                out.warnings.push(w);
            }
        }
    }
    // stable: source order within each split
    all.sort_by_key(|r| r.split);
    out.records = all;
    Ok(out)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Check `child` against `parent` carried through `aug`: key and chord
/// roots shift by k; tempo scales and beat/chord times shrink by the
/// stretch factor; a volume ramp changes nothing. `tol` is relative.
pub fn check_co_transform(
    parent: &FeatureSet,
    child: &FeatureSet,
    aug: &Augmentation,
    tol: f64,
) -> Result<()> {
    let fail = |what: &str| Err(Error::invalid(format!("co-transform check failed: {what}")));
    let (shift, factor) = match *aug {
        Augmentation::PitchShift { k } => (k, 1.0),
        Augmentation::TimeStretch { factor } => (0, factor),
        Augmentation::VolumeRamp { .. } => (0, 1.0),
    };
    if parent.key.map(|k| k.transpose(shift)) != child.key {
        return fail("key");
    }
    match (parent.bpm, child.bpm) {
        (Some(p), Some(c)) if close(p.bpm() * factor, c.bpm(), tol) => {}
        (None, None) => {}
        _ => return fail("tempo"),
    }
    match (&parent.beats, &child.beats) {
        (Some(p), Some(c)) => {
            if p.meter() != c.meter()
                || c.len() > p.len()
                || p.entries().iter().zip(c.entries()).any(|(a, b)| {
                    a.beat_type != b.beat_type || !close(a.time / factor, b.time, tol)
                })
            {
                return fail("beats");
            }
        }
        (None, None) => {}
        _ => return fail("beats"),
    }
    match (&parent.chords, &child.chords) {
        (Some(p), Some(c)) => {
            if c.len() > p.len()
                || p.entries().iter().zip(c.entries()).any(|(a, b)| {
                    a.root.transpose(shift) != b.root
                        || a.ctype != b.ctype
                        || a.inverted != b.inverted
                        || !close(a.time / factor, b.time, tol)
                })
            {
                return fail("chords");
            }
        }
        (None, None) => {}
        _ => return fail("chords"),
    }
    Ok(())
}

/// Post-build checks: unique ids, no test source in any training split, and
/// every augmented record consistent with its parent's stored features.
pub fn verify_build(out: &BuildOutput) -> Result<()> {
    let mut ids = HashSet::new();
    if let Some(dup) = out.records.iter().find(|r| !ids.insert(r.id.as_str())) {
        return Err(Error::invalid(format!("duplicate record id {:?}", dup.id)));
    }
    let test_sources: HashSet<&str> = out
        .records
        .iter()
        .filter(|r| matches!(r.split, Split::TestA | Split::TestB))
        .map(|r| r.provenance.source_id.as_str())
        .collect();
    if let Some(leak) = out
        .train()
        .find(|r| test_sources.contains(r.provenance.source_id.as_str()))
    {
        return Err(Error::invalid(format!(
            "test source {:?} leaks into {:?}",
            leak.provenance.source_id, leak.split
        )));
    }
    let parents: BTreeMap<&str, &ManifestRecord> = out
        .split(Split::TrainA)
        .map(|r| (r.provenance.source_id.as_str(), r))
        .collect();
    for rec in out.split(Split::TrainAug) {
        let aug = rec
            .provenance
            .augmentation
            .ok_or_else(|| Error::invalid(format!("{}: augmentation missing", rec.id)))?;
        let parent = parents
            .get(rec.provenance.source_id.as_str())
            .ok_or_else(|| Error::invalid(format!("{}: parent record missing", rec.id)))?;
        if parent.low_quality {
            return Err(Error::invalid(format!("{}: low-quality parent was augmented", rec.id)));
        }
        let features = |r: &ManifestRecord| {
            r.features
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("{}: features missing", r.id)))?
                .to_features()
        };
        // stored times are rounded to milliseconds
        check_co_transform(&features(parent)?, &features(rec)?, &aug, 2e-3)
            .map_err(|e| Error::invalid(format!("{}: {e}", rec.id)))?;
    }
    Ok(())
}

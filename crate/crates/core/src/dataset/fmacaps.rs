use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::Rng;
use rayon::prelude::*;

use super::{file_stem, derive_seed, substream, ManifestRecord, Provenance, Split};
use crate::audio::{read_wav, write_wav};
use crate::caption::{enrich_caption, is_low_quality, Caption, EnrichPolicy};
use crate::error::{Error, Result};
use crate::mir::{extract_features, FeatureDump};

pub const FRAGMENT_SECONDS: f64 = 10.0;

/// Tags per clip id, grouped by category, e.g.
/// `{"clip1": {"genre": ["rock"], "instrument": ["guitar"]}}`.
pub type TagFile = BTreeMap<String, BTreeMap<String, Vec<String>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct FmaCapsConfig {
    pub seed: u64,
    /// Directory of `.wav` files; the file stem is the clip id.
    pub audio_dir: PathBuf,
    /// Fragments are written to `<out>/audio`.
    pub out_dir: PathBuf,
}

fn join_words(words: &[String]) -> String {
    match words {
        [] => String::new(),
        [one] => one.clone(),
        [rest @ .., last] => format!("{} and {last}", rest.join(", ")),
    }
}

/// Pseudo-caption from tags, one sentence per category in name order.
pub fn tags_to_caption(tags: &BTreeMap<String, Vec<String>>) -> Caption {
    let mut caption = Caption::empty();
    for (category, words) in tags {
        let words: Vec<String> = words
            .iter()
            .map(|w| w.trim().to_string())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            continue;
        }
        let list = join_words(&words);
        let sentence = match category.as_str() {
            "genre" => format!("This is a {list} track."),
            "mood" | "mood/theme" => format!("The mood is {list}."),
            "instrument" | "instrumentation" => format!("It features {list}."),
            "voice" | "voice_gender" | "gender" => format!("The vocals are {list}."),
            other => format!("Its {other} tags are {list}."),
        };
        caption.push(sentence, crate::caption::ControlTag::None);
    }
    caption
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    Ok(files)
}

fn build_one(
    path: &Path,
    tags: &TagFile,
    expert: &BTreeMap<String, String>,
    cfg: &FmaCapsConfig,
) -> Result<(ManifestRecord, Vec<String>)> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("{}: unusable file name", path.display())))?
        .to_string();
    let caption = match (expert.get(&id), tags.get(&id)) {
        (Some(text), _) => Caption::from_text(text),
        (None, Some(t)) => tags_to_caption(t),
        (None, None) => return Err(Error::invalid(format!("{id}: no tags or expert caption"))),
    };
    if caption.is_empty() {
        return Err(Error::invalid(format!("{id}: tags produce an empty caption")));
    }
    let seed = derive_seed(cfg.seed, &id, 0);
    let mut rng = substream(cfg.seed, &id, 0);
    let clip = read_wav(path)?.to_canonical()?;
    let spare = (clip.duration() - FRAGMENT_SECONDS).max(0.0);
    let start = if spare > 0.0 { rng.random_range(0.0..=spare) } else { 0.0 };
    let fragment = clip.segment(start, FRAGMENT_SECONDS)?;
    let (features, report) = extract_features(&fragment)?;
    let caption = enrich_caption(&caption, &features, EnrichPolicy::Sampled, &mut rng);
    let audio_path = format!("audio/{}.wav", file_stem(&id));
    let out_path = cfg.out_dir.join(&audio_path);
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_wav(&fragment, &out_path)?;
    let warnings = report.warnings.into_iter().map(|w| format!("{id}: {w}")).collect();
    Ok((
        ManifestRecord {
            id: id.clone(),
            audio_path,
            split: Split::FMACaps,
            text: caption.text(),
            low_quality: is_low_quality(&caption),
            caption,
            features: Some(FeatureDump::from_features(None, &features)),
            rephrased: None,
            provenance: Provenance {
                source_id: id,
                augmentation: None,
                seed,
            },
        },
        warnings,
    ))
}

/// Cut a 10 s fragment from every clip, caption it from its expert caption
/// or tags, and append sampled control sentences. Clips without a caption
/// source are skipped with a warning.
pub fn build_fmacaps(
    tags: &TagFile,
    expert: &BTreeMap<String, String>,
    cfg: &FmaCapsConfig,
) -> Result<(Vec<ManifestRecord>, Vec<String>)> {
    let files = wav_files(&cfg.audio_dir)?;
    let results: Vec<_> = files
        .par_iter()
        .map(|p| build_one(p, tags, expert, cfg))
        .collect();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok((rec, w)) => {
                records.push(rec);
                warnings.extend(w);
            }
            Err(e) => {
                let msg = format!("{}: skipped: {e}", path.display());
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Ok((records, warnings))
}

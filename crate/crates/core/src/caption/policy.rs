use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index::sample;
use rand::Rng;

use super::templates::{render_one, CONTROL_ORDER};
use super::{Caption, ControlTag};
use crate::mir::FeatureSet;

/// Percent weights for appending 0, 1, 2, 3 or 4 control sentences.
pub const CONTROL_COUNT_WEIGHTS: [u32; 5] = [25, 30, 20, 15, 10];
pub const DROP_ALL_PROBABILITY: f64 = 0.05;
pub const DROP_EACH_PROBABILITY: f64 = 0.05;

/// How many control sentences to append to a caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnrichPolicy {
    /// One sentence for every available feature.
    AllFour,
    /// A weighted random count of randomly chosen features.
    Sampled,
}

/// Draw a control-sentence count from [`CONTROL_COUNT_WEIGHTS`].
pub fn sample_control_count<R: Rng + ?Sized>(rng: &mut R) -> usize {
    WeightedIndex::new(CONTROL_COUNT_WEIGHTS)
        .expect("weights are positive")
        .sample(rng)
}

/// Append tagged control sentences to `caption`. Appended sentences always
/// follow the chords, beat, tempo, key order.
pub fn enrich_caption<R: Rng + ?Sized>(
    caption: &Caption,
    features: &FeatureSet,
    policy: EnrichPolicy,
    rng: &mut R,
) -> Caption {
    let available: Vec<ControlTag> = CONTROL_ORDER
        .iter()
        .copied()
        .filter(|&t| has_feature(features, t))
        .collect();
    let chosen: Vec<ControlTag> = match policy {
        EnrichPolicy::AllFour => available,
        EnrichPolicy::Sampled => {
            let count = sample_control_count(rng).min(available.len());
            let mut picked = sample(rng, available.len(), count).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| available[i]).collect()
        }
    };
    let mut out = caption.clone();
    for tag in chosen {
        if let Some(c) = render_one(features, tag, rng) {
            out.push(c.sentence, c.tag);
        }
    }
    out
}

fn has_feature(f: &FeatureSet, tag: ControlTag) -> bool {
    match tag {
        ControlTag::Chords => f.chords.as_ref().is_some_and(|c| !c.is_empty()),
        ControlTag::Beat => f.beats.is_some(),
        ControlTag::Tempo => f.bpm.is_some(),
        ControlTag::Key => f.key.is_some(),
        ControlTag::Volume | ControlTag::None => false,
    }
}

/// Probability of masking part of a caption with `n` sentences when the
/// corpus mean is `mean_sentences`: min(1, 0.1·n/mean).
pub fn mask_probability(n: usize, mean_sentences: f64) -> f64 {
    if mean_sentences <= 0.0 {
        return 1.0;
    }
    (0.1 * n as f64 / mean_sentences).min(1.0)
}

/// Result of [`training_dropout`] plus which rules fired.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutOutcome {
    pub caption: Caption,
    pub features: FeatureSet,
    pub dropped_all: bool,
    pub dropped_text: bool,
    pub dropped_beats: bool,
    pub dropped_chords: bool,
    /// Number of sentences removed by masking.
    pub masked: usize,
}

/// Rule probabilities for [`training_dropout`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutConfig {
    pub drop_all: f64,
    pub drop_each: f64,
    /// Corpus mean sentence count per caption; must be positive.
    pub mean_sentences: f64,
}

impl DropoutConfig {
    pub fn new(mean_sentences: f64) -> Self {
        Self {
            drop_all: DROP_ALL_PROBABILITY,
            drop_each: DROP_EACH_PROBABILITY,
            mean_sentences,
        }
    }
}

/// Conditioning dropout for training. Rules run in order:
/// 1. drop text, beats and chords together;
/// 2. drop each of text, beats and chords independently;
/// 3. mask a caption of N sentences with probability `mask_probability`,
///    removing round-half-up(N·X/100) sentences for X uniform in 20..=50.
///
/// A feature dropped by rule 2 also loses its tagged sentences.
pub fn training_dropout<R: Rng + ?Sized>(
    caption: &Caption,
    features: &FeatureSet,
    config: &DropoutConfig,
    rng: &mut R,
) -> DropoutOutcome {
    let mut out = DropoutOutcome {
        caption: caption.clone(),
        features: features.clone(),
        dropped_all: false,
        dropped_text: false,
        dropped_beats: false,
        dropped_chords: false,
        masked: 0,
    };
    if rng.random_bool(config.drop_all) {
        out.caption = Caption::empty();
        out.features.beats = None;
        out.features.chords = None;
        out.dropped_all = true;
        out.dropped_text = true;
        out.dropped_beats = true;
        out.dropped_chords = true;
        return out;
    }
    out.dropped_text = rng.random_bool(config.drop_each);
    out.dropped_beats = rng.random_bool(config.drop_each);
    out.dropped_chords = rng.random_bool(config.drop_each);
    if out.dropped_text {
        out.caption = Caption::empty();
    }
    if out.dropped_beats {
        out.features.beats = None;
        out.caption = out.caption.without_tag(ControlTag::Beat);
    }
    if out.dropped_chords {
        out.features.chords = None;
        out.caption = out.caption.without_tag(ControlTag::Chords);
    }

    let n = out.caption.len();
    if n > 0 && rng.random_bool(mask_probability(n, config.mean_sentences)) {
        let x: u32 = rng.random_range(20..=50);
        let remove = masked_count(n, x);
        let idx = sample(rng, n, remove).into_vec();
        out.caption = out.caption.without_indices(&idx);
        out.masked = remove;
    }
    out
}

/// round-half-up(n·x/100) in integer arithmetic.
fn masked_count(n: usize, x: u32) -> usize {
    (n * x as usize * 2 + 100) / 200
}

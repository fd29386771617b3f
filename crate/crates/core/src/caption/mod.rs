//! Captions, control sentences, sampling policies and the predictor text
//! formats.

mod policy;
mod rephrase;
mod tempo;
mod templates;
mod verbalize;

pub use policy::{
    enrich_caption, mask_probability, sample_control_count, training_dropout, DropoutConfig,
    DropoutOutcome,
    EnrichPolicy, CONTROL_COUNT_WEIGHTS, DROP_ALL_PROBABILITY, DROP_EACH_PROBABILITY,
};
pub use rephrase::{
    rephrase_external, rephrase_prompt, HttpRephraser, IdentityRephraser, RephraseOutcome,
    Rephraser, REPHRASE_TIMEOUT_SECS,
};
pub use tempo::{tempo_to_marking, TempoMarking};
pub use templates::{
    render_control_sentences, volume_sentence, ControlTemplates, TemplateChoice,
};
pub use verbalize::{
    decode_beat_prediction, parse_beats_verbalization, parse_chords_verbalization,
    verbalize_beats, verbalize_chords, PREDICTION_HORIZON_SECONDS,
};

use serde::{Deserialize, Serialize};

/// Which music feature a caption sentence carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlTag {
    Tempo,
    Key,
    Chords,
    Beat,
    Volume,
    None,
}

/// A caption as an ordered list of sentences, each optionally tagged with
/// the feature it describes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Caption {
    sentences: Vec<String>,
    control_tags: Vec<ControlTag>,
}

impl Caption {
    /// Split free text into sentences at `.`, `!` or `?` followed by
    /// whitespace. All sentences are untagged.
    pub fn from_text(text: &str) -> Self {
        let mut sentences = Vec::new();
        let mut current = String::new();
        let mut chars = text.trim().chars().peekable();
        while let Some(c) = chars.next() {
            current.push(c);
            if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
                let s = current.trim();
                if !s.is_empty() {
                    sentences.push(s.to_string());
                }
                current.clear();
            }
        }
        let s = current.trim();
        if !s.is_empty() {
            sentences.push(s.to_string());
        }
        let control_tags = vec![ControlTag::None; sentences.len()];
        Self {
            sentences,
            control_tags,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sentence: impl Into<String>, tag: ControlTag) {
        self.sentences.push(sentence.into());
        self.control_tags.push(tag);
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn control_tags(&self) -> &[ControlTag] {
        &self.control_tags
    }

    pub fn tagged(&self) -> impl Iterator<Item = (&str, ControlTag)> {
        self.sentences
            .iter()
            .map(String::as_str)
            .zip(self.control_tags.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }

    /// Drop every sentence carrying `tag`.
    pub fn without_tag(&self, tag: ControlTag) -> Self {
        let (sentences, control_tags) = self
            .tagged()
            .filter(|(_, t)| *t != tag)
            .map(|(s, t)| (s.to_string(), t))
            .unzip();
        Self {
            sentences,
            control_tags,
        }
    }

    /// Keep the sentences whose index is not in `remove`.
    pub(crate) fn without_indices(&self, remove: &[usize]) -> Self {
        let (sentences, control_tags) = self
            .tagged()
            .enumerate()
            .filter(|(i, _)| !remove.contains(i))
            .map(|(_, (s, t))| (s.to_string(), t))
            .unzip();
        Self {
            sentences,
            control_tags,
        }
    }

    /// Rebuild from parts; tags must align with sentences.
    pub fn from_parts(sentences: Vec<String>, control_tags: Vec<ControlTag>) -> Option<Self> {
        (sentences.len() == control_tags.len()).then_some(Self {
            sentences,
            control_tags,
        })
    }
}

/// True when any sentence mentions "quality" or "low fidelity", ignoring case.
pub fn is_low_quality(caption: &Caption) -> bool {
    caption.sentences().iter().any(|s| {
        let lower = s.to_lowercase();
        lower.contains("quality") || lower.contains("low fidelity")
    })
}

use std::sync::OnceLock;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Deserialize;

use super::{tempo_to_marking, ControlTag};
use crate::augment::{Augmentation, RampDirection};
use crate::mir::FeatureSet;

const TEMPLATE_DATA: &str = include_str!("../../data/control_templates.json");

/// The shipped control-sentence template table.
#[derive(Debug, Clone, Deserialize)]
pub struct ControlTemplates {
    pub version: u32,
    pub tempo_bpm: Vec<String>,
    pub tempo_word: Vec<String>,
    pub beat: Vec<String>,
    pub chords: Vec<String>,
    pub key: Vec<String>,
    pub volume: Vec<String>,
}

impl ControlTemplates {
    pub fn builtin() -> &'static ControlTemplates {
        static TABLE: OnceLock<ControlTemplates> = OnceLock::new();
        TABLE.get_or_init(|| {
            serde_json::from_str(TEMPLATE_DATA).expect("bundled template table is valid JSON")
        })
    }

    pub fn raw_json() -> &'static str {
        TEMPLATE_DATA
    }

    /// All templates for a tag, tempo numbers first then tempo words.
    pub fn for_tag(&self, tag: ControlTag) -> Vec<&str> {
        let lists: Vec<&Vec<String>> = match tag {
            ControlTag::Tempo => vec![&self.tempo_bpm, &self.tempo_word],
            ControlTag::Key => vec![&self.key],
            ControlTag::Chords => vec![&self.chords],
            ControlTag::Beat => vec![&self.beat],
            ControlTag::Volume => vec![&self.volume],
            ControlTag::None => vec![],
        };
        lists.into_iter().flatten().map(String::as_str).collect()
    }
}

/// A rendered sentence and the template it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateChoice {
    pub sentence: String,
    pub tag: ControlTag,
    pub template: String,
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    let mut chars = out.chars();
    match chars.next() {
        Some(first) if first.is_lowercase() => first.to_uppercase().chain(chars).collect(),
        _ => out,
    }
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, list: &[&'a str]) -> &'a str {
    list.choose(rng).expect("template list is never empty")
}

pub(crate) fn render_one<R: Rng + ?Sized>(
    features: &FeatureSet,
    tag: ControlTag,
    rng: &mut R,
) -> Option<TemplateChoice> {
    let table = ControlTemplates::builtin();
    let templates = table.for_tag(tag);
    let (template, sentence) = match tag {
        ControlTag::Chords => {
            let chords = features.chords.as_ref().filter(|c| !c.is_empty())?;
            let s = chords.names(features.spelling()).join(", ");
            let t = pick(rng, &templates);
            (t, fill(t, &[("s", &s)]))
        }
        ControlTag::Beat => {
            let b = features.meter()?.to_string();
            let t = pick(rng, &templates);
            (t, fill(t, &[("b", &b)]))
        }
        ControlTag::Tempo => {
            let bpm = features.bpm?.bpm();
            let t = pick(rng, &templates);
            let i = format!("{}", bpm.round() as i64);
            let w = tempo_to_marking(bpm).name();
            (t, fill(t, &[("i", &i), ("w", w)]))
        }
        ControlTag::Key => {
            let key = features.key?;
            let t = pick(rng, &templates);
            (
                t,
                fill(t, &[("rootnote", key.root_name()), ("m", key.mode.as_str())]),
            )
        }
        ControlTag::Volume | ControlTag::None => return None,
    };
    Some(TemplateChoice {
        sentence,
        tag,
        template: template.to_string(),
    })
}

/// Order in which control sentences are appended to a caption.
pub(crate) const CONTROL_ORDER: [ControlTag; 4] = [
    ControlTag::Chords,
    ControlTag::Beat,
    ControlTag::Tempo,
    ControlTag::Key,
];

/// One sentence per available feature, in chords/beat/tempo/key order, each
/// from a uniformly chosen template.
pub fn render_control_sentences<R: Rng + ?Sized>(
    features: &FeatureSet,
    rng: &mut R,
) -> Vec<TemplateChoice> {
    CONTROL_ORDER
        .iter()
        .filter_map(|&tag| render_one(features, tag, rng))
        .collect()
}

/// Describe a volume ramp. Templates are restricted to those whose wording
/// fits the ramp direction and pivot.
pub fn volume_sentence<R: Rng + ?Sized>(
    aug: &Augmentation,
    duration: f64,
    rng: &mut R,
) -> Option<TemplateChoice> {
    let Augmentation::VolumeRamp {
        direction,
        pivot_seconds,
        ..
    } = *aug
    else {
        return None;
    };
    let table = ControlTemplates::builtin();
    let v = &table.volume;
    let mut fitting: Vec<&str> = match direction {
        RampDirection::Crescendo => vec![&v[0], &v[1], &v[2]],
        RampDirection::Decrescendo => vec![&v[2], &v[3], &v[4]],
    };
    let midway = (pivot_seconds / duration - 0.5).abs() <= 0.1;
    if direction == RampDirection::Decrescendo && midway {
        fitting.push(&v[5]);
    }
    let w = direction.as_str();
    let u = match direction {
        RampDirection::Crescendo => "increase",
        RampDirection::Decrescendo => "decrease",
    };
    let f = format!("{pivot_seconds:.2}");
    let t = pick(rng, &fitting);
    Some(TemplateChoice {
        sentence: fill(t, &[("w", w), ("u", u), ("f", &f)]),
        tag: ControlTag::Volume,
        template: t.to_string(),
    })
}

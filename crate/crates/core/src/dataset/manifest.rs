use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::augment::Augmentation;
use crate::caption::Caption;
use crate::error::{Error, Result};
use crate::mir::FeatureDump;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    TrainA,
    TrainB,
    TrainC,
    TrainAug,
    TestA,
    TestB,
    FMACaps,
}

impl Split {
    pub const ALL: [Split; 7] = [
        Split::TrainA,
        Split::TrainB,
        Split::TrainC,
        Split::TrainAug,
        Split::TestA,
        Split::TestB,
        Split::FMACaps,
    ];

    pub fn is_train(self) -> bool {
        matches!(self, Split::TrainA | Split::TrainB | Split::TrainC | Split::TrainAug)
    }

    /// Manifest file stem, e.g. `train_aug`.
    pub fn file_stem(self) -> &'static str {
        match self {
            Split::TrainA => "train_a",
            Split::TrainB => "train_b",
            Split::TrainC => "train_c",
            Split::TrainAug => "train_aug",
            Split::TestA => "test_a",
            Split::TestB => "test_b",
            Split::FMACaps => "fmacaps",
        }
    }
}

/// One input clip with its human caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub id: String,
    /// Relative to the audio root.
    pub audio_path: String,
    pub caption: String,
    /// Pre-extracted features; extracted from audio when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureDump>,
}

/// Where a record came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<Augmentation>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub audio_path: String,
    pub split: Split,
    pub text: String,
    pub caption: Caption,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureDump>,
    pub low_quality: bool,
    /// Set on records that went through the rephrasing mix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rephrased: Option<bool>,
    pub provenance: Provenance,
}

/// One JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Blank lines are skipped; a bad line is reported with its number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let recs = vec![
            SourceRecord { id: "a".into(), audio_path: "a.wav".into(), caption: "Piano.".into(), features: None },
            SourceRecord { id: "b".into(), audio_path: "b.wav".into(), caption: "Drums.".into(), features: None },
        ];
        write_jsonl(&path, &recs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), r#"{"id":"a","audio_path":"a.wav","caption":"Piano."}"#);
        assert_eq!(read_jsonl::<SourceRecord>(&path).unwrap(), recs);
        fs::write(&path, "{\"id\":\"a\"}\n").unwrap();
        let err = read_jsonl::<SourceRecord>(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        assert!(read_jsonl::<SourceRecord>(&dir.path().join("none")).unwrap_err().is_io());
    }

    #[test]
    fn split_names() {
        assert_eq!(serde_json::to_string(&Split::TrainAug).unwrap(), "\"TrainAug\"");
        assert!(Split::TrainC.is_train() && !Split::TestB.is_train() && !Split::FMACaps.is_train());
    }
}

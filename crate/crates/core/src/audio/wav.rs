use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

/// What `write_wav` had to do to fit the clip into 16-bit PCM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WavWriteReport {
    pub clipped_samples: usize,
}

const PCM16_SCALE: f64 = 32767.0;

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e)
            if matches!(
                e.kind(),
                ErrorKind::UnexpectedEof | ErrorKind::InvalidData | ErrorKind::Other
            ) =>
        {
            Error::MalformedWav(format!("{}: truncated or corrupt data ({e})", path.display()))
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::FormatError(m) => Error::MalformedWav(format!("{}: {m}", path.display())),
        hound::Error::Unsupported => {
            Error::UnsupportedWav(format!("{}: unsupported format", path.display()))
        }
        other => Error::MalformedWav(format!("{}: {other}", path.display())),
    }
}

/// Read a PCM16 or float32 WAV file, averaging stereo down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedWav(format!(
            "{} channels (only mono and stereo are read)",
            spec.channels
        )));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| (v as f64 / PCM16_SCALE).max(-1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedWav(format!("{fmt:?} {bits}-bit")));
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::MalformedWav(format!(
            "{}: sample count not a multiple of channel count",
            path.display()
        )));
    }

    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.is_empty() {
        return Err(Error::EmptyAudio);
    }
    AudioClip::new(mono, spec.sample_rate)
}

/// Write a clip as 16-bit mono PCM. Samples outside [-1, 1] saturate.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<WavWriteReport> {
    let path = path.as_ref();
    if clip.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    let mut report = WavWriteReport::default();
    for &s in clip.samples() {
        if s.abs() > 1.0 {
            report.clipped_samples += 1;
        }
        let v = (s.clamp(-1.0, 1.0) * PCM16_SCALE).round() as i16;
        writer.write_sample(v).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))?;
    if report.clipped_samples > 0 {
        log::warn!(
            "{}: {} samples clipped to [-1, 1]",
            path.display(),
            report.clipped_samples
        );
    }
    Ok(report)
}

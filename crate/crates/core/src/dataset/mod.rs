//! Dataset assembly: train/test splits, augmented variants with
//! co-transformed features and captions, pseudo-captioned evaluation sets,
//! and JSON Lines manifests.

mod fmacaps;
mod manifest;
mod musicbench;

pub use fmacaps::{build_fmacaps, tags_to_caption, FmaCapsConfig, TagFile, FRAGMENT_SECONDS};
pub use manifest::{read_jsonl, write_jsonl, ManifestRecord, Provenance, SourceRecord, Split};
pub use musicbench::{
    build_musicbench, check_co_transform, make_test_splits, musicbench_counts, verify_build,
    BuildConfig, BuildOutput, MusicBenchCounts, TestSelection, AUGMENTED_VARIANTS,
    REPHRASED_PROBABILITY,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seed for the RNG substream of `(seed, id, variant)`.
pub fn derive_seed(seed: u64, id: &str, variant: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((id.len() as u64).to_le_bytes());
    h.update(id.as_bytes());
    h.update(variant.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn substream(seed: u64, id: &str, variant: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, id, variant))
}

/// File-name-safe form of a record id.
pub(crate) fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

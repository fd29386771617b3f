//! Controllability metrics between target and extracted features, and
//! distribution distances over precomputed embeddings.

mod control;
mod io;
mod quality;

pub use control::{
    bm, ck, ckd, cmo, cmot, ecm, evaluate_dataset, pcm, tb, tbt, ControlSample, Metric,
    MetricReport, MetricSummary,
};
pub use io::{
    read_embeddings, read_probabilities, write_embeddings_bin, write_embeddings_csv,
    write_probabilities,
};
pub use quality::{frechet_distance, kl_divergence, EmbeddingSet, ProbabilitySet, KL_FLOOR};

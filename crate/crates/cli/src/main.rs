use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod commands;
mod config;

use config::{pick, FileConfig, DEFAULT_OUT, DEFAULT_SEED};

/// Input or flag problem; maps to exit code 1.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Parser)]
#[command(name = "tunecap", version, about = "Music feature extraction, caption enrichment, dataset assembly and controllability evaluation")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with default option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract beats, chords, key and tempo from WAV files.
    Extract(commands::ExtractArgs),
    /// Apply one augmentation to a WAV file and co-transform its features.
    Augment(commands::AugmentArgs),
    /// Append control sentences to captions.
    Enrich(commands::EnrichArgs),
    /// Assemble train/test manifests with augmented variants.
    BuildMusicbench(commands::BuildMusicbenchArgs),
    /// Cut 10 s fragments and pseudo-caption them from tags.
    BuildFmacaps(commands::BuildFmacapsArgs),
    /// Controllability metrics between ground-truth and predicted features.
    EvalControl(commands::EvalControlArgs),
    /// Fréchet distance and KL divergence from precomputed model outputs.
    EvalQuality(commands::EvalQualityArgs),
    /// Sample a latent with the toy denoiser and report its checksum.
    DiffusionDemo(commands::DiffusionDemoArgs),
    /// Decode verbalized beat and chord predictions into feature dumps.
    DecodePredictions(commands::DecodeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Augment(_) => "augment",
            Command::Enrich(_) => "enrich",
            Command::BuildMusicbench(_) => "build-musicbench",
            Command::BuildFmacaps(_) => "build-fmacaps",
            Command::EvalControl(_) => "eval-control",
            Command::EvalQuality(_) => "eval-quality",
            Command::DiffusionDemo(_) => "diffusion-demo",
            Command::DecodePredictions(_) => "decode-predictions",
        }
    }
}

/// Resolved options shared by every subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub log_level: String,
    #[serde(skip)]
    pub file: FileConfig,
}

/// What a subcommand reports back for the run summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub config: serde_json::Value,
    pub counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    subcommand: &'a str,
    status: &'a str,
    config: serde_json::Value,
    wall_time_s: f64,
    counts: BTreeMap<String, usize>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<tunecap::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
    }
    1
}

/// Error chain joined by ": ", skipping causes already quoted by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn resolve(global: GlobalArgs) -> anyhow::Result<Context> {
    let file = match &global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = pick(global.jobs, &file.jobs, 0);
    let jobs = if jobs == 0 { rayon::current_num_threads() } else { jobs };
    Ok(Context {
        out: pick(global.out, &file.out, PathBuf::from(DEFAULT_OUT)),
        seed: pick(global.seed, &file.seed, DEFAULT_SEED),
        jobs,
        log_level: pick(global.log_level, &file.log_level, "warn".to_string()),
        file,
    })
}

fn write_summary(ctx: &Context, summary: &RunSummary) -> anyhow::Result<()> {
    std::fs::create_dir_all(&ctx.out)?;
    let path = ctx.out.join("run_summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let name = cli.command.name();
    let ctx = match resolve(cli.global) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            return ExitCode::from(exit_code(&e));
        }
    };
    env_logger::Builder::new()
        .parse_filters(&ctx.log_level)
        .format_timestamp(None)
        .init();
    if ctx.file.seed.is_none() && std::env::args().all(|a| a != "--seed" && !a.starts_with("--seed=")) {
        eprintln!("seed: {} (default)", ctx.seed);
    }

    let start = Instant::now();
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(anyhow::Error::from)
        .and_then(|pool| pool.install(|| commands::run(&cli.command, &ctx)));
    let wall_time_s = start.elapsed().as_secs_f64();
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e)),
    };
    let mut config = serde_json::to_value(&ctx).unwrap_or_default();
    if let (Some(map), serde_json::Value::Object(extra)) = (config.as_object_mut(), outcome.config) {
        map.extend(extra);
    }
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let summary = RunSummary {
        subcommand: name,
        status: if error.is_some() { "error" } else { "ok" },
        config,
        wall_time_s,
        counts: outcome.counts,
        warnings: outcome.warnings,
        error: error.as_ref().map(render),
    };
    let written = write_summary(&ctx, &summary);
    match (error, written) {
        (Some(e), _) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
        (None, Err(e)) => {
            eprintln!("error: writing run summary: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
        (None, Ok(())) => ExitCode::SUCCESS,
    }
}

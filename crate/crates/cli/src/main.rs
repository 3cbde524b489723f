//! `grab`: operator entry points for the moment retrieval engine.
//!
//! Exit status is 0 on success, 1 when an `eval` scenario misses its bar,
//! and 2 on any error.

mod eval;
mod retrieval;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use grab_core::index::IndexMode;
use grab_core::ingest::{ingest_manifest, DedupConfig, IngestOptions, DEFAULT_FALLBACK_SHOT_LEN};
use grab_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "grab", version, about = "Video moment retrieval: ingest, search, rerank, temporal search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select and dedup keyframes, then write or update the corpus.
    Ingest {
        /// Ingest manifest (output_dir plus per-video inputs).
        #[arg(long)]
        manifest: PathBuf,
        /// Near-duplicate similarity threshold in (0, 1].
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        /// Shot length in frames for videos without a shot file.
        #[arg(long, default_value_t = DEFAULT_FALLBACK_SHOT_LEN)]
        fallback_shot_len: u64,
        #[arg(long)]
        json: bool,
    },
    /// Build the search index and save it beside the corpus manifest.
    BuildIndex {
        #[arg(long, env = "GRAB_MANIFEST")]
        corpus: PathBuf,
        /// exact | approx. Default: exact below 1,000,000 keyframes.
        #[arg(long)]
        mode: Option<IndexMode>,
        /// Defaults to the corpus manifest path with a `.grabidx` extension.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Top keyframes for a query embedding.
    Search(retrieval::SearchArgs),
    /// Moment boundaries around a pivot frame.
    Temporal(retrieval::TemporalArgs),
    /// Run the HTTP service. Flags override the GRAB_* environment variables.
    Serve {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        index_mode: Option<String>,
        #[arg(long)]
        provider_url: Option<String>,
        #[arg(long)]
        annotation_log: Option<PathBuf>,
    },
    /// Seeded synthetic scenarios with pass/fail bars.
    Eval {
        #[command(subcommand)]
        scenario: eval::Scenario,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest { manifest, tau, fallback_shot_len, json } => {
            let opts = IngestOptions { dedup: DedupConfig::new(tau)?, fallback_shot_len };
            let summary = ingest_manifest(&manifest, &opts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                for v in &summary.videos {
                    println!(
                        "{}: {} shots, {} of {} candidate keyframes kept{}",
                        v.video_id,
                        v.shots,
                        v.retained,
                        v.candidates,
                        if v.replaced { " (replaced)" } else { "" }
                    );
                }
                println!(
                    "corpus {}: {} videos, {} keyframes",
                    summary.corpus_manifest.display(),
                    summary.total_videos,
                    summary.total_keyframes
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildIndex { corpus, mode, output, json } => retrieval::build_index(&corpus, mode, output, json),
        Command::Search(args) => retrieval::search(args),
        Command::Temporal(args) => retrieval::temporal(args),
        Command::Serve { manifest, listen, index_mode, provider_url, annotation_log } => {
            let flags = [
                ("GRAB_MANIFEST", manifest.map(|p| p.display().to_string())),
                ("GRAB_LISTEN_ADDR", listen),
                ("GRAB_INDEX_MODE", index_mode),
                ("GRAB_EMBED_PROVIDER_URL", provider_url),
                ("GRAB_ANNOTATION_LOG", annotation_log.map(|p| p.display().to_string())),
            ];
            let config = ServiceConfig::from_lookup(|key| {
                flags
                    .iter()
                    .find(|(k, _)| *k == key)
                    .and_then(|(_, v)| v.clone())
                    .or_else(|| std::env::var(key).ok())
            })?;
            let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
            runtime.block_on(grab_service::serve(config))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { scenario } => eval::run(scenario),
    }
}

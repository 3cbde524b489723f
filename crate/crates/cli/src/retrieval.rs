use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use grab_core::index::{build_index as build, default_index_path, search_top_m, IndexMode};
use grab_core::rerank::{rerank, RerankParams};
use grab_core::store::{read_f32le_file, Store};
use grab_core::temporal::{temporal_search, AbtsParams, PivotRef};
use grab_service::Corpus;
use serde_json::json;

/// Reads an embedding given inline as a JSON array, from a `.json` file, or
/// from a raw little-endian f32 file.
pub fn load_embedding(arg: &str) -> Result<Vec<f32>> {
    if arg.trim_start().starts_with('[') {
        return serde_json::from_str(arg).context("parsing inline embedding");
    }
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(read_f32le_file(path)?)
}

pub fn build_index(corpus: &Path, mode: Option<IndexMode>, output: Option<PathBuf>, json: bool) -> Result<ExitCode> {
    let store = Store::open(corpus)?;
    if store.is_empty() {
        bail!("corpus {} has no keyframes", corpus.display());
    }
    let mode = mode.unwrap_or(IndexMode::default_for(store.len()));
    let started = Instant::now();
    let index = build(&store, mode)?;
    let build_ms = started.elapsed().as_millis();
    let path = output.unwrap_or_else(|| default_index_path(corpus));
    index.save(&path)?;
    if json {
        let out = json!({"index": path, "mode": mode, "rows": index.len(), "dim": index.dim(), "build_ms": build_ms});
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!(
            "{:?} index over {} keyframes × {} dims written to {} ({build_ms} ms)",
            mode,
            index.len(),
            index.dim(),
            path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SearchArgs {
    #[arg(long, env = "GRAB_MANIFEST")]
    corpus: PathBuf,
    /// JSON array, `.json` file or raw f32le file.
    #[arg(long)]
    query_embedding: String,
    #[arg(long, default_value_t = 20)]
    top: usize,
    /// Rerank the first-stage candidates with refined descriptors and query expansion.
    #[arg(long)]
    rerank: bool,
    /// First-stage candidates handed to the reranker.
    #[arg(long, default_value_t = 100)]
    top_m: usize,
    #[arg(long)]
    refine_k: Option<usize>,
    #[arg(long)]
    expand_m: Option<usize>,
    /// Index mode when no saved index fits; the saved one is reused otherwise.
    #[arg(long)]
    mode: Option<IndexMode>,
    #[arg(long)]
    json: bool,
}

pub fn search(args: SearchArgs) -> Result<ExitCode> {
    if args.top == 0 {
        bail!("--top must be at least 1");
    }
    let query = load_embedding(&args.query_embedding)?;
    let corpus = Corpus::load(&args.corpus, args.mode)?;
    let Some(index) = &corpus.index else {
        bail!("corpus {} has no keyframes", args.corpus.display());
    };
    let store = &corpus.store;
    let mut rows = Vec::new();
    if args.rerank {
        let d = RerankParams::default();
        let params = RerankParams {
            refine_k: args.refine_k.unwrap_or(d.refine_k),
            expand_m: args.expand_m.unwrap_or(d.expand_m),
            ..d
        };
        let hits = search_top_m(index, store, &query, args.top_m.max(args.top))?;
        for h in rerank(&query, &hits, store, &params)?.into_iter().take(args.top) {
            rows.push(json!({
                "rank": h.rank, "video_id": h.video_id, "frame_index": h.frame_index,
                "timestamp_s": store.row_meta(h.row).timestamp_s, "score": h.score,
                "initial_rank": h.initial_rank, "s1": h.s1, "s2": h.s2, "s_final": h.s_final,
            }));
        }
    } else {
        for h in search_top_m(index, store, &query, args.top)? {
            rows.push(json!({
                "rank": h.rank, "video_id": h.video_id, "frame_index": h.frame_index,
                "timestamp_s": store.row_meta(h.row).timestamp_s, "score": h.score,
            }));
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&json!({ "hits": rows }))?);
        return Ok(ExitCode::SUCCESS);
    }
    for r in &rows {
        let mut line = format!(
            "{:>4}  {}  frame {}  {:.2}s  score {:.4}",
            r["rank"], r["video_id"].as_str().unwrap_or_default(), r["frame_index"], r["timestamp_s"].as_f64().unwrap_or(0.0),
            r["score"].as_f64().unwrap_or(0.0)
        );
        if args.rerank {
            line.push_str(&format!(
                "  s1 {:.4}  s2 {:.4}  final {:.4}  (was {})",
                r["s1"].as_f64().unwrap_or(0.0),
                r["s2"].as_f64().unwrap_or(0.0),
                r["s_final"].as_f64().unwrap_or(0.0),
                r["initial_rank"]
            ));
        }
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct TemporalArgs {
    #[arg(long, env = "GRAB_MANIFEST")]
    corpus: PathBuf,
    #[arg(long)]
    video: String,
    #[arg(long)]
    pivot_frame: u64,
    /// JSON array, `.json` file or raw f32le file.
    #[arg(long)]
    query_start_emb: String,
    #[arg(long)]
    query_end_emb: String,
    /// Half-window sizes in seconds.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 15.0, 20.0])]
    windows: Vec<f64>,
    #[arg(long, default_value_t = 0.7)]
    lambda_s: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda_t: f64,
    /// Stability neighborhood, in strided positions per side.
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long)]
    json: bool,
}

pub fn temporal(args: TemporalArgs) -> Result<ExitCode> {
    let q_start = load_embedding(&args.query_start_emb)?;
    let q_end = load_embedding(&args.query_end_emb)?;
    let params = AbtsParams::new(args.windows, args.lambda_s, args.lambda_t, args.radius)?;
    let store = Store::open(&args.corpus)?;
    let pivot = PivotRef { video_id: args.video, frame_index: args.pivot_frame };
    let out = temporal_search(&q_start, &q_end, &pivot, &store, &params)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(ExitCode::SUCCESS);
    }
    let m = &out.moment;
    println!(
        "{} pivot {}: frames {}..{} ({:.2}s to {:.2}s), confidence {:.4} / {:.4}, windows {}s / {}s",
        m.video_id, m.pivot_frame, m.f_s, m.f_e, m.t_s, m.t_e, m.confidence_start, m.confidence_end, m.window_start_s,
        m.window_end_s
    );
    for w in &out.windows {
        println!(
            "  window {:>5.1}s  start {} in {:?} ({:.4})  end {} in {:?} ({:.4})",
            w.window_s, w.start.frame_index, w.start_range, w.start.confidence, w.end.frame_index, w.end_range,
            w.end.confidence
        );
    }
    if let Some(warning) = &m.warning {
        println!("warning: {warning}");
    }
    Ok(ExitCode::SUCCESS)
}

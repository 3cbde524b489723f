use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Subcommand};
use grab_core::eval::{eval_abts, eval_dedup, eval_rerank, AbtsScenario, DedupScenario, EvalReport, RerankScenario};
use grab_core::ingest::DedupConfig;
use grab_core::rerank::RerankParams;
use grab_core::temporal::AbtsParams;

#[derive(Args)]
pub struct Common {
    /// Master seed; trial t draws from ChaCha8 seeded with splitmix64(seed ^ splitmix64(t)).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    /// Print the full report, per-trial diagnostics included.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
pub enum Scenario {
    /// Planted pHash clusters: exactly one representative per cluster.
    Dedup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        clusters: usize,
        /// Max bits flipped from a cluster center.
        #[arg(long, default_value_t = 6)]
        spread: u32,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
    },
    /// Planted relevant cluster: target promoted to the top 3.
    Rerank {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        refine_k: Option<usize>,
        #[arg(long)]
        expand_m: Option<usize>,
    },
    /// Planted moment: both boundaries within ±3 strided frames, plus the λt=0 ablation.
    Abts {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_s: Option<f64>,
        #[arg(long)]
        lambda_t: Option<f64>,
        /// Drop the noise and jitter from the fixture.
        #[arg(long)]
        noiseless: bool,
    },
}

pub fn run(scenario: Scenario) -> Result<ExitCode> {
    let (report, json) = match scenario {
        Scenario::Dedup { common, clusters, spread, tau } => {
            let sc = DedupScenario { clusters, spread, ..DedupScenario::default() };
            (eval_dedup(common.seed, common.trials.unwrap_or(20), &sc, &DedupConfig::new(tau)?)?, common.json)
        }
        Scenario::Rerank { common, refine_k, expand_m } => {
            let d = RerankParams::default();
            let params = RerankParams {
                refine_k: refine_k.unwrap_or(d.refine_k),
                expand_m: expand_m.unwrap_or(d.expand_m),
                ..d
            };
            let sc = RerankScenario::default();
            (eval_rerank(common.seed, common.trials.unwrap_or(100), &sc, &params)?, common.json)
        }
        Scenario::Abts { common, lambda_s, lambda_t, noiseless } => {
            let d = AbtsParams::default();
            let params = AbtsParams::new(
                d.windows_s.clone(),
                lambda_s.unwrap_or(d.lambda_s),
                lambda_t.unwrap_or(d.lambda_t),
                d.neighborhood_radius,
            )?;
            let sc = if noiseless { AbtsScenario::noiseless() } else { AbtsScenario::default() };
            (eval_abts(common.seed, common.trials.unwrap_or(100), &sc, &params)?, common.json)
        }
    };
    print_report(&report, json)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_report(report: &EvalReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
        return Ok(());
    }
    println!("{}", report.headline());
    println!(
        "seed {}, tolerance {} {}, {} ms",
        report.seed, report.tolerance, report.tolerance_unit, report.wall_clock_ms
    );
    println!("params {}", report.params);
    println!("summary {}", serde_json::to_string_pretty(&report.summary)?);
    Ok(())
}

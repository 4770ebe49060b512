//! Subcommand surface and dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use lvrlab_core::agents::{OrderSide, UserOrder};
use lvrlab_core::amm::Side;
use lvrlab_core::ev::{discrete_option_value, pool_time_ev, DiscreteOutcome};
use lvrlab_core::experiments::{
    run_blocktime_sweep, run_delay_sweep, run_readd_sweep, run_retention_experiment,
    ExperimentConfig,
};

use crate::config::parse_config;
use crate::report::{
    format_float, render_blocktime_csv, render_delay_csv, render_readd_sweep_csv,
    render_retention_csv, write_manifest, write_output, OutputFile, RunManifest,
};
use crate::CliError;

/// The delay sweep evaluates one fixed canonical order against the
/// configured pool: it sells 10 token B with a slippage limit at 99%
/// of the pool quote. The resolved order is echoed in the manifest.
pub const CANONICAL_ORDER_AMOUNT_B: f64 = 10.0;
pub const CANONICAL_ORDER_MIN_OUT_FRACTION: f64 = 0.99;

#[derive(Parser)]
#[command(
    name = "lvrlab",
    version,
    about = "Monte-Carlo lab for LVR retention hooks on a constant-product AMM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the protected-vs-unprotected retention experiment.
    Retention {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Retention at several per-block re-add percentages.
    ReaddSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated re-add fractions in (0, 1].
        #[arg(long, value_delimiter = ',', required = true)]
        pcts: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Arbitrage profit per day vs. block time on the unprotected pool.
    BlocktimeSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated arbitrage gaps in base blocks.
        #[arg(long, value_delimiter = ',', required = true)]
        gaps: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time value of the canonical order vs. inclusion delay.
    DelaySweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated delays in blocks; must include 0.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Value an option over discrete outcomes.
    Goldmine {
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        strike: f64,
    },
    /// Pool time-value decomposition over a horizon grid.
    TimeValue {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated horizons in blocks.
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u32>,
        /// Monte-Carlo samples per horizon (default: n_paths).
        #[arg(long)]
        samples: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `argv` and runs the selected experiment, returning the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = parse_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn manifest(
    command: &str,
    cfg: &ExperimentConfig,
    started_at: String,
    summary: serde_json::Map<String, serde_json::Value>,
    output_files: Vec<OutputFile>,
) -> Result<RunManifest, CliError> {
    Ok(RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config_echo: serde_json::to_value(cfg)
            .map_err(|e| CliError::Runtime(e.to_string()))?,
        seed: cfg.seed,
        started_at,
        finished_at: now(),
        summary,
        output_files,
    })
}

fn ensure_finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(CliError::Runtime(format!("non-finite value in {name}")));
    }
    Ok(())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Retention { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let started = now();
            let report = run_retention_experiment(&cfg)?;
            ensure_finite("retention report", [report.mean_ratio, report.std_error])?;
            let file = write_output(&out, "retention.csv", &render_retention_csv(&report))?;
            let mut summary = serde_json::Map::new();
            summary.insert("mean_ratio".into(), json!(report.mean_ratio));
            summary.insert("std_error".into(), json!(report.std_error));
            let m = manifest("retention", &cfg, started, summary, vec![file])?;
            write_manifest(&out, &m)?;
            println!(
                "mean_ratio={:.4} \u{b1} {:.4}",
                report.mean_ratio, report.std_error
            );
            Ok(())
        }
        Command::ReaddSweep {
            config,
            out,
            pcts,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let started = now();
            let rows = run_readd_sweep(&cfg, &pcts)?;
            ensure_finite("re-add sweep", rows.iter().map(|r| r.mean_ratio))?;
            let file = write_output(&out, "readd_sweep.csv", &render_readd_sweep_csv(&rows))?;
            let mut summary = serde_json::Map::new();
            summary.insert(
                "rows".into(),
                serde_json::to_value(&rows).map_err(|e| CliError::Runtime(e.to_string()))?,
            );
            let m = manifest("readd-sweep", &cfg, started, summary, vec![file])?;
            write_manifest(&out, &m)?;
            for r in &rows {
                println!(
                    "pct={} mean_ratio={:.4} \u{b1} {:.4}",
                    r.pct, r.mean_ratio, r.std_error
                );
            }
            Ok(())
        }
        Command::BlocktimeSweep {
            config,
            out,
            gaps,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let started = now();
            let sweep = run_blocktime_sweep(&cfg, &gaps)?;
            ensure_finite(
                "block-time sweep",
                sweep
                    .rows
                    .iter()
                    .map(|r| r.arb_profit_per_day)
                    .chain([sweep.fitted_slope]),
            )?;
            let file = write_output(&out, "blocktime_sweep.csv", &render_blocktime_csv(&sweep))?;
            let mut summary = serde_json::Map::new();
            summary.insert("fitted_slope".into(), json!(sweep.fitted_slope));
            summary.insert("slope_std_error".into(), json!(sweep.slope_std_error));
            let m = manifest("blocktime-sweep", &cfg, started, summary, vec![file])?;
            write_manifest(&out, &m)?;
            println!(
                "fitted_slope={:.4} \u{b1} {:.4}",
                sweep.fitted_slope, sweep.slope_std_error
            );
            Ok(())
        }
        Command::DelaySweep {
            config,
            out,
            deltas,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let started = now();
            let (order, order_echo) = canonical_order(&cfg)?;
            let rows = run_delay_sweep(&cfg, &order, &deltas)?;
            ensure_finite("delay sweep", rows.iter().map(|r| r.time_ev))?;
            let file = write_output(&out, "delay_sweep.csv", &render_delay_csv(&rows))?;
            let mut summary = serde_json::Map::new();
            summary.insert("canonical_order".into(), order_echo);
            summary.insert(
                "rows".into(),
                serde_json::to_value(&rows).map_err(|e| CliError::Runtime(e.to_string()))?,
            );
            let m = manifest("delay-sweep", &cfg, started, summary, vec![file])?;
            write_manifest(&out, &m)?;
            for r in &rows {
                println!(
                    "delta={} time_ev={:.6} \u{b1} {:.6}",
                    r.delta_blocks, r.time_ev, r.std_error
                );
            }
            Ok(())
        }
        Command::Goldmine {
            probs,
            values,
            strike,
        } => {
            if probs.len() != values.len() {
                return Err(CliError::Config(
                    "--probs and --values must have the same length".into(),
                ));
            }
            let outcomes = probs
                .iter()
                .zip(&values)
                .map(|(&p, &v)| DiscreteOutcome::new(p, v))
                .collect::<Result<Vec<_>, _>>()?;
            let value = discrete_option_value(&outcomes, strike)?;
            println!("{value}");
            Ok(())
        }
        Command::TimeValue {
            config,
            out,
            horizons,
            samples,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let started = now();
            let n_samples = samples.unwrap_or(cfg.n_paths);
            let pool = cfg.pool()?;
            let gbm = cfg.gbm()?;
            let mut csv = String::from("horizon_blocks,intrinsic,time_value,total,std_error\n");
            let mut last = None;
            for &horizon in &horizons {
                let ev = pool_time_ev(&pool, &gbm, horizon, n_samples, cfg.seed)?;
                ensure_finite("time value", [ev.total, ev.std_error])?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    horizon,
                    format_float(ev.intrinsic),
                    format_float(ev.time_value),
                    format_float(ev.total),
                    format_float(ev.std_error),
                ));
                println!(
                    "horizon={} total={:.6} time_value={:.6} \u{b1} {:.6}",
                    horizon, ev.total, ev.time_value, ev.std_error
                );
                last = Some(ev);
            }
            let file = write_output(&out, "time_value.csv", &csv)?;
            let mut summary = serde_json::Map::new();
            summary.insert("n_samples".into(), json!(n_samples));
            if let Some(ev) = last {
                summary.insert("last_total".into(), json!(ev.total));
            }
            let m = manifest("time-value", &cfg, started, summary, vec![file])?;
            write_manifest(&out, &m)?;
            Ok(())
        }
    }
}

/// The documented canonical order of the delay sweep plus its
/// manifest echo.
fn canonical_order(cfg: &ExperimentConfig) -> Result<(UserOrder, serde_json::Value), CliError> {
    let pool = cfg.pool()?;
    let (_, quote) = pool.simulate_swap(Side::BuyA, CANONICAL_ORDER_AMOUNT_B)?;
    let min_out = CANONICAL_ORDER_MIN_OUT_FRACTION * quote;
    let order = UserOrder::new(OrderSide::SellB, CANONICAL_ORDER_AMOUNT_B, min_out, 0)?;
    let echo = json!({
        "side": "SellB",
        "amount_in": CANONICAL_ORDER_AMOUNT_B,
        "min_out": min_out,
        "min_out_fraction_of_quote": CANONICAL_ORDER_MIN_OUT_FRACTION,
    });
    Ok((order, echo))
}

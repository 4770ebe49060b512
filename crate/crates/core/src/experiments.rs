//! Simulation campaigns: the retention experiment (protected vs.
//! unprotected vs. HODL), the re-add percentage sweep, the block-time
//! sweep, and the sequencer-delay sweep.
//!
//! Paths are the unit of parallelism. The protected and unprotected
//! pools within one path consume the identical price sequence
//! (common random numbers), and sweep rows share the seed so rows are
//! path-paired. Reduction is in ascending path order, making reports
//! byte-reproducible regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{builder_arbitrage, builder_arbitrage_protected, UserOrder};
use crate::amm::{hodl_value, PoolState, Side};
use crate::error::{Error, Result};
use crate::ev::{order_time_ev, EvDecomposition};
use crate::hooks::{ProtectedPool, RebateSchedule, VaultState};
use crate::stochastic::{make_path, GbmParams};

/// How the protected pool recycles vault holdings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReAddMode {
    /// The whole vault is converted and re-added at the pool price
    /// every block.
    #[default]
    ConversionAtPoolPrice,
    /// A `readd_pct` tranche (with fixed minimums) is re-added each
    /// block.
    PerBlockReAdd,
}

fn default_blocks_per_day() -> u32 {
    100
}

fn default_initial_price() -> f64 {
    1.0
}

fn default_initial_reserve() -> f64 {
    100.0
}

fn default_rebate_beta1() -> f64 {
    1.0
}

fn default_rebate_z() -> u32 {
    100
}

fn default_readd_pct() -> f64 {
    0.05
}

/// Fully resolved configuration of one experiment run. Omitted
/// optional keys take the documented defaults; unknown keys are
/// rejected at parse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sigma_daily: f64,
    #[serde(default)]
    pub mu_daily: f64,
    #[serde(default = "default_blocks_per_day")]
    pub blocks_per_day: u32,
    #[serde(default = "default_initial_price")]
    pub initial_price: f64,
    #[serde(default = "default_initial_reserve")]
    pub initial_reserve_a: f64,
    #[serde(default = "default_initial_reserve")]
    pub initial_reserve_b: f64,
    #[serde(default)]
    pub fee: f64,
    pub days: u32,
    pub n_paths: u32,
    pub seed: u64,
    #[serde(default = "default_rebate_beta1")]
    pub rebate_beta1: f64,
    #[serde(default = "default_rebate_z")]
    pub rebate_z: u32,
    #[serde(default = "default_readd_pct")]
    pub readd_pct: f64,
    #[serde(default)]
    pub readd_min_a: f64,
    #[serde(default)]
    pub readd_min_b: f64,
    #[serde(default)]
    pub mode: ReAddMode,
}

impl ExperimentConfig {
    /// Range-checks every field, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        self.gbm()?;
        self.pool()?;
        self.schedule()?;
        self.vault()?;
        if !(self.initial_price.is_finite() && self.initial_price > 0.0) {
            return Err(Error::config("initial_price", "must be > 0"));
        }
        if self.days == 0 {
            return Err(Error::config("days", "must be >= 1"));
        }
        if self.n_paths < 2 {
            return Err(Error::config("n_paths", "must be >= 2"));
        }
        Ok(())
    }

    pub fn gbm(&self) -> Result<GbmParams> {
        GbmParams::new(self.mu_daily, self.sigma_daily, self.blocks_per_day)
    }

    pub fn pool(&self) -> Result<PoolState> {
        PoolState::new(self.initial_reserve_a, self.initial_reserve_b, self.fee)
    }

    pub fn schedule(&self) -> Result<RebateSchedule> {
        RebateSchedule::linear(self.rebate_beta1, self.rebate_z)
    }

    /// Vault policy for the configured mode: conversion mode re-adds
    /// everything each block, i.e. a 100% tranche.
    pub fn vault(&self) -> Result<VaultState> {
        match self.mode {
            ReAddMode::ConversionAtPoolPrice => VaultState::new(1.0, 0.0, 0.0),
            ReAddMode::PerBlockReAdd => {
                VaultState::new(self.readd_pct, self.readd_min_a, self.readd_min_b)
            }
        }
    }

    pub fn n_blocks(&self) -> u64 {
        u64::from(self.days) * u64::from(self.blocks_per_day)
    }

    pub fn protected_pool(&self) -> Result<ProtectedPool> {
        Ok(ProtectedPool::new(self.pool()?, self.schedule()?, self.vault()?))
    }
}

/// The protected and unprotected pools advanced in lock-step on one
/// price path.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedPools {
    pub protected: ProtectedPool,
    pub unprotected: PoolState,
}

/// Token flows of one block, for profit reporting and the
/// conservation audit. Builder deltas are from the builder's
/// perspective (output received positive, input paid negative); the
/// counterparty delta is what the re-add conversion counterparty
/// received.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockLedger {
    pub profit_protected: f64,
    pub profit_unprotected: f64,
    pub builder_delta_protected: (f64, f64),
    pub builder_delta_unprotected: (f64, f64),
    pub counterparty_delta: (f64, f64),
}

fn trade_delta(side: Side, amount_in: f64, amount_out: f64) -> (f64, f64) {
    match side {
        Side::BuyA => (amount_out, -amount_in),
        Side::BuyB => (-amount_in, amount_out),
    }
}

/// Advances both pools by one block: a single builder arbitrage per
/// pool at the block's external price.
pub fn run_block(state: &mut PairedPools, external_price: f64, block: u64) -> Result<BlockLedger> {
    let unprot = builder_arbitrage(&mut state.unprotected, external_price)?;
    let prot = builder_arbitrage_protected(&mut state.protected, external_price, block)?;

    let mut ledger = BlockLedger {
        profit_protected: prot.profit,
        profit_unprotected: unprot.profit,
        ..BlockLedger::default()
    };
    if let Some(trade) = unprot.trade {
        ledger.builder_delta_unprotected = trade_delta(trade.side, trade.amount_in, trade.amount_out);
    }
    if let Some((before, _)) = &prot.hooks {
        let t = before.executed;
        ledger.builder_delta_protected = trade_delta(t.side, t.amount_in, t.amount_out);
        if let Some(re_add) = before.re_add {
            ledger.counterparty_delta = (
                re_add.tranche_a - re_add.added_a,
                re_add.tranche_b - re_add.added_b,
            );
        }
    }
    Ok(ledger)
}

/// Terminal values of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub value_protected: f64,
    pub value_unprotected: f64,
    pub value_hodl: f64,
    pub ratio_protected_unprotected: f64,
    pub ratio_hodl_unprotected: f64,
}

/// Per-path terminal values plus summary statistics of one retention
/// run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub per_path: Vec<PathRecord>,
    pub mean_ratio: f64,
    pub std_error: f64,
    pub config_echo: ExperimentConfig,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn run_retention_path(config: &ExperimentConfig, path_id: u64) -> Result<PathRecord> {
    let gbm = config.gbm()?;
    let path = make_path(&gbm, config.days, config.initial_price, config.seed, path_id)?;
    let mut state = PairedPools {
        protected: config.protected_pool()?,
        unprotected: config.pool()?,
    };
    for block in 1..=config.n_blocks() {
        run_block(&mut state, path.at_block(block as usize), block)?;
    }
    let p_terminal = path.terminal();
    let (vault_a, vault_b) = state.protected.vault().balances();
    let value_protected = state.protected.pool().value_at(p_terminal) + vault_a * p_terminal + vault_b;
    let value_unprotected = state.unprotected.value_at(p_terminal);
    let value_hodl = hodl_value(
        config.initial_reserve_a,
        config.initial_reserve_b,
        p_terminal,
    );
    let record = PathRecord {
        path_id,
        value_protected,
        value_unprotected,
        value_hodl,
        ratio_protected_unprotected: value_protected / value_unprotected,
        ratio_hodl_unprotected: value_hodl / value_unprotected,
    };
    if !(record.value_protected.is_finite()
        && record.value_unprotected.is_finite()
        && record.ratio_protected_unprotected.is_finite())
    {
        return Err(Error::NonFinite("retention path"));
    }
    Ok(record)
}

/// Runs the retention experiment: every path simulates
/// `days · blocks_per_day` blocks of builder arbitrage on both pools
/// and reports terminal values at the terminal external price.
pub fn run_retention_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let per_path: Vec<PathRecord> = (0..u64::from(config.n_paths))
        .into_par_iter()
        .map(|path_id| run_retention_path(config, path_id))
        .collect::<Result<_>>()?;
    let (mean_ratio, std_error) = mean_and_se(
        per_path.iter().map(|r| r.ratio_protected_unprotected),
        per_path.len(),
    );
    Ok(ExperimentReport {
        per_path,
        mean_ratio,
        std_error,
        config_echo: config.clone(),
    })
}

/// One row of the re-add percentage sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReAddSweepRow {
    pub pct: f64,
    pub mean_ratio: f64,
    pub std_error: f64,
}

/// Retention runs at each re-add percentage in `PerBlockReAdd` mode,
/// path-paired through the shared seed.
pub fn run_readd_sweep(config: &ExperimentConfig, pcts: &[f64]) -> Result<Vec<ReAddSweepRow>> {
    if pcts.is_empty() {
        return Err(Error::argument("pcts must be non-empty"));
    }
    if pcts.iter().any(|p| !(p.is_finite() && *p > 0.0 && *p <= 1.0)) {
        return Err(Error::argument("each pct must lie in (0, 1]"));
    }
    pcts.iter()
        .map(|&pct| {
            let mut cfg = config.clone();
            cfg.mode = ReAddMode::PerBlockReAdd;
            cfg.readd_pct = pct;
            let report = run_retention_experiment(&cfg)?;
            Ok(ReAddSweepRow {
                pct,
                mean_ratio: report.mean_ratio,
                std_error: report.std_error,
            })
        })
        .collect()
}

/// One row of the block-time sweep: `block_time` is the arbitrage
/// gap in base blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlocktimeRow {
    pub block_time: u32,
    pub arb_profit_per_day: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlocktimeSweep {
    pub rows: Vec<BlocktimeRow>,
    /// Log-log slope of profit-per-day against block time.
    pub fitted_slope: f64,
    pub slope_std_error: f64,
}

/// Ordinary least squares on (x, y); returns (slope, slope standard
/// error).
fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - x_mean).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - x_mean) * (yi - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    (slope, se)
}

/// Measures mean builder arbitrage profit per day on the unprotected
/// pool when arbitrage is allowed only every `gap`-th block, and fits
/// the log-log growth of profit against block time. Requires a
/// positive fee; the square-root law is the with-fee regime.
pub fn run_blocktime_sweep(
    config: &ExperimentConfig,
    block_gaps: &[u32],
) -> Result<BlocktimeSweep> {
    if config.fee <= 0.0 {
        return Err(Error::config(
            "fee",
            "block-time sweep requires fee > 0",
        ));
    }
    if block_gaps.is_empty() || block_gaps.iter().any(|&g| g == 0) {
        return Err(Error::argument("block_gaps must be positive"));
    }
    let min_gap = *block_gaps.iter().min().unwrap();
    let max_gap = *block_gaps.iter().max().unwrap();
    if max_gap < 10 * min_gap {
        return Err(Error::argument(
            "block_gaps must span at least one decade",
        ));
    }
    let gbm = config.gbm()?;
    let n_blocks = config.n_blocks();
    let base_pool = config.pool()?;

    // Per path: one shared price sequence, one pool copy per gap.
    let per_path: Vec<Vec<f64>> = (0..u64::from(config.n_paths))
        .into_par_iter()
        .map(|path_id| -> Result<Vec<f64>> {
            let path = make_path(&gbm, config.days, config.initial_price, config.seed, path_id)?;
            block_gaps
                .iter()
                .map(|&gap| {
                    let mut pool = base_pool;
                    let mut profit = 0.0;
                    let mut block = u64::from(gap);
                    while block <= n_blocks {
                        let arb = builder_arbitrage(&mut pool, path.at_block(block as usize))?;
                        profit += arb.profit;
                        block += u64::from(gap);
                    }
                    Ok(profit / f64::from(config.days))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows: Vec<BlocktimeRow> = block_gaps
        .iter()
        .enumerate()
        .map(|(i, &gap)| {
            let (mean, se) = mean_and_se(per_path.iter().map(|v| v[i]), per_path.len());
            BlocktimeRow {
                block_time: gap,
                arb_profit_per_day: mean,
                std_error: se,
            }
        })
        .collect();

    if rows.iter().any(|r| r.arb_profit_per_day <= 0.0) {
        return Err(Error::NonFinite("block-time sweep log fit"));
    }
    let xs: Vec<f64> = rows.iter().map(|r| f64::from(r.block_time).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.arb_profit_per_day.ln()).collect();
    let (fitted_slope, slope_std_error) = ols_slope(&xs, &ys);
    Ok(BlocktimeSweep {
        rows,
        fitted_slope,
        slope_std_error,
    })
}

/// One row of the sequencer-delay sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayRow {
    pub delta_blocks: u32,
    pub time_ev: f64,
    pub std_error: f64,
}

/// Evaluates the order's time-extractable value at each inclusion
/// delay, sharing the seed across rows.
pub fn run_delay_sweep(
    config: &ExperimentConfig,
    order: &UserOrder,
    deltas: &[u32],
) -> Result<Vec<DelayRow>> {
    if !deltas.contains(&0) {
        return Err(Error::argument("deltas must include 0"));
    }
    let gbm = config.gbm()?;
    let pool = config.pool()?;
    deltas
        .iter()
        .map(|&delta| {
            let ev: EvDecomposition =
                order_time_ev(&pool, order, &gbm, delta, config.n_paths, config.seed)?;
            Ok(DelayRow {
                delta_blocks: delta,
                time_ev: ev.time_value,
                std_error: ev.std_error,
            })
        })
        .collect()
}

/// Compounded relative return implied by a constant per-day cost:
/// `1 / (1 − daily_cost)^days`.
pub fn theoretical_relative_return(daily_cost: f64, days: u32) -> Result<f64> {
    if !(daily_cost.is_finite() && (0.0..1.0).contains(&daily_cost)) {
        return Err(Error::argument("daily_cost must be in [0, 1)"));
    }
    Ok((1.0 - daily_cost).powi(-(days as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            sigma_daily: 0.05,
            mu_daily: 0.0,
            blocks_per_day: 100,
            initial_price: 1.0,
            initial_reserve_a: 100.0,
            initial_reserve_b: 100.0,
            fee: 0.0,
            days: 2,
            n_paths: 8,
            seed: 42,
            rebate_beta1: 1.0,
            rebate_z: 100,
            readd_pct: 0.05,
            readd_min_a: 0.0,
            readd_min_b: 0.0,
            mode: ReAddMode::ConversionAtPoolPrice,
        }
    }

    #[test]
    fn validation_names_offending_field() {
        let mut cfg = base_config();
        cfg.sigma_daily = -1.0;
        match cfg.validate().unwrap_err() {
            Error::Config { field, .. } => assert_eq!(field, "sigma_daily"),
            other => panic!("unexpected error {other:?}"),
        }
        let mut cfg = base_config();
        cfg.n_paths = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sigma_zero_block_leaves_aligned_pools_untouched() {
        let mut cfg = base_config();
        cfg.sigma_daily = 0.0;
        let mut state = PairedPools {
            protected: cfg.protected_pool().unwrap(),
            unprotected: cfg.pool().unwrap(),
        };
        let ledger = run_block(&mut state, 1.0, 1).unwrap();
        assert_eq!(ledger.profit_protected, 0.0);
        assert_eq!(ledger.profit_unprotected, 0.0);
        assert_eq!(state.unprotected, cfg.pool().unwrap());
        assert_eq!(state.protected.pool(), &cfg.pool().unwrap());
    }

    #[test]
    fn single_block_jump_traces_both_pools() {
        let cfg = base_config();
        let mut state = PairedPools {
            protected: cfg.protected_pool().unwrap(),
            unprotected: cfg.pool().unwrap(),
        };
        let ledger = run_block(&mut state, 4.0, 1).unwrap();
        assert!((state.unprotected.reserve_a() - 50.0).abs() < 1e-9);
        assert!((state.unprotected.reserve_b() - 200.0).abs() < 1e-9);
        assert!((ledger.profit_unprotected - 100.0).abs() < 1e-9);
        assert!((state.protected.pool().reserve_a() - 25.0).abs() < 1e-9);
        assert!((state.protected.pool().reserve_b() - 100.0).abs() < 1e-9);
        assert!((state.protected.vault().balances().0 - 75.0).abs() < 1e-9);
        assert_eq!(ledger.profit_protected, 0.0);
    }

    #[test]
    fn zero_rebate_gives_ratio_exactly_one() {
        let mut cfg = base_config();
        cfg.rebate_beta1 = 0.0;
        let report = run_retention_experiment(&cfg).unwrap();
        assert!(report.per_path.iter().all(|r| r.ratio_protected_unprotected == 1.0));
        assert_eq!(report.mean_ratio, 1.0);
    }

    #[test]
    fn zero_volatility_gives_ratio_exactly_one() {
        let mut cfg = base_config();
        cfg.sigma_daily = 0.0;
        let report = run_retention_experiment(&cfg).unwrap();
        assert_eq!(report.mean_ratio, 1.0);
        assert_eq!(report.std_error, 0.0);
    }

    #[test]
    fn mean_ratio_is_arithmetic_mean_of_paths() {
        let report = run_retention_experiment(&base_config()).unwrap();
        let mean = report
            .per_path
            .iter()
            .map(|r| r.ratio_protected_unprotected)
            .sum::<f64>()
            / report.per_path.len() as f64;
        assert!((report.mean_ratio - mean).abs() < 1e-12);
        assert_eq!(report.per_path.len(), 8);
    }

    #[test]
    fn full_readd_pct_reproduces_conversion_mode() {
        let mut per_block = base_config();
        per_block.mode = ReAddMode::PerBlockReAdd;
        per_block.readd_pct = 1.0;
        per_block.rebate_beta1 = 1.0;
        per_block.n_paths = 50;
        let mut conversion = per_block.clone();
        conversion.mode = ReAddMode::ConversionAtPoolPrice;
        let a = run_retention_experiment(&per_block).unwrap();
        let b = run_retention_experiment(&conversion).unwrap();
        assert_eq!(a.mean_ratio, b.mean_ratio);
        assert_eq!(a.per_path, b.per_path);
    }

    #[test]
    fn readd_sweep_single_path_sigma_zero_is_flat() {
        let mut cfg = base_config();
        cfg.sigma_daily = 0.0;
        cfg.n_paths = 1;
        let rows = run_readd_sweep(&cfg, &[0.01, 0.05, 0.125]).unwrap();
        assert!(rows.iter().all(|r| r.mean_ratio == 1.0));
    }

    #[test]
    fn readd_sweep_validates_pcts() {
        let cfg = base_config();
        assert!(run_readd_sweep(&cfg, &[]).is_err());
        assert!(run_readd_sweep(&cfg, &[0.0]).is_err());
        assert!(run_readd_sweep(&cfg, &[1.5]).is_err());
    }

    #[test]
    fn blocktime_sweep_requires_fee() {
        let cfg = base_config();
        match run_blocktime_sweep(&cfg, &[1, 2, 5]).unwrap_err() {
            Error::Config { field, .. } => assert_eq!(field, "fee"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn delay_sweep_zero_delta_row_is_exactly_zero() {
        let mut cfg = base_config();
        cfg.n_paths = 64;
        let pool = cfg.pool().unwrap();
        let quote = pool.simulate_swap(Side::BuyA, 10.0).unwrap().1;
        let order =
            UserOrder::new(crate::agents::OrderSide::SellB, 10.0, 0.99 * quote, 0).unwrap();
        let rows = run_delay_sweep(&cfg, &order, &[0, 10]).unwrap();
        assert_eq!(rows[0].time_ev, 0.0);
        assert!(run_delay_sweep(&cfg, &order, &[10]).is_err());
    }

    #[test]
    fn theoretical_return_anchor() {
        let v = theoretical_relative_return(0.0003125, 180).unwrap();
        assert!((v - 1.05787).abs() < 5e-6, "value {v}");
        assert_eq!(theoretical_relative_return(0.0, 500).unwrap(), 1.0);
        let x = 0.123;
        assert!((theoretical_relative_return(x, 1).unwrap() - 1.0 / (1.0 - x)).abs() < 1e-15);
        assert!(theoretical_relative_return(1.0, 1).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = base_config();
        let a = run_retention_experiment(&cfg).unwrap();
        let b = run_retention_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }
}

//! Geometric-Brownian reference price with deterministic,
//! path-indexed random streams.
//!
//! Streams are keyed by `(seed, path_index)` on separate ChaCha
//! streams, so path results never depend on scheduling order and the
//! same configuration reproduces bit-identical sequences no matter
//! how many worker threads run other paths.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift/volatility per day plus the block cadence that fixes
/// `dt = 1/blocks_per_day`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub mu_daily: f64,
    pub sigma_daily: f64,
    pub blocks_per_day: u32,
}

impl GbmParams {
    pub fn new(mu_daily: f64, sigma_daily: f64, blocks_per_day: u32) -> Result<Self> {
        if !sigma_daily.is_finite() || sigma_daily < 0.0 {
            return Err(Error::config("sigma_daily", "must be >= 0"));
        }
        if !mu_daily.is_finite() {
            return Err(Error::config("mu_daily", "must be finite"));
        }
        if blocks_per_day == 0 {
            return Err(Error::config("blocks_per_day", "must be >= 1"));
        }
        Ok(GbmParams {
            mu_daily,
            sigma_daily,
            blocks_per_day,
        })
    }

    /// Per-block time step in days.
    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.blocks_per_day)
    }
}

/// One realized per-block price sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub initial_price: f64,
    pub prices: Vec<f64>,
}

impl PricePath {
    /// Price as of the end of `block` (1-based); block 0 is the
    /// initial price.
    pub fn at_block(&self, block: usize) -> f64 {
        if block == 0 {
            self.initial_price
        } else {
            self.prices[block - 1]
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.prices.last().unwrap_or(&self.initial_price)
    }
}

/// One exact log-Euler step:
/// `price · exp((mu − sigma²/2)·dt + sigma·sqrt(dt)·z)`.
pub fn gbm_step(price: f64, params: &GbmParams, normal_draw: f64) -> f64 {
    let dt = params.dt();
    let drift = (params.mu_daily - 0.5 * params.sigma_daily * params.sigma_daily) * dt;
    let diffusion = params.sigma_daily * dt.sqrt() * normal_draw;
    price * (drift + diffusion).exp()
}

/// Deterministic stream of standard-normal draws for one path.
///
/// Distinct `path_index` values select non-overlapping ChaCha
/// streams under the same seed.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        NormalStream { rng }
    }

    pub fn next_draw(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_draw())
    }
}

/// Generates the per-block price path for one simulation run.
/// Path length is `days · blocks_per_day`.
pub fn make_path(
    params: &GbmParams,
    days: u32,
    initial_price: f64,
    seed: u64,
    path_index: u64,
) -> Result<PricePath> {
    if days == 0 {
        return Err(Error::config("days", "must be >= 1"));
    }
    if !(initial_price.is_finite() && initial_price > 0.0) {
        return Err(Error::config("initial_price", "must be > 0"));
    }
    let n_blocks = days as usize * params.blocks_per_day as usize;
    let mut stream = NormalStream::new(seed, path_index);
    let mut prices = Vec::with_capacity(n_blocks);
    let mut price = initial_price;
    for _ in 0..n_blocks {
        price = gbm_step(price, params, stream.next_draw());
        prices.push(price);
    }
    Ok(PricePath {
        initial_price,
        prices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_volatility_zero_drift_is_constant() {
        let params = GbmParams::new(0.0, 0.0, 100).unwrap();
        assert_eq!(gbm_step(42.0, &params, 1.7), 42.0);
        let path = make_path(&params, 3, 42.0, 7, 0).unwrap();
        assert_eq!(path.prices.len(), 300);
        assert!(path.prices.iter().all(|&p| p == 42.0));
    }

    #[test]
    fn gbm_step_analytic_plugin() {
        // mu = 0, z = 0, sigma = 0.05, dt = 1 day.
        let params = GbmParams::new(0.0, 0.05, 1).unwrap();
        let stepped = gbm_step(100.0, &params, 0.0);
        assert!((stepped - 100.0 * (-0.00125f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn log_return_sample_std_matches_sigma() {
        let params = GbmParams::new(0.0, 0.05, 1).unwrap();
        let mut stream = NormalStream::new(99, 0);
        let n = 100_000;
        let mut rets = Vec::with_capacity(n);
        let mut price = 100.0;
        for _ in 0..n {
            let next = gbm_step(price, &params, stream.next_draw());
            rets.push((next / price).ln());
            price = next;
        }
        let mean = rets.iter().sum::<f64>() / n as f64;
        let var = rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sample_sigma = var.sqrt();
        assert!(
            (sample_sigma - 0.05).abs() / 0.05 < 0.01,
            "sample sigma {sample_sigma}"
        );
    }

    #[test]
    fn same_seed_and_index_reproduce_identical_paths() {
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        let a = make_path(&params, 2, 1.0, 42, 3).unwrap();
        let b = make_path(&params, 2, 1.0, 42, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn golden_draws_stay_stable() {
        // First eight draws of stream (seed 42, path 0), recorded at
        // first build. A change here breaks every seeded result.
        let expected = [
            4.77981238351021742e-1,
            1.33407061023180784e0,
            -2.10866683271030281e-1,
            4.76346923808821321e-1,
            -5.12090622056163403e-1,
            -9.33978449390698073e-1,
            -1.00237784413760278e0,
            9.16663559593169253e-1,
        ];
        let draws: Vec<f64> = NormalStream::new(42, 0).take(8).collect();
        assert_eq!(draws, expected);
    }

    #[test]
    fn distinct_indices_give_distinct_streams() {
        let mut s0 = NormalStream::new(42, 0);
        let mut s1 = NormalStream::new(42, 1);
        let any_differ = (0..10_000).any(|_| s0.next_draw() != s1.next_draw());
        assert!(any_differ);
    }

    #[test]
    fn terminal_log_price_mean_matches_theory() {
        let params = GbmParams::new(0.0, 0.05, 10).unwrap();
        let days = 4u32;
        let n_paths = 10_000;
        let mut terminal_logs = Vec::with_capacity(n_paths);
        for idx in 0..n_paths {
            let path = make_path(&params, days, 1.0, 11, idx as u64).unwrap();
            terminal_logs.push(path.terminal().ln());
        }
        let mean = terminal_logs.iter().sum::<f64>() / n_paths as f64;
        let var = terminal_logs
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (n_paths - 1) as f64;
        let se = (var / n_paths as f64).sqrt();
        let expected = (0.0 - 0.5 * 0.05 * 0.05) * days as f64;
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} expected {expected} se {se}"
        );
    }

    #[test]
    fn normal_stream_passes_kolmogorov_smirnov() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = 100_000;
        let mut draws: Vec<f64> = NormalStream::new(1234, 0).take(n).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut d_stat: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let cdf = normal.cdf(*x);
            let hi = (i + 1) as f64 / n as f64 - cdf;
            let lo = cdf - i as f64 / n as f64;
            d_stat = d_stat.max(hi.max(lo));
        }
        // 1% critical value for large n: 1.628 / sqrt(n).
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d_stat < critical, "KS statistic {d_stat} >= {critical}");
    }

    #[test]
    fn discretization_preserves_terminal_moments() {
        // One day split into 1 vs 20 sub-steps: first two moments of
        // the terminal log-price agree within Monte-Carlo error.
        let n_paths = 20_000;
        let stats = |bpd: u32| -> (f64, f64) {
            let params = GbmParams::new(0.0, 0.05, bpd).unwrap();
            let logs: Vec<f64> = (0..n_paths)
                .map(|idx| make_path(&params, 1, 1.0, 5, idx as u64).unwrap().terminal().ln())
                .collect();
            let mean = logs.iter().sum::<f64>() / n_paths as f64;
            let var =
                logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64;
            (mean, var)
        };
        let (m1, v1) = stats(1);
        let (m20, v20) = stats(20);
        let se_mean = (2.0 * 0.05f64.powi(2) / n_paths as f64).sqrt();
        assert!((m1 - m20).abs() < 3.0 * se_mean, "means {m1} vs {m20}");
        // Var of sample variance ~ 2·sigma^4/n.
        let se_var = (2.0 * 0.05f64.powi(4) * 2.0 / n_paths as f64).sqrt();
        assert!((v1 - v20).abs() < 3.0 * se_var, "vars {v1} vs {v20}");
    }
}

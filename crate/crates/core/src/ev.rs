//! Extractable value priced as an option: discrete-outcome valuation,
//! intrinsic vs. time decomposition for pool states and pending
//! orders, and state classifiers.
//!
//! Expiry is modeled as a hard decision time: the builder acts
//! exactly when the state or transaction must be acted on, and the
//! reference price at evaluation time is the pool's spot price (the
//! market is taken to be aligned when the clock starts). Horizons are
//! measured in blocks and converted to days through
//! `blocks_per_day`, so every module shares one clock.

use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::agents::{order_marginal_value, UserOrder};
use crate::amm::PoolState;
use crate::error::{Error, Result};
use crate::stochastic::{gbm_step, GbmParams, NormalStream};

/// One scenario of a discrete payoff distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteOutcome {
    pub probability: f64,
    pub value: f64,
}

impl DiscreteOutcome {
    pub fn new(probability: f64, value: f64) -> Result<Self> {
        if !(probability.is_finite() && (0.0..=1.0).contains(&probability)) {
            return Err(Error::argument("probability must be in [0, 1]"));
        }
        Ok(DiscreteOutcome { probability, value })
    }
}

/// Option value over discrete outcomes: `Σ p_i · max(v_i − strike, 0)`.
/// Probabilities must sum to 1 within 1e-12.
pub fn discrete_option_value(outcomes: &[DiscreteOutcome], strike: f64) -> Result<f64> {
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::argument(format!(
            "outcome probabilities sum to {total}, expected 1"
        )));
    }
    Ok(outcomes
        .iter()
        .map(|o| o.probability * (o.value - strike).max(0.0))
        .sum())
}

/// Whether a rational builder is incentivized to act on the state
/// right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    WellPriced,
    MisPriced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateClass {
    pub classification: Classification,
    /// Optimal arbitrage profit acting instantly.
    pub instant_profit: f64,
    /// Blocks since the state was last acted on; 0 as classified.
    pub staleness_blocks: u64,
}

/// Classifies a pool against an external price: mis-priced iff the
/// optimal instantaneous arbitrage earns a positive profit.
pub fn classify_state(pool: &PoolState, external_price: f64) -> Result<StateClass> {
    let instant_profit = match pool.arbitrage_trade(external_price)? {
        Some(trade) => trade.profit_at(external_price),
        None => 0.0,
    };
    let classification = if instant_profit > 0.0 {
        Classification::MisPriced
    } else {
        Classification::WellPriced
    };
    Ok(StateClass {
        classification,
        instant_profit,
        staleness_blocks: 0,
    })
}

/// Blocks since a state was last acted on.
pub fn staleness(last_acted_block: u64, current_block: u64) -> Result<u64> {
    if current_block < last_acted_block {
        return Err(Error::argument("current_block precedes last_acted_block"));
    }
    Ok(current_block - last_acted_block)
}

/// A domain as a `(T, Δ)` pair: minimum time between transitions and
/// the inclusion delay guaranteed by its sequencer, in block-time
/// units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub min_transition_time: f64,
    pub inclusion_delay: f64,
}

impl DomainSpec {
    pub fn new(min_transition_time: f64, inclusion_delay: f64) -> Result<Self> {
        if !(min_transition_time.is_finite() && min_transition_time >= 0.0) {
            return Err(Error::argument("min_transition_time must be >= 0"));
        }
        if !(inclusion_delay.is_finite() && inclusion_delay >= 0.0) {
            return Err(Error::argument("inclusion_delay must be >= 0"));
        }
        Ok(DomainSpec {
            min_transition_time,
            inclusion_delay,
        })
    }
}

/// Intrinsic value, time value, and total expected extractable value
/// of a state or pending transaction, with the Monte-Carlo error of
/// the estimate. `total = intrinsic + time_value` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvDecomposition {
    pub intrinsic: f64,
    pub time_value: f64,
    pub total: f64,
    pub horizon_blocks: u32,
    pub n_samples: u32,
    pub std_error: f64,
}

fn decompose(intrinsic: f64, total: f64, horizon_blocks: u32, n_samples: u32, std_error: f64) -> EvDecomposition {
    EvDecomposition {
        intrinsic,
        time_value: total - intrinsic,
        total,
        horizon_blocks,
        n_samples,
        std_error,
    }
}

/// Monte-Carlo mean and standard error of `payoff(S_expiry)` where
/// the price starts at `s0` and evolves `horizon_blocks` steps.
/// Sample `i` draws from stream `(seed, i)`; reduction is in
/// ascending sample order so results are worker-count independent.
fn expiry_estimate(
    s0: f64,
    params: &GbmParams,
    horizon_blocks: u32,
    n_samples: u32,
    seed: u64,
    payoff: impl Fn(f64) -> f64 + Sync,
) -> (f64, f64) {
    let samples: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut stream = NormalStream::new(seed, u64::from(idx));
            let mut price = s0;
            for _ in 0..horizon_blocks {
                price = gbm_step(price, params, stream.next_draw());
            }
            payoff(price)
        })
        .collect();
    let n = f64::from(n_samples);
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Expected extractable value of a (possibly stale) pool at expiry:
/// intrinsic is the instant arbitrage profit now, total is the
/// Monte-Carlo mean of the optimal arbitrage profit after the
/// reference price has diffused for `horizon_blocks`.
pub fn pool_time_ev(
    pool: &PoolState,
    params: &GbmParams,
    horizon_blocks: u32,
    n_samples: u32,
    seed: u64,
) -> Result<EvDecomposition> {
    if n_samples < 2 {
        return Err(Error::argument("n_samples must be >= 2"));
    }
    let s0 = pool.spot_price();
    let intrinsic = classify_state(pool, s0)?.instant_profit;
    if horizon_blocks == 0 {
        return Ok(decompose(intrinsic, intrinsic, 0, n_samples, 0.0));
    }
    let payoff = |price: f64| -> f64 {
        match pool.arbitrage_trade(price) {
            Ok(Some(trade)) => trade.profit_at(price),
            _ => 0.0,
        }
    };
    let (total, std_error) = expiry_estimate(s0, params, horizon_blocks, n_samples, seed, payoff);
    Ok(decompose(intrinsic, total, horizon_blocks, n_samples, std_error))
}

/// Expected extractable value of a pending order when the builder
/// decides `delta_blocks` after submission: intrinsic is the order's
/// marginal value at the submission-time price, total the Monte-Carlo
/// mean of its marginal value at the expiry price (the builder may
/// still exclude it).
pub fn order_time_ev(
    pool: &PoolState,
    order: &UserOrder,
    params: &GbmParams,
    delta_blocks: u32,
    n_samples: u32,
    seed: u64,
) -> Result<EvDecomposition> {
    if n_samples < 2 {
        return Err(Error::argument("n_samples must be >= 2"));
    }
    let s0 = pool.spot_price();
    let intrinsic = order_marginal_value(pool, order, s0)?;
    if delta_blocks == 0 {
        return Ok(decompose(intrinsic, intrinsic, 0, n_samples, 0.0));
    }
    let payoff =
        |price: f64| -> f64 { order_marginal_value(pool, order, price).unwrap_or(0.0) };
    let (total, std_error) = expiry_estimate(s0, params, delta_blocks, n_samples, seed, payoff);
    Ok(decompose(intrinsic, total, delta_blocks, n_samples, std_error))
}

/// Closed-form expected positive part of the terminal price minus
/// spot under driftless GBM — the at-the-money benchmark
/// `spot · (2Φ(σ√T/2) − 1)`, approximately `0.3989·spot·σ·√T` for
/// small `σ²T`.
pub fn atm_option_benchmark(spot: f64, sigma: f64, horizon: f64) -> f64 {
    if horizon <= 0.0 || sigma <= 0.0 {
        return 0.0;
    }
    let half_width = 0.5 * sigma * horizon.sqrt();
    spot * erf(half_width / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::OrderSide;
    use crate::stochastic::GbmParams;

    fn pool(a: f64, b: f64, fee: f64) -> PoolState {
        PoolState::new(a, b, fee).unwrap()
    }

    #[test]
    fn gold_mine_option_value() {
        let outcomes = [
            DiscreteOutcome::new(0.2, 1_000_000.0).unwrap(),
            DiscreteOutcome::new(0.8, 0.0).unwrap(),
        ];
        assert_eq!(discrete_option_value(&outcomes, 100_000.0).unwrap(), 180_000.0);
    }

    #[test]
    fn option_value_edge_strikes() {
        let outcomes = [
            DiscreteOutcome::new(0.5, 10.0).unwrap(),
            DiscreteOutcome::new(0.5, 30.0).unwrap(),
        ];
        assert_eq!(discrete_option_value(&outcomes, 30.0).unwrap(), 0.0);
        assert_eq!(discrete_option_value(&outcomes, 0.0).unwrap(), 20.0);
    }

    #[test]
    fn option_value_rejects_bad_probabilities() {
        let outcomes = [DiscreteOutcome::new(0.5, 1.0).unwrap()];
        assert!(discrete_option_value(&outcomes, 0.0).is_err());
        assert!(DiscreteOutcome::new(1.5, 0.0).is_err());
    }

    #[test]
    fn classify_state_against_external_price() {
        let c = classify_state(&pool(100.0, 100.0, 0.0), 1.0).unwrap();
        assert_eq!(c.classification, Classification::WellPriced);
        assert_eq!(c.instant_profit, 0.0);

        let c = classify_state(&pool(100.0, 100.0, 0.0), 4.0).unwrap();
        assert_eq!(c.classification, Classification::MisPriced);
        assert!((c.instant_profit - 100.0).abs() < 1e-9);

        let c = classify_state(&pool(100.0, 100.0, 0.003), 1.0001).unwrap();
        assert_eq!(c.classification, Classification::WellPriced);
    }

    #[test]
    fn staleness_arithmetic() {
        assert_eq!(staleness(5, 5).unwrap(), 0);
        assert_eq!(staleness(5, 9).unwrap(), 4);
        assert!(staleness(9, 5).is_err());
        // Additivity.
        let (a, b, c) = (3u64, 10u64, 27u64);
        assert_eq!(
            staleness(a, b).unwrap() + staleness(b, c).unwrap(),
            staleness(a, c).unwrap()
        );
    }

    #[test]
    fn domain_spec_validation() {
        assert!(DomainSpec::new(12.0, 0.5).is_ok());
        assert!(DomainSpec::new(-1.0, 0.0).is_err());
        assert!(DomainSpec::new(0.0, -0.1).is_err());
    }

    #[test]
    fn zero_horizon_collapses_time_value() {
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        let ev = pool_time_ev(&pool(100.0, 100.0, 0.0), &params, 0, 100, 1).unwrap();
        assert_eq!(ev.time_value, 0.0);
        assert_eq!(ev.total, ev.intrinsic);
        assert_eq!(ev.std_error, 0.0);
    }

    #[test]
    fn zero_volatility_has_no_time_value() {
        let params = GbmParams::new(0.0, 0.0, 100).unwrap();
        let ev = pool_time_ev(&pool(100.0, 100.0, 0.0), &params, 100, 16, 1).unwrap();
        assert!(ev.time_value.abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_sample_count() {
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        assert!(pool_time_ev(&pool(100.0, 100.0, 0.0), &params, 10, 1, 1).is_err());
    }

    #[test]
    fn one_day_pool_ev_matches_lvr_rate() {
        // Well-priced feeless pool over one day: total EV ≈ σ²/8 of
        // pool value per day = 3.125e-4 · 200.
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        let p = pool(100.0, 100.0, 0.0);
        let ev = pool_time_ev(&p, &params, 100, 40_000, 77).unwrap();
        let expected = 3.125e-4 * 200.0;
        assert!(
            (ev.total - expected).abs() < 3.0 * ev.std_error,
            "total {} expected {} se {}",
            ev.total,
            expected,
            ev.std_error
        );
        assert!(ev.intrinsic == 0.0);
    }

    #[test]
    fn order_time_value_collapses_at_zero_delta() {
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        let p = pool(100.0, 100.0, 0.0);
        let quote = p.simulate_swap(crate::amm::Side::BuyA, 10.0).unwrap().1;
        let order = UserOrder::new(OrderSide::SellB, 10.0, 0.99 * quote, 1).unwrap();
        let ev = order_time_ev(&p, &order, &params, 0, 100, 3).unwrap();
        assert_eq!(ev.time_value, 0.0);
        assert!(ev.intrinsic > 0.0);
    }

    #[test]
    fn order_time_value_grows_with_delta() {
        let params = GbmParams::new(0.0, 0.05, 100).unwrap();
        let p = pool(100.0, 100.0, 0.0);
        let quote = p.simulate_swap(crate::amm::Side::BuyA, 10.0).unwrap().1;
        let order = UserOrder::new(OrderSide::SellB, 10.0, 0.99 * quote, 1).unwrap();
        let mut prev = 0.0;
        let mut prev_se = 0.0;
        for delta in [10u32, 50, 250] {
            let ev = order_time_ev(&p, &order, &params, delta, 3_000, 9).unwrap();
            let combined = 3.0 * (prev_se * prev_se + ev.std_error * ev.std_error).sqrt();
            assert!(
                ev.time_value >= prev - combined,
                "delta {delta}: {} < {}",
                ev.time_value,
                prev
            );
            assert!(ev.time_value >= -3.0 * ev.std_error);
            prev = ev.time_value;
            prev_se = ev.std_error;
        }
        assert!(prev > 0.0);
    }

    #[test]
    fn atm_benchmark_values() {
        assert_eq!(atm_option_benchmark(100.0, 0.05, 0.0), 0.0);
        let v = atm_option_benchmark(100.0, 0.05, 1.0);
        assert!((v - 1.9947).abs() < 1e-3, "value {v}");
        // Square-root growth in the horizon.
        let ratio = atm_option_benchmark(100.0, 0.05, 4.0) / v;
        assert!((ratio - 2.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn atm_benchmark_matches_monte_carlo() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let (spot, sigma, horizon) = (100.0f64, 0.05f64, 1.0f64);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let s_t = spot * (-0.5 * sigma * sigma * horizon + sigma * horizon.sqrt() * z).exp();
            let payoff = (s_t - spot).max(0.0);
            sum += payoff;
            sumsq += payoff * payoff;
        }
        let mean = sum / n as f64;
        let var = (sumsq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let closed = atm_option_benchmark(spot, sigma, horizon);
        assert!(
            (closed - mean).abs() < 3.0 * se,
            "closed {closed} mc {mean} se {se}"
        );
    }
}

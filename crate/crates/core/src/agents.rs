//! Rational block-builder behaviors: per-block arbitrage against the
//! external reference price (with and without the retention hooks)
//! and sandwich/back-run optionality on a pending user order.
//!
//! Builder inventory is marked to the external price at block end;
//! there is no cross-block inventory risk.

use crate::amm::{PoolState, Side, Trade};
use crate::error::{Error, Result};
use crate::hooks::{AfterSwapOutcome, BeforeSwapOutcome, ProtectedPool};
use crate::search::{bisect_largest, golden_section_max};

/// Absolute tolerance on the front-run size search.
const FRONT_RUN_TOL: f64 = 1e-9;

/// Which token a user order sells into the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSide {
    SellA,
    SellB,
}

impl OrderSide {
    /// The pool-side view of the order: selling A buys B and vice
    /// versa.
    pub fn trade_side(self) -> Side {
        match self {
            OrderSide::SellA => Side::BuyB,
            OrderSide::SellB => Side::BuyA,
        }
    }
}

/// A pending user swap with its slippage limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserOrder {
    pub side: OrderSide,
    pub amount_in: f64,
    pub min_out: f64,
    pub submit_block: u64,
}

impl UserOrder {
    pub fn new(side: OrderSide, amount_in: f64, min_out: f64, submit_block: u64) -> Result<Self> {
        if !(amount_in.is_finite() && amount_in > 0.0) {
            return Err(Error::argument("order amount_in must be > 0"));
        }
        if !(min_out.is_finite() && min_out >= 0.0) {
            return Err(Error::argument("order min_out must be >= 0"));
        }
        Ok(UserOrder {
            side,
            amount_in,
            min_out,
            submit_block,
        })
    }
}

/// How the builder handles a pending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuilderAction {
    Sandwich,
    BackrunOnly,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuilderDecision {
    pub action: BuilderAction,
    pub front_run_size: f64,
    /// Total builder profit of the chosen action in token-B numeraire
    /// (including the plain realignment component).
    pub profit: f64,
}

/// One builder realignment on an unprotected pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolArb {
    pub profit: f64,
    pub trade: Option<Trade>,
}

/// One builder realignment driven through the hooks.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectedArb {
    pub profit: f64,
    pub hooks: Option<(BeforeSwapOutcome, AfterSwapOutcome)>,
}

/// Optimal arbitrage profit without mutating the pool.
fn arb_profit_only(pool: &PoolState, external_price: f64) -> f64 {
    match pool.arbitrage_trade(external_price) {
        Ok(Some(trade)) => trade.profit_at(external_price),
        _ => 0.0,
    }
}

/// Executes the optimal arbitrage and returns the builder profit.
fn arb_execute(pool: &mut PoolState, external_price: f64) -> f64 {
    match pool.arbitrage_trade(external_price) {
        Ok(Some(trade)) => {
            pool.swap_exact_in(trade.side, trade.amount_in)
                .expect("arbitrage trade must be executable");
            trade.profit_at(external_price)
        }
        _ => 0.0,
    }
}

/// Applies the profit-maximizing arbitrage to an unprotected pool.
/// With fee 0 the post-trade spot price equals `external_price`.
pub fn builder_arbitrage(pool: &mut PoolState, external_price: f64) -> Result<PoolArb> {
    let trade = pool.arbitrage_trade(external_price)?;
    match trade {
        Some(trade) => {
            pool.swap_exact_in(trade.side, trade.amount_in)?;
            Ok(PoolArb {
                profit: trade.profit_at(external_price),
                trade: Some(trade),
            })
        }
        None => Ok(PoolArb {
            profit: 0.0,
            trade: None,
        }),
    }
}

/// Runs the full-size realignment trade through the protected pool's
/// hook cycle. The trade is sized against the post-drain, post-re-add
/// pool state; only the rebate-discounted portion executes, so the
/// builder keeps just that portion's profit. Blocks with no
/// profitable realignment leave the pool untouched.
pub fn builder_arbitrage_protected(
    pp: &mut ProtectedPool,
    external_price: f64,
    current_block: u64,
) -> Result<ProtectedArb> {
    let preview = pp.preview_first_swap_pool();
    match preview.arbitrage_trade(external_price)? {
        Some(trade) => {
            let before = pp.before_swap(trade.side, trade.amount_in, current_block)?;
            let after = pp.after_swap(current_block)?;
            Ok(ProtectedArb {
                profit: before.executed.profit_at(external_price),
                hooks: Some((before, after)),
            })
        }
        None => Ok(ProtectedArb {
            profit: 0.0,
            hooks: None,
        }),
    }
}

/// Builder profit from front-running the order with `front_run`,
/// executing the order, then back-running to the external-price
/// aligned pool. Returns `NEG_INFINITY` when the order's slippage
/// limit would be violated.
fn sandwich_profit(
    pool: &PoolState,
    order: &UserOrder,
    external_price: f64,
    front_run: f64,
) -> f64 {
    let side = order.side.trade_side();
    let mut sim = *pool;
    let front_out = sim
        .swap_exact_in(side, front_run)
        .expect("front-run size must be non-negative");
    let user_out = sim
        .swap_exact_in(side, order.amount_in)
        .expect("order amount is positive");
    if user_out < order.min_out {
        return f64::NEG_INFINITY;
    }
    let front_leg = Trade {
        side,
        amount_in: front_run,
        amount_out: front_out,
    };
    front_leg.profit_at(external_price) + arb_execute(&mut sim, external_price)
}

/// Largest front-run size that still leaves the order fillable.
fn max_front_run(pool: &PoolState, order: &UserOrder) -> f64 {
    let side = order.side.trade_side();
    let fillable = |front_run: f64| -> bool {
        let mut sim = *pool;
        sim.swap_exact_in(side, front_run).expect("non-negative");
        let (_, out) = sim
            .simulate_swap(side, order.amount_in)
            .expect("order amount is positive");
        out >= order.min_out
    };
    // Exponential bracket, capped far beyond any profitable size.
    let scale = pool.reserve_a() * pool.spot_price() + pool.reserve_b();
    let cap = 1e6 * scale;
    let mut hi = scale.max(order.amount_in);
    while hi < cap && fillable(hi) {
        hi *= 2.0;
    }
    bisect_largest(fillable, 0.0, hi.min(cap), FRONT_RUN_TOL)
}

/// Evaluates Sandwich / BackrunOnly / Exclude and returns the
/// profit-maximal action. Ties prefer less interference
/// (Exclude over BackrunOnly over Sandwich). An order whose
/// slippage limit exceeds the un-front-run quote is unfillable and
/// treated as Exclude.
pub fn sandwich_decision(
    pool: &PoolState,
    order: &UserOrder,
    external_price: f64,
) -> Result<BuilderDecision> {
    if !(external_price.is_finite() && external_price > 0.0) {
        return Err(Error::argument("external_price must be > 0"));
    }
    let exclude_profit = arb_profit_only(pool, external_price);
    let mut best = BuilderDecision {
        action: BuilderAction::Exclude,
        front_run_size: 0.0,
        profit: exclude_profit,
    };

    let side = order.side.trade_side();
    let (_, quote) = pool.simulate_swap(side, order.amount_in)?;
    if quote < order.min_out {
        return Ok(best);
    }

    let backrun_profit = sandwich_profit(pool, order, external_price, 0.0);
    if backrun_profit > best.profit {
        best = BuilderDecision {
            action: BuilderAction::BackrunOnly,
            front_run_size: 0.0,
            profit: backrun_profit,
        };
    }

    let fr_max = max_front_run(pool, order);
    if fr_max > FRONT_RUN_TOL {
        let (fr_star, profit_star) = golden_section_max(
            |fr| sandwich_profit(pool, order, external_price, fr),
            0.0,
            fr_max,
            FRONT_RUN_TOL,
        );
        if fr_star > FRONT_RUN_TOL && profit_star > best.profit {
            best = BuilderDecision {
                action: BuilderAction::Sandwich,
                front_run_size: fr_star,
                profit: profit_star,
            };
        }
    }
    Ok(best)
}

/// Best builder profit with the order minus best profit without it.
/// Nonnegative by the exclusion option.
pub fn order_marginal_value(
    pool: &PoolState,
    order: &UserOrder,
    external_price: f64,
) -> Result<f64> {
    let decision = sandwich_decision(pool, order, external_price)?;
    let baseline = arb_profit_only(pool, external_price);
    Ok((decision.profit - baseline).max(0.0))
}

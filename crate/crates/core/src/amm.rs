//! Constant-product market maker: swap execution, closed-form
//! arbitrage, and valuation primitives.
//!
//! Reserves are real-valued (`f64`); the simulations here are
//! continuous-price experiments, not contract-level integer
//! arithmetic. Prices are quoted as token B per token A throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which token the trader receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Trader pays token B, receives token A.
    BuyA,
    /// Trader pays token A, receives token B.
    BuyB,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::BuyA => Side::BuyB,
            Side::BuyB => Side::BuyA,
        }
    }
}

/// An executed or proposed swap: input amount paid in, output amount
/// received, on the given side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub side: Side,
    pub amount_in: f64,
    pub amount_out: f64,
}

impl Trade {
    /// Trader profit in token-B numeraire when the output leg is
    /// marked at `external_price`.
    pub fn profit_at(&self, external_price: f64) -> f64 {
        match self.side {
            Side::BuyA => self.amount_out * external_price - self.amount_in,
            Side::BuyB => self.amount_out - self.amount_in * external_price,
        }
    }
}

/// Constant-product pool `x · y = k` with an input-side fee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolState {
    reserve_a: f64,
    reserve_b: f64,
    fee: f64,
}

impl PoolState {
    /// Creates a pool. Reserves must be strictly positive and the fee
    /// must lie in `[0, 1)`.
    pub fn new(reserve_a: f64, reserve_b: f64, fee: f64) -> Result<Self> {
        if !(reserve_a.is_finite() && reserve_a > 0.0) {
            return Err(Error::config("reserve_a", "must be > 0"));
        }
        if !(reserve_b.is_finite() && reserve_b > 0.0) {
            return Err(Error::config("reserve_b", "must be > 0"));
        }
        if !(fee.is_finite() && (0.0..1.0).contains(&fee)) {
            return Err(Error::config("fee", "must be in [0, 1)"));
        }
        Ok(PoolState {
            reserve_a,
            reserve_b,
            fee,
        })
    }

    pub fn reserve_a(&self) -> f64 {
        self.reserve_a
    }

    pub fn reserve_b(&self) -> f64 {
        self.reserve_b
    }

    pub fn fee(&self) -> f64 {
        self.fee
    }

    /// Spot price, token B per token A.
    pub fn spot_price(&self) -> f64 {
        self.reserve_b / self.reserve_a
    }

    /// The invariant `k = x · y`.
    pub fn k(&self) -> f64 {
        self.reserve_a * self.reserve_b
    }

    /// Pool value in token-B numeraire at an external price.
    pub fn value_at(&self, external_price: f64) -> f64 {
        self.reserve_a * external_price + self.reserve_b
    }

    /// Executes a swap, charging the fee on the input side. The full
    /// input is added to reserves; only `amount_in · (1 − fee)`
    /// participates in the output calculation (Uniswap-V2 convention).
    /// A zero-amount swap is a legal no-op.
    pub fn swap_exact_in(&mut self, side: Side, amount_in: f64) -> Result<f64> {
        let (new_a, new_b, out) = self.swap_result(side, amount_in)?;
        self.reserve_a = new_a;
        self.reserve_b = new_b;
        Ok(out)
    }

    /// Post-swap spot price and output the pool WOULD have after the
    /// full swap, without mutating state.
    pub fn simulate_swap(&self, side: Side, amount_in: f64) -> Result<(f64, f64)> {
        let (new_a, new_b, out) = self.swap_result(side, amount_in)?;
        Ok((new_b / new_a, out))
    }

    /// Direct reserve transfer used by the hook machinery (hedger
    /// drains, vault re-adds and rebalances). Reserves must stay
    /// strictly positive.
    pub(crate) fn adjust_reserves(&mut self, delta_a: f64, delta_b: f64) {
        self.reserve_a += delta_a;
        self.reserve_b += delta_b;
        debug_assert!(self.reserve_a > 0.0 && self.reserve_b > 0.0);
    }

    /// Post-swap reserves without mutating state. Shared by execution
    /// and simulation so both follow bit-identical arithmetic.
    pub(crate) fn swap_result(&self, side: Side, amount_in: f64) -> Result<(f64, f64, f64)> {
        if !(amount_in.is_finite() && amount_in >= 0.0) {
            return Err(Error::argument("amount_in must be >= 0"));
        }
        if amount_in == 0.0 {
            return Ok((self.reserve_a, self.reserve_b, 0.0));
        }
        let in_eff = amount_in * (1.0 - self.fee);
        match side {
            Side::BuyA => {
                let out = self.reserve_a * in_eff / (self.reserve_b + in_eff);
                Ok((self.reserve_a - out, self.reserve_b + amount_in, out))
            }
            Side::BuyB => {
                let out = self.reserve_b * in_eff / (self.reserve_a + in_eff);
                Ok((self.reserve_a + amount_in, self.reserve_b - out, out))
            }
        }
    }

    /// The profit-maximizing arbitrage against an external price, or
    /// `None` when no trade earns a positive profit (the pool is
    /// inside the no-arbitrage band).
    ///
    /// For input `d` of token B with fee factor `g = 1 − fee`, profit
    /// `p·x·g·d/(y + g·d) − d` is maximized at
    /// `d* = (sqrt(p·x·y·g) − y)/g`, and symmetrically on the other
    /// side. With fee 0 the post-trade reserves are
    /// `(sqrt(k/p), sqrt(k·p))`.
    pub fn arbitrage_trade(&self, external_price: f64) -> Result<Option<Trade>> {
        if !(external_price.is_finite() && external_price > 0.0) {
            return Err(Error::argument("external_price must be > 0"));
        }
        let g = 1.0 - self.fee;
        let (x, y, p) = (self.reserve_a, self.reserve_b, external_price);

        let candidate = |side: Side| -> Option<Trade> {
            let d = match side {
                Side::BuyA => ((p * x * y * g).sqrt() - y) / g,
                Side::BuyB => ((x * y * g / p).sqrt() - x) / g,
            };
            if d <= 0.0 {
                return None;
            }
            let (_, _, out) = self.swap_result(side, d).ok()?;
            let trade = Trade {
                side,
                amount_in: d,
                amount_out: out,
            };
            (trade.profit_at(p) > 0.0).then_some(trade)
        };

        Ok(candidate(Side::BuyA).or_else(|| candidate(Side::BuyB)))
    }
}

/// Mark-to-market value of untraded initial reserves.
pub fn hodl_value(initial_a: f64, initial_b: f64, external_price: f64) -> f64 {
    initial_a * external_price + initial_b
}

//! The protected pool: a rebate-discounted first swap per block, a
//! hedger budget contract gating intra-block swaps, and a vault that
//! retains and re-adds LVR proceeds.
//!
//! Hook protocol per block: the first swap triggers
//! `hedger.drain()` and `vault.re_add()` before the swap, executes
//! only `1 − beta(gap)` of the requested input, and records the true
//! price a full-size swap would have produced; `after_swap` then
//! rebalances the pool to that true price, crediting the removed
//! tokens to the vault. Later swaps in the same block execute only
//! when the hedge budget covers the output side.

use crate::amm::{PoolState, Side, Trade};
use crate::error::{Error, Result};

/// Identifier for the agent owning hedger deposits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentId(pub u64);

/// Per-block-gap rebate fractions `beta(1..=Z)`, strictly decreasing
/// with `beta(Z) = 0`. The all-zero schedule is the degenerate no-op
/// protection.
#[derive(Debug, Clone, PartialEq)]
pub struct RebateSchedule {
    values: Vec<f64>,
}

impl RebateSchedule {
    /// Builds a schedule from explicit values for gaps `1..=Z`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("rebate_z", "must be >= 1"));
        }
        if values
            .iter()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::config("beta", "values must be in [0, 1]"));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(Error::config("beta", "beta(Z) must be 0"));
        }
        let all_zero = values.iter().all(|v| *v == 0.0);
        if !all_zero && values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::config("beta", "must be strictly decreasing"));
        }
        Ok(RebateSchedule { values })
    }

    /// Constant-at-1 schedule shape used by the experiments:
    /// `beta(1) = beta1` with a linear tail down to `beta(Z) = 0`.
    pub fn linear(beta1: f64, horizon_z: u32) -> Result<Self> {
        if !(beta1.is_finite() && (0.0..=1.0).contains(&beta1)) {
            return Err(Error::config("rebate_beta1", "must be in [0, 1]"));
        }
        if horizon_z == 0 {
            return Err(Error::config("rebate_z", "must be >= 1"));
        }
        if beta1 == 0.0 {
            return Ok(RebateSchedule {
                values: vec![0.0; horizon_z as usize],
            });
        }
        if horizon_z < 2 {
            return Err(Error::config(
                "rebate_z",
                "must be >= 2 when rebate_beta1 > 0",
            ));
        }
        let z = f64::from(horizon_z);
        let values = (1..=horizon_z)
            .map(|g| beta1 * (z - f64::from(g)) / (z - 1.0))
            .collect();
        Ok(RebateSchedule { values })
    }

    pub fn horizon_z(&self) -> u32 {
        self.values.len() as u32
    }

    /// `beta(gap)` for `gap < Z`, 0 for `gap >= Z`. A gap of 0 is a
    /// same-block query and is rejected.
    pub fn rebate(&self, gap: u64) -> Result<f64> {
        if gap == 0 {
            return Err(Error::argument("rebate gap must be >= 1"));
        }
        Ok(self
            .values
            .get(gap as usize - 1)
            .copied()
            .unwrap_or(0.0))
    }
}

/// Hedging contract: physical balances plus the attestation budgets
/// the pool may sell against within a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgerState {
    balance_a: f64,
    balance_b: f64,
    hedge_available_a: f64,
    hedge_available_b: f64,
    owner: Option<AgentId>,
}

impl HedgerState {
    pub fn empty() -> Self {
        HedgerState {
            balance_a: 0.0,
            balance_b: 0.0,
            hedge_available_a: 0.0,
            hedge_available_b: 0.0,
            owner: None,
        }
    }

    pub fn balances(&self) -> (f64, f64) {
        (self.balance_a, self.balance_b)
    }

    pub fn budgets(&self) -> (f64, f64) {
        (self.hedge_available_a, self.hedge_available_b)
    }

    pub fn owner(&self) -> Option<AgentId> {
        self.owner
    }

    /// Deposits raise balances and budgets alike and take ownership.
    pub fn deposit(&mut self, amount_a: f64, amount_b: f64, depositor: AgentId) -> Result<()> {
        if amount_a < 0.0 || amount_b < 0.0 {
            return Err(Error::argument("deposit amounts must be >= 0"));
        }
        self.balance_a += amount_a;
        self.balance_b += amount_b;
        self.hedge_available_a += amount_a;
        self.hedge_available_b += amount_b;
        self.owner = Some(depositor);
        Ok(())
    }

    /// Withdrawals must be covered by both budgets and balances.
    pub fn withdraw(&mut self, amount_a: f64, amount_b: f64) -> Result<()> {
        if amount_a < 0.0 || amount_b < 0.0 {
            return Err(Error::argument("withdraw amounts must be >= 0"));
        }
        if amount_a > self.hedge_available_a
            || amount_b > self.hedge_available_b
            || amount_a > self.balance_a
            || amount_b > self.balance_b
        {
            return Err(Error::InsufficientHedgeBudget);
        }
        self.balance_a -= amount_a;
        self.balance_b -= amount_b;
        self.hedge_available_a -= amount_a;
        self.hedge_available_b -= amount_b;
        Ok(())
    }

    /// Moves all balances into the pool and zeroes the budgets.
    /// Returns the transferred amounts.
    pub fn drain_into(&mut self, pool: &mut PoolState) -> (f64, f64) {
        let (a, b) = (self.balance_a, self.balance_b);
        if a > 0.0 || b > 0.0 {
            pool.adjust_reserves(a, b);
        }
        self.balance_a = 0.0;
        self.balance_b = 0.0;
        self.hedge_available_a = 0.0;
        self.hedge_available_b = 0.0;
        (a, b)
    }
}

/// Retained tokens awaiting re-addition, with the per-call tranche
/// policy (`pct_to_re_add` plus fixed minimums that guarantee the
/// vault eventually empties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaultState {
    balance_a: f64,
    balance_b: f64,
    pct_to_re_add: f64,
    min_re_add_a: f64,
    min_re_add_b: f64,
}

/// Flows of one re-add call: `tranche_*` leaves the vault,
/// `added_*` enters the pool, and the difference per token is
/// exchanged with the conversion counterparty at the pool price.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReAddRecord {
    pub tranche_a: f64,
    pub tranche_b: f64,
    pub added_a: f64,
    pub added_b: f64,
}

impl VaultState {
    pub fn new(pct_to_re_add: f64, min_re_add_a: f64, min_re_add_b: f64) -> Result<Self> {
        if !(pct_to_re_add.is_finite() && (0.0..=1.0).contains(&pct_to_re_add)) {
            return Err(Error::config("readd_pct", "must be in [0, 1]"));
        }
        if min_re_add_a < 0.0 || min_re_add_b < 0.0 {
            return Err(Error::config("readd_min", "must be >= 0"));
        }
        Ok(VaultState {
            balance_a: 0.0,
            balance_b: 0.0,
            pct_to_re_add,
            min_re_add_a,
            min_re_add_b,
        })
    }

    /// A vault starting with seeded balances.
    pub fn with_balances(
        balance_a: f64,
        balance_b: f64,
        pct_to_re_add: f64,
        min_re_add_a: f64,
        min_re_add_b: f64,
    ) -> Result<Self> {
        if balance_a < 0.0 || balance_b < 0.0 {
            return Err(Error::argument("vault balances must be >= 0"));
        }
        let mut vault = Self::new(pct_to_re_add, min_re_add_a, min_re_add_b)?;
        vault.balance_a = balance_a;
        vault.balance_b = balance_b;
        Ok(vault)
    }

    pub fn balances(&self) -> (f64, f64) {
        (self.balance_a, self.balance_b)
    }

    pub fn pct_to_re_add(&self) -> f64 {
        self.pct_to_re_add
    }

    fn tranche(balance: f64, pct: f64, minimum: f64) -> f64 {
        balance.min((pct * balance).max(minimum))
    }

    /// Re-adds one tranche into the pool as price-preserving
    /// liquidity: the tranche's value at the current spot price is
    /// injected with both reserves scaled by the same factor.
    pub fn re_add(&mut self, pool: &mut PoolState) -> ReAddRecord {
        let tranche_a = Self::tranche(self.balance_a, self.pct_to_re_add, self.min_re_add_a);
        let tranche_b = Self::tranche(self.balance_b, self.pct_to_re_add, self.min_re_add_b);
        let spot = pool.spot_price();
        let value = tranche_a * spot + tranche_b;
        if value <= 0.0 {
            return ReAddRecord::default();
        }
        let added_a = value / (2.0 * spot);
        let added_b = value / 2.0;
        pool.adjust_reserves(added_a, added_b);
        self.balance_a -= tranche_a;
        self.balance_b -= tranche_b;
        ReAddRecord {
            tranche_a,
            tranche_b,
            added_a,
            added_b,
        }
    }

    /// Removes the token being bought from the pool until the spot
    /// price equals `true_price`, crediting the removed tokens to the
    /// vault. Returns `(removed_a, removed_b)`.
    pub fn rebalance(&mut self, pool: &mut PoolState, true_price: f64) -> Result<(f64, f64)> {
        if !(true_price.is_finite() && true_price > 0.0) {
            return Err(Error::argument("true_price must be > 0"));
        }
        let (x, y) = (pool.reserve_a(), pool.reserve_b());
        let spot = y / x;
        if spot < true_price {
            let q = (x - y / true_price).max(0.0);
            pool.adjust_reserves(-q, 0.0);
            self.balance_a += q;
            Ok((q, 0.0))
        } else if spot > true_price {
            let q = (y - x * true_price).max(0.0);
            pool.adjust_reserves(0.0, -q);
            self.balance_b += q;
            Ok((0.0, q))
        } else {
            Ok((0.0, 0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    FirstSwap {
        true_price: f64,
        sim_reserve_a: f64,
        sim_reserve_b: f64,
    },
    SameBlock {
        side: Side,
        amount_in: f64,
        amount_out: f64,
    },
}

/// Executed-portion record of a `before_swap` call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeforeSwapOutcome {
    /// The portion of the requested swap that actually executed.
    pub executed: Trade,
    /// Rebate fraction applied (0 for same-block swaps).
    pub rebate: f64,
    /// Hedger balances drained into the pool (first swaps only).
    pub drained_a: f64,
    pub drained_b: f64,
    /// Vault re-add flows (first swaps only).
    pub re_add: Option<ReAddRecord>,
}

/// Outcome of an `after_swap` call: tokens moved from the pool into
/// the vault by the rebalance (zero for same-block swaps).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AfterSwapOutcome {
    pub retained_a: f64,
    pub retained_b: f64,
}

/// The composite protected pool driven through paired
/// `before_swap`/`after_swap` hook calls.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectedPool {
    pool: PoolState,
    hedger: HedgerState,
    vault: VaultState,
    schedule: RebateSchedule,
    b_previous: u64,
    pending: Option<Pending>,
}

impl ProtectedPool {
    pub fn new(pool: PoolState, schedule: RebateSchedule, vault: VaultState) -> Self {
        ProtectedPool {
            pool,
            hedger: HedgerState::empty(),
            vault,
            schedule,
            b_previous: 0,
            pending: None,
        }
    }

    pub fn pool(&self) -> &PoolState {
        &self.pool
    }

    pub fn hedger(&self) -> &HedgerState {
        &self.hedger
    }

    pub fn vault(&self) -> &VaultState {
        &self.vault
    }

    pub fn schedule(&self) -> &RebateSchedule {
        &self.schedule
    }

    pub fn b_previous(&self) -> u64 {
        self.b_previous
    }

    /// The true price recorded by a first-swap `before_swap`, present
    /// exactly while that swap is mid-flight.
    pub fn pending_true_price(&self) -> Option<f64> {
        match self.pending {
            Some(Pending::FirstSwap { true_price, .. }) => Some(true_price),
            _ => None,
        }
    }

    pub fn deposit_hedge(&mut self, amount_a: f64, amount_b: f64, depositor: AgentId) -> Result<()> {
        self.hedger.deposit(amount_a, amount_b, depositor)
    }

    pub fn withdraw_hedge(&mut self, amount_a: f64, amount_b: f64) -> Result<()> {
        self.hedger.withdraw(amount_a, amount_b)
    }

    /// Pool state a first swap would trade against, i.e. after the
    /// hedger drain and vault re-add but before the swap itself.
    /// Used by builders to size the realignment trade.
    pub fn preview_first_swap_pool(&self) -> PoolState {
        let mut pool = self.pool;
        let mut hedger = self.hedger;
        let mut vault = self.vault;
        hedger.drain_into(&mut pool);
        vault.re_add(&mut pool);
        pool
    }

    pub fn before_swap(
        &mut self,
        side: Side,
        amount_in: f64,
        current_block: u64,
    ) -> Result<BeforeSwapOutcome> {
        if self.pending.is_some() {
            return Err(Error::HookMisuse("before_swap while a swap is mid-flight"));
        }
        if current_block < self.b_previous {
            return Err(Error::argument("current_block precedes last swap block"));
        }
        let gap = current_block - self.b_previous;
        if gap > 0 {
            let (drained_a, drained_b) = self.hedger.drain_into(&mut self.pool);
            let re_add = self.vault.re_add(&mut self.pool);
            let rebate = self.schedule.rebate(gap)?;
            let (sim_a, sim_b, _) = self.pool.swap_result(side, amount_in)?;
            let true_price = sim_b / sim_a;
            let executed_in = (1.0 - rebate) * amount_in;
            let amount_out = self.pool.swap_exact_in(side, executed_in)?;
            self.pending = Some(Pending::FirstSwap {
                true_price,
                sim_reserve_a: sim_a,
                sim_reserve_b: sim_b,
            });
            Ok(BeforeSwapOutcome {
                executed: Trade {
                    side,
                    amount_in: executed_in,
                    amount_out,
                },
                rebate,
                drained_a,
                drained_b,
                re_add: Some(re_add),
            })
        } else {
            let (_, _, amount_out) = self.pool.swap_result(side, amount_in)?;
            let (avail_a, avail_b) = self.hedger.budgets();
            let available = match side {
                Side::BuyA => avail_a,
                Side::BuyB => avail_b,
            };
            if !(available >= amount_out && amount_out > 0.0) {
                return Err(Error::PriceNotAttested {
                    available,
                    required: amount_out,
                });
            }
            let amount_out = self.pool.swap_exact_in(side, amount_in)?;
            self.pending = Some(Pending::SameBlock {
                side,
                amount_in,
                amount_out,
            });
            Ok(BeforeSwapOutcome {
                executed: Trade {
                    side,
                    amount_in,
                    amount_out,
                },
                rebate: 0.0,
                drained_a: 0.0,
                drained_b: 0.0,
                re_add: None,
            })
        }
    }

    pub fn after_swap(&mut self, current_block: u64) -> Result<AfterSwapOutcome> {
        let pending = self
            .pending
            .take()
            .ok_or(Error::HookMisuse("after_swap without before_swap"))?;
        match pending {
            Pending::FirstSwap {
                true_price,
                sim_reserve_a,
                sim_reserve_b,
            } => {
                // A fully-executed swap (rebate 0) already sits at the
                // true price bit-for-bit; skip the rebalance so the
                // degenerate schedule reproduces the unprotected trace
                // exactly.
                let aligned = self.pool.reserve_a() == sim_reserve_a
                    && self.pool.reserve_b() == sim_reserve_b;
                let (retained_a, retained_b) = if aligned {
                    (0.0, 0.0)
                } else {
                    self.vault.rebalance(&mut self.pool, true_price)?
                };
                self.b_previous = current_block;
                Ok(AfterSwapOutcome {
                    retained_a,
                    retained_b,
                })
            }
            Pending::SameBlock {
                side,
                amount_in,
                amount_out,
            } => {
                match side {
                    Side::BuyA => {
                        self.hedger.hedge_available_a -= amount_out;
                        self.hedger.hedge_available_b += amount_in;
                    }
                    Side::BuyB => {
                        self.hedger.hedge_available_b -= amount_out;
                        self.hedger.hedge_available_a += amount_in;
                    }
                }
                Ok(AfterSwapOutcome::default())
            }
        }
    }
}

//! Simulation laboratory for LVR retention on constant-product pools.
//!
//! The crate is organized around a small state-machine core and the
//! experiment campaigns built on top of it:
//!
//! * [`amm`] — constant-product pool, swaps, closed-form arbitrage,
//!   valuation primitives.
//! * [`stochastic`] — geometric-Brownian reference price with
//!   deterministic per-path random streams.
//! * [`hooks`] — the protected pool: per-block swap rebate, hedger
//!   budgets, and the vault that retains and re-adds LVR proceeds.
//! * [`agents`] — rational block-builder behaviors (arbitrage,
//!   sandwich/back-run optionality on a pending order).
//! * [`ev`] — extractable value priced as an option: intrinsic vs.
//!   time decomposition and state classification.
//! * [`experiments`] — the retention, re-add-sweep, block-time-sweep
//!   and delay-sweep campaigns with machine-readable reports.

pub mod agents;
pub mod amm;
pub mod error;
pub mod ev;
pub mod experiments;
pub mod hooks;
pub mod search;
pub mod stochastic;

pub use error::{Error, Result};

//! Favor-exchange networks under bilateral grim-trigger enforcement.
//!
//! Payoffs, link sustainability and the cooperation bound, strong stability with and
//! without transfers, enforcement comparisons, a seeded simulator and brute-force
//! small-graph oracles.

// Validation uses `!(x < y)` so that NaN inputs fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod document;
pub mod enforcement;
pub mod error;
pub mod network;
pub mod oracle;
pub mod payoff;
pub mod simulate;
pub mod society;
pub mod stability;
pub mod strong;

pub use error::{Error, Result};
pub use network::Network;
pub use society::{FavorMatrix, PlayerType, Society, SocietyParams};

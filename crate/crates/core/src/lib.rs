//! Counterparty-credit-risk exposure engine for accumulator derivatives.
//!
//! Three pricing routes share one contract description:
//!
//! * discrete Black–Scholes (`Bsd`): realized fixings along simulated paths
//!   plus closed-form vanilla legs for the fixings still to come;
//! * continuous Black–Scholes (`Bsc`): the same structure on a fine fixing
//!   grid that approximates continuous monitoring;
//! * local time (`Lt`): the continuously monitored payoff rewritten as a
//!   space integral against the expected local time of the underlying.
//!
//! [`exposure`] turns fair values into regulatory exposure measures.

pub mod error;
pub mod exposure;
pub mod local_time;
pub mod market_model;
pub mod pricing;
pub mod quadrature;
pub mod simulation;

pub use error::{Axis, Error, Result};

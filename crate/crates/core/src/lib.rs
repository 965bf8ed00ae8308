//! Inverse statistics of daily price series.
//!
//! The crate measures first-passage (investment horizon) distributions of a
//! log-price series, and uses random block permutations of the daily returns
//! ("time-window shuffling") to find the time-scale of the higher-order
//! autocorrelations behind the gain-loss asymmetry.
//!
//! Layout:
//! - [`market_data`]: price ingestion, log series, daily returns, eras.
//! - [`rng`] and [`synth`]: reproducible random streams and synthetic returns.
//! - [`inverse_stats`]: first-passage times, histograms, modes, scaling fits.
//! - [`shuffler`]: window partitioning, block shuffles, permutation sweeps.
//! - [`asymmetry`]: asymmetry measures over window lengths and θ fits.
//! - [`leverage`]: return / future-volatility correlation function.
//! - [`fitting`]: ordinary least squares on transformed coordinates.
//! - [`cli`]: the command line front end.

pub mod asymmetry;
pub mod cli;
pub mod error;
pub mod fitting;
pub mod inverse_stats;
pub mod leverage;
pub mod market_data;
pub mod rng;
pub mod shuffler;
pub mod synth;

pub use error::{Error, Result};

#![allow(dead_code)]

use gainloss::market_data::ReturnSeries;
use gainloss::rng::{purpose, RngStream};
use gainloss::synth::gen_gaussian_returns;

/// Alternating 25-day regimes: calm days drift up with low volatility,
/// stressed days drift down with high volatility. The mean return is zero,
/// and gains are slow while losses are fast, on a common 25-day scale.
pub fn regime_series(n: usize, seed: u64) -> ReturnSeries {
    let z = gen_gaussian_returns(n, 1.0, &RngStream::new(seed, vec![purpose::GAUSSIAN])).unwrap();
    let v = z
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| if i % 50 < 25 { 0.001 + 0.006 * x } else { -0.001 + 0.014 * x })
        .collect();
    ReturnSeries::new(v).unwrap()
}

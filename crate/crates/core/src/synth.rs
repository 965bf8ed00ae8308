//! Synthetic daily returns with known statistics.
//!
//! - Gaussian i.i.d. returns: the log-price is a discrete random walk with
//!   diffusion constant `D = sigma^2 / 2` per day, so the Brownian
//!   first-passage law applies with that `D`.
//! - Scaled Student-t returns (the fat-tailed "STT" index).
//! - Gaussian returns with planted drop/rebound episodes, a process with a
//!   known correlation length.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::ReturnSeries;
use crate::rng::{purpose, RngStream};

/// Default length of a synthetic series when no reference data is given.
pub const DEFAULT_LENGTH: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    Gaussian {
        sigma: f64,
    },
    StudentT {
        nu: f64,
        scale: f64,
    },
    DropRebound {
        sigma: f64,
        drop_magnitude: f64,
        rebound_len: usize,
        drop_prob: f64,
    },
}

impl SynthKind {
    pub fn student_t_default() -> Self {
        SynthKind::StudentT {
            nu: 3.0,
            scale: 0.01,
        }
    }

    pub fn drop_rebound_default() -> Self {
        SynthKind::DropRebound {
            sigma: 0.01,
            drop_magnitude: 0.05,
            rebound_len: 10,
            drop_prob: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub kind: SynthKind,
    pub n: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation("synthetic series needs n >= 2"));
        }
        match self.kind {
            SynthKind::Gaussian { sigma } => check_sigma(sigma),
            SynthKind::StudentT { nu, scale } => check_student_t(nu, scale),
            SynthKind::DropRebound {
                sigma,
                drop_magnitude,
                rebound_len,
                drop_prob,
            } => check_drop_rebound(sigma, drop_magnitude, rebound_len, drop_prob),
        }
    }

    pub fn generate(&self) -> Result<ReturnSeries> {
        self.validate()?;
        match self.kind {
            SynthKind::Gaussian { sigma } => {
                gen_gaussian_returns(self.n, sigma, &RngStream::new(self.seed, [purpose::GAUSSIAN]))
            }
            SynthKind::StudentT { nu, scale } => gen_student_t_returns(
                self.n,
                nu,
                scale,
                &RngStream::new(self.seed, [purpose::STUDENT_T]),
            ),
            SynthKind::DropRebound {
                sigma,
                drop_magnitude,
                rebound_len,
                drop_prob,
            } => gen_drop_rebound_returns(
                self.n,
                sigma,
                drop_magnitude,
                rebound_len,
                drop_prob,
                &RngStream::new(self.seed, [purpose::DROP_REBOUND]),
            ),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(())
}

fn check_student_t(nu: f64, scale: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 2.0) {
        return Err(Error::validation(format!(
            "student-t shape nu must exceed 2 for finite variance, got {nu}"
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::validation(format!("scale must be > 0, got {scale}")));
    }
    Ok(())
}

fn check_drop_rebound(sigma: f64, drop: f64, rebound_len: usize, prob: f64) -> Result<()> {
    check_sigma(sigma)?;
    if !drop.is_finite() {
        return Err(Error::validation("drop magnitude must be finite"));
    }
    if rebound_len < 1 {
        return Err(Error::validation("rebound_len must be >= 1"));
    }
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::validation(format!(
            "drop probability must lie in [0, 1), got {prob}"
        )));
    }
    Ok(())
}

/// Variance of the unscaled Student-t distribution, `nu / (nu - 2)`.
pub fn student_t_variance(nu: f64) -> Result<f64> {
    check_student_t(nu, 1.0)?;
    Ok(nu / (nu - 2.0))
}

pub fn gen_gaussian_returns(n: usize, sigma: f64, stream: &RngStream) -> Result<ReturnSeries> {
    check_sigma(sigma)?;
    let mut rng = stream.rng();
    let r = (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ReturnSeries::new(r)
}

/// `scale * Z / sqrt(V / nu)` with `Z ~ N(0, 1)` and `V ~ chi^2(nu)`.
pub fn gen_student_t_returns(
    n: usize,
    nu: f64,
    scale: f64,
    stream: &RngStream,
) -> Result<ReturnSeries> {
    check_student_t(nu, scale)?;
    let chi2 = ChiSquared::new(nu).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = stream.rng();
    let r = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let v = chi2.sample(&mut rng);
            scale * z / (v / nu).sqrt()
        })
        .collect();
    ReturnSeries::new(r)
}

/// Gaussian baseline plus injected episodes: a drop of `-drop_magnitude`
/// followed by `rebound_len` days of `+drop_magnitude / rebound_len`.
pub fn gen_drop_rebound_returns(
    n: usize,
    sigma: f64,
    drop_magnitude: f64,
    rebound_len: usize,
    drop_prob: f64,
    stream: &RngStream,
) -> Result<ReturnSeries> {
    let (baseline, injected) =
        drop_rebound_parts(n, sigma, drop_magnitude, rebound_len, drop_prob, stream)?;
    ReturnSeries::new(baseline.iter().zip(&injected).map(|(b, i)| b + i).collect())
}

/// Returns `(baseline, injected)` separately; their sum is the series.
pub fn drop_rebound_parts(
    n: usize,
    sigma: f64,
    drop_magnitude: f64,
    rebound_len: usize,
    drop_prob: f64,
    stream: &RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_drop_rebound(sigma, drop_magnitude, rebound_len, drop_prob)?;
    let mut rng = stream.rng();
    let rebound = drop_magnitude / rebound_len as f64;
    let mut baseline = Vec::with_capacity(n);
    let mut injected = vec![0.0; n];
    let mut remaining = 0usize;
    for t in 0..n {
        baseline.push(sigma * rng.sample::<f64, _>(StandardNormal));
        if remaining > 0 {
            injected[t] = rebound;
            remaining -= 1;
        } else {
            let u: f64 = rng.random();
            // only start an episode whose rebound fits inside the series
            if u < drop_prob && t + rebound_len < n {
                injected[t] = -drop_magnitude;
                remaining = rebound_len;
            }
        }
    }
    Ok((baseline, injected))
}

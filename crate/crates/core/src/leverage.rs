//! Leverage correlation between past returns and future squared returns:
//!
//! `L(tau) = <r(t) * r(t + tau)^2> / <r^2>^2`
//!
//! The numerator averages over every `t` with both `t` and `t + tau` inside
//! the series; the denominator is the squared mean of `r^2` over the whole
//! series. Negative `tau` correlates a return with earlier squared returns.
//!
//! Other normalizations are in use elsewhere (e.g. dividing by `<r^2>` per
//! lag, or `<r^2>^{3/2}` to make `L` scale free). This one makes `L` scale
//! as `1 / c` under `r -> c r`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::ReturnSeries;

/// Lags with fewer product terms are flagged unreliable.
pub const MIN_TERMS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeveragePoint {
    pub tau: i64,
    pub value: f64,
    pub stderr: f64,
    pub n_terms: usize,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageCurve {
    /// Return horizon in days; daily returns give 1.
    pub dt: usize,
    pub points: Vec<LeveragePoint>,
}

impl LeverageCurve {
    pub fn at(&self, tau: i64) -> Option<&LeveragePoint> {
        self.points.iter().find(|p| p.tau == tau)
    }

    /// Mean of `L` over `[lo, hi]` with the standard error of that mean,
    /// treating the per-lag estimates as independent.
    pub fn mean_over(&self, lo: i64, hi: i64) -> Option<(f64, f64)> {
        let pts: Vec<&LeveragePoint> = self.points.iter().filter(|p| p.tau >= lo && p.tau <= hi).collect();
        if pts.is_empty() {
            return None;
        }
        let n = pts.len() as f64;
        let mean = pts.iter().map(|p| p.value).sum::<f64>() / n;
        let se = pts.iter().map(|p| p.stderr * p.stderr).sum::<f64>().sqrt() / n;
        Some((mean, se))
    }

    /// `tau,L,stderr,n_terms`.
    pub fn write_csv<W: Write>(&self, mut out: W, sigma: f64) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(out, "# sigma={} dt={}", sigma, self.dt).map_err(io)?;
        writeln!(out, "tau,L,stderr,n_terms").map_err(io)?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.tau, p.value, p.stderr, p.n_terms).map_err(io)?;
        }
        Ok(())
    }
}

/// `L(tau)` for every lag in `[tau_lo, tau_hi]`, with standard errors from
/// the sample variance of the per-term products.
pub fn leverage(r: &ReturnSeries, tau_lo: i64, tau_hi: i64) -> Result<LeverageCurve> {
    if tau_lo > tau_hi {
        return Err(Error::validation(format!("empty lag range [{tau_lo}, {tau_hi}]")));
    }
    let v = r.values();
    let n = v.len();
    if n < 2 {
        return Err(Error::validation("leverage needs at least 2 returns"));
    }
    let m2 = v.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if m2 == 0.0 {
        return Err(Error::Computation("all returns are zero".into()));
    }
    let denom = m2 * m2;
    let points = (tau_lo..=tau_hi)
        .map(|tau| {
            let shift = tau.unsigned_abs() as usize;
            let terms = n.saturating_sub(shift);
            let (lead, lag): (&[f64], &[f64]) = if tau >= 0 {
                (&v[..terms], &v[shift.min(n)..])
            } else {
                (&v[shift.min(n)..], &v[..terms])
            };
            let products = lead.iter().zip(lag).map(|(a, b)| a * b * b);
            let (mean, stderr) = mean_and_stderr(products, terms);
            LeveragePoint {
                tau,
                value: mean / denom,
                stderr: stderr / denom,
                n_terms: terms,
                reliable: terms >= MIN_TERMS,
            }
        })
        .collect();
    Ok(LeverageCurve { dt: 1, points })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

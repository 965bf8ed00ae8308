//! Inverse statistics: first-passage times of a log-price series through a
//! fixed return level, their histogram, its mode (the optimal investment
//! horizon), the Brownian reference density and tail/scaling fits.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::linfit;
use crate::market_data::LogSeries;

pub const DEFAULT_TAU_MAX: usize = 1000;
pub const DEFAULT_SMOOTH_WINDOW: usize = 3;
/// Ratio between consecutive logarithmic bin edges in tail fits.
pub const LOG_BIN_RATIO: f64 = 1.25;
/// Absolute slack on level comparisons, so that a return equal to the level
/// up to rounding (e.g. five steps of 0.01 against 0.05) counts as a crossing.
pub const LEVEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// A return level `rho = k * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevel {
    pub k: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl ReturnLevel {
    pub fn new(k: f64, sigma: f64) -> Result<Self> {
        let rho = k * sigma;
        if !(rho.is_finite() && rho != 0.0 && sigma > 0.0) {
            return Err(Error::validation(format!(
                "invalid return level k={k}, sigma={sigma}"
            )));
        }
        Ok(Self { k, sigma, rho })
    }

    /// A level given directly as a log-return (recorded with `sigma = 1`).
    pub fn absolute(rho: f64) -> Result<Self> {
        Self::new(rho, 1.0)
    }

    pub fn sign(&self) -> Sign {
        if self.rho > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        let k = self.k.abs() * sign.factor();
        Self {
            k,
            sigma: self.sigma,
            rho: k * self.sigma,
        }
    }
}

/// First-passage time from start `t`, or `None` when the level is not
/// reached within `tau_max` days or before the series ends.
pub fn first_passage(s: &LogSeries, t: usize, level: &ReturnLevel, tau_max: usize) -> Result<Option<usize>> {
    if t >= s.len() {
        return Err(Error::Range(format!("start {t} for length {}", s.len())));
    }
    Ok(passage_time(s.values(), t, level.rho, tau_max))
}

/// Forward scan from `t` with early exit at the first crossing.
#[inline]
pub(crate) fn passage_time(s: &[f64], t: usize, rho: f64, tau_max: usize) -> Option<usize> {
    let base = s[t];
    let end = (t + tau_max).min(s.len() - 1);
    if end <= t {
        return None;
    }
    let window = &s[t + 1..=end];
    if rho > 0.0 {
        let target = rho - LEVEL_EPS;
        window.iter().position(|v| v - base >= target).map(|i| i + 1)
    } else {
        let target = rho + LEVEL_EPS;
        window.iter().position(|v| v - base <= target).map(|i| i + 1)
    }
}

/// Adds the first-passage times of every start `t in [0, len-2]` into
/// `counts` (indexed by tau) and returns the number of censored starts.
pub(crate) fn accumulate_passages(s: &[f64], rho: f64, tau_max: usize, counts: &mut [u64]) -> u64 {
    debug_assert!(counts.len() > tau_max);
    let mut censored = 0;
    for t in 0..s.len().saturating_sub(1) {
        match passage_time(s, t, rho, tau_max) {
            Some(tau) => counts[tau] += 1,
            None => censored += 1,
        }
    }
    censored
}

/// Histogram of first-passage times over all start days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptDistribution {
    /// `counts[tau]` for `tau` in `0..=tau_max`; `counts[0]` is always 0.
    counts: Vec<u64>,
    pub total_starts: u64,
    pub censored: u64,
    pub tau_max: usize,
    pub level: ReturnLevel,
}

impl FptDistribution {
    pub fn empty(level: ReturnLevel, tau_max: usize) -> Self {
        Self {
            counts: vec![0; tau_max + 1],
            total_starts: 0,
            censored: 0,
            tau_max,
            level,
        }
    }

    /// Builds a distribution from explicit `(tau, count)` pairs.
    pub fn from_counts(
        level: ReturnLevel,
        tau_max: usize,
        pairs: impl IntoIterator<Item = (usize, u64)>,
        censored: u64,
    ) -> Result<Self> {
        let mut d = Self::empty(level, tau_max);
        for (tau, c) in pairs {
            if tau == 0 || tau > tau_max {
                return Err(Error::validation(format!("tau {tau} outside [1, {tau_max}]")));
            }
            d.counts[tau] += c;
        }
        d.censored = censored;
        d.total_starts = d.passages() + censored;
        Ok(d)
    }

    pub fn count(&self, tau: usize) -> u64 {
        self.counts.get(tau).copied().unwrap_or(0)
    }

    /// Counts indexed by tau (index 0 unused).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of realized (uncensored) passages.
    pub fn passages(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.passages() == 0
    }

    /// Populated `(tau, count)` pairs in increasing tau.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(t, c)| (t, *c))
    }

    pub fn probability(&self, tau: usize) -> f64 {
        let total = self.passages();
        if total == 0 {
            0.0
        } else {
            self.count(tau) as f64 / total as f64
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.total_starts == 0 {
            0.0
        } else {
            self.censored as f64 / self.total_starts as f64
        }
    }

    /// Adds another histogram measured at the same level and cap.
    pub fn merge(&mut self, other: &FptDistribution) -> Result<()> {
        if other.tau_max != self.tau_max {
            return Err(Error::validation("cannot merge histograms with different tau_max"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_starts += other.total_starts;
        self.censored += other.censored;
        Ok(())
    }

    pub(crate) fn add_raw(&mut self, counts: &[u64], censored: u64) {
        for (a, b) in self.counts.iter_mut().zip(counts) {
            *a += b;
        }
        let passages: u64 = counts.iter().sum();
        self.censored += censored;
        self.total_starts += passages + censored;
    }

    /// `tau,count,probability` rows from tau = 1 to the largest populated tau,
    /// preceded by a `#` metadata line naming the level and sigma.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(
            out,
            "# k={} sigma={} rho={} tau_max={} total_starts={} censored={}",
            self.level.k, self.level.sigma, self.level.rho, self.tau_max, self.total_starts, self.censored
        )
        .map_err(io)?;
        writeln!(out, "tau,count,probability").map_err(io)?;
        let last = self.counts.iter().rposition(|c| *c > 0).unwrap_or(0);
        for tau in 1..=last {
            writeln!(out, "{},{},{}", tau, self.counts[tau], self.probability(tau)).map_err(io)?;
        }
        Ok(())
    }
}

/// First-passage histogram over every start index `t in [0, len-2]`.
///
/// Start indices are split across the rayon pool; per-worker histograms are
/// merged by addition, so the result does not depend on the worker count.
pub fn fpt_distribution(s: &LogSeries, level: &ReturnLevel, tau_max: usize) -> Result<FptDistribution> {
    if s.len() < 2 {
        return Err(Error::validation("first-passage statistics need at least 2 points"));
    }
    if tau_max < 1 {
        return Err(Error::validation("tau_max must be >= 1"));
    }
    let values = s.values();
    let starts = values.len() - 1;
    const CHUNK: usize = 2048;
    let (counts, censored) = (0..starts.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; tau_max + 1];
            let mut censored = 0u64;
            for t in c * CHUNK..((c + 1) * CHUNK).min(starts) {
                match passage_time(values, t, level.rho, tau_max) {
                    Some(tau) => counts[tau] += 1,
                    None => censored += 1,
                }
            }
            (counts, censored)
        })
        .reduce(
            || (vec![0u64; tau_max + 1], 0),
            |(mut a, ca), (b, cb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, ca + cb)
            },
        );
    let mut d = FptDistribution::empty(*level, tau_max);
    d.add_raw(&counts, censored);
    Ok(d)
}

/// Centered moving sum of `counts[1..]` over `window` taus; taus outside
/// `[1, tau_max]` contribute zero.
fn smoothed(counts: &[u64], window: usize) -> Vec<u64> {
    let half = window / 2;
    let n = counts.len();
    let mut out = vec![0u64; n];
    for (tau, slot) in out.iter_mut().enumerate().skip(1) {
        let lo = tau.saturating_sub(half).max(1);
        let hi = (tau + half).min(n - 1);
        *slot = counts[lo..=hi].iter().sum();
    }
    out
}

/// Most probable waiting time. With `smooth_window > 1` the counts are first
/// smoothed by a centered moving average; ties go to the smaller tau.
pub fn mode_tau(d: &FptDistribution, smooth_window: usize) -> Result<usize> {
    mode_of_counts(d.counts(), smooth_window)
}

pub(crate) fn mode_of_counts(counts: &[u64], smooth_window: usize) -> Result<usize> {
    if smooth_window == 0 || smooth_window.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "smoothing window must be an odd integer >= 1, got {smooth_window}"
        )));
    }
    if counts.iter().all(|c| *c == 0) {
        return Err(Error::validation("mode of an empty distribution"));
    }
    let sm = if smooth_window == 1 {
        counts.to_vec()
    } else {
        smoothed(counts, smooth_window)
    };
    let mut best = 1;
    for tau in 2..sm.len() {
        if sm[tau] > sm[best] {
            best = tau;
        }
    }
    Ok(best)
}

/// Brownian first-passage density
/// `|rho| / sqrt(4 pi D tau^3) * exp(-rho^2 / (4 D tau))`.
pub fn brownian_fpt_pdf(rho: f64, diffusion: f64, tau: f64) -> Result<f64> {
    if !(diffusion > 0.0 && tau > 0.0 && rho != 0.0 && rho.is_finite()) {
        return Err(Error::validation(format!(
            "pdf domain: need D > 0, tau > 0, rho != 0 (got D={diffusion}, tau={tau}, rho={rho})"
        )));
    }
    let norm = rho.abs() / (4.0 * std::f64::consts::PI * diffusion * tau.powi(3)).sqrt();
    Ok(norm * (-rho * rho / (4.0 * diffusion * tau)).exp())
}

/// Location of the maximum of [`brownian_fpt_pdf`], `rho^2 / (6 D)`.
pub fn brownian_mode(rho: f64, diffusion: f64) -> f64 {
    rho * rho / (6.0 * diffusion)
}

/// Result of a scaling fit: an exponent (alpha, gamma) or a time constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub value: f64,
    pub stderr: f64,
    pub fit_range: (f64, f64),
    pub residual_norm: f64,
    pub n_points: usize,
}

/// A logarithmic bin over integer taus `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBin {
    pub lo: usize,
    pub hi: usize,
    pub count: u64,
}

impl LogBin {
    pub fn width(&self) -> usize {
        self.hi - self.lo
    }

    /// Geometric mean of the continuous bin edges `lo - 1/2` and `hi - 1/2`.
    pub fn center(&self) -> f64 {
        ((self.lo as f64 - 0.5) * (self.hi as f64 - 0.5)).sqrt()
    }
}

/// Integer bins whose edges grow by [`LOG_BIN_RATIO`] (at least one tau
/// wide) covering `[fit_lo, fit_hi]`.
pub fn log_bins(d: &FptDistribution, fit_lo: usize, fit_hi: usize) -> Vec<LogBin> {
    let mut bins = Vec::new();
    let mut lo = fit_lo.max(1);
    let end = fit_hi.min(d.tau_max) + 1;
    while lo < end {
        let hi = (((lo as f64) * LOG_BIN_RATIO).round() as usize).max(lo + 1).min(end);
        let count = (lo..hi).map(|t| d.count(t)).sum();
        bins.push(LogBin { lo, hi, count });
        lo = hi;
    }
    bins
}

/// Tail exponent alpha of `p(tau) ~ tau^-alpha` from a log-log fit of the
/// log-binned density `count / (passages * width)` over `[fit_lo, fit_hi]`.
pub fn tail_exponent(d: &FptDistribution, fit_lo: usize, fit_hi: usize) -> Result<FitResult> {
    if fit_lo >= fit_hi {
        return Err(Error::fit(format!("empty fit range [{fit_lo}, {fit_hi}]")));
    }
    let total = d.passages() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = log_bins(d, fit_lo, fit_hi)
        .into_iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.center().ln(), (b.count as f64 / (total * b.width() as f64)).ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::fit(format!(
            "tail fit needs 3 populated bins in [{fit_lo}, {fit_hi}], found {}",
            xs.len()
        )));
    }
    let f = linfit(&xs, &ys)?;
    Ok(FitResult {
        value: -f.slope,
        stderr: f.slope_stderr,
        fit_range: (fit_lo as f64, fit_hi as f64),
        residual_norm: f.residual_norm,
        n_points: f.n,
    })
}

/// Scaling exponent gamma of `tau* ~ |rho|^gamma` over levels with
/// `|rho| > fit_min_abs_rho`. Levels of one sign should be passed at a time.
pub fn gamma_scaling(levels: &[(f64, f64)], fit_min_abs_rho: f64) -> Result<FitResult> {
    let used: Vec<(f64, f64)> = levels
        .iter()
        .filter(|(rho, _)| rho.abs() > fit_min_abs_rho)
        .copied()
        .collect();
    if used.len() < 3 {
        return Err(Error::fit(format!(
            "gamma fit needs 3 levels above {fit_min_abs_rho}, found {}",
            used.len()
        )));
    }
    if used.iter().any(|(_, t)| !(*t > 0.0)) {
        return Err(Error::fit("optimal horizons must be positive"));
    }
    let xs: Vec<f64> = used.iter().map(|(r, _)| r.abs().ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, t)| t.ln()).collect();
    let f = linfit(&xs, &ys)?;
    let lo = used.iter().map(|(r, _)| r.abs()).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|(r, _)| r.abs()).fold(0.0, f64::max);
    Ok(FitResult {
        value: f.slope,
        stderr: f.slope_stderr,
        fit_range: (lo, hi),
        residual_norm: f.residual_norm,
        n_points: f.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn log(v: &[f64]) -> LogSeries {
        LogSeries::new(v.to_vec(), None).unwrap()
    }

    fn lvl(rho: f64) -> ReturnLevel {
        ReturnLevel::absolute(rho).unwrap()
    }

    /// Definition-level oracle: smallest dt with s(t+dt) - s(t) past rho.
    fn oracle(s: &[f64], t: usize, rho: f64, tau_max: usize) -> Option<usize> {
        (1..=tau_max).take_while(|dt| t + dt < s.len()).find(|&dt| {
            let r = s[t + dt] - s[t];
            if rho > 0.0 {
                r >= rho - LEVEL_EPS
            } else {
                r <= rho + LEVEL_EPS
            }
        })
    }

    #[test]
    fn first_passage_examples() {
        let s = log(&[0.0, 0.02, 0.01, 0.06]);
        assert_eq!(first_passage(&s, 0, &lvl(0.05), 100).unwrap(), Some(3));
        let s = log(&[0.0, -0.02, -0.06]);
        assert_eq!(first_passage(&s, 0, &lvl(-0.05), 100).unwrap(), Some(2));
        let s = log(&[0.0, 0.01, 0.02, 0.03]);
        assert_eq!(first_passage(&s, 0, &lvl(0.05), 100).unwrap(), None);
        assert!(first_passage(&s, 4, &lvl(0.05), 100).is_err());
        // the cap censors passages beyond tau_max
        let s = log(&[0.0, 0.02, 0.01, 0.06]);
        assert_eq!(first_passage(&s, 0, &lvl(0.05), 2).unwrap(), None);
        // the last index has nothing ahead of it
        assert_eq!(first_passage(&s, 3, &lvl(0.05), 10).unwrap(), None);
    }

    #[test]
    fn staircase_distribution() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let d = fpt_distribution(&log(&s), &lvl(0.05), 100).unwrap();
        // starts 0..=48; those past index 44 run out of series
        assert_eq!(d.count(5), 45);
        assert_eq!(d.passages(), 45);
        assert_eq!(d.censored, 4);
        assert_eq!(d.total_starts, 49);
    }

    #[test]
    fn mode_examples() {
        let l = lvl(0.05);
        let d = FptDistribution::from_counts(l, 20, [(3, 10), (4, 2)], 0).unwrap();
        assert_eq!(mode_tau(&d, 1).unwrap(), 3);
        let d = FptDistribution::from_counts(l, 20, [(3, 5), (7, 5)], 0).unwrap();
        assert_eq!(mode_tau(&d, 1).unwrap(), 3);
        let d = FptDistribution::empty(l, 20);
        assert!(matches!(mode_tau(&d, 1), Err(Error::Validation(_))));
        let d = FptDistribution::from_counts(l, 20, [(3, 5)], 0).unwrap();
        assert!(mode_tau(&d, 2).is_err());
    }

    #[test]
    fn smoothing_moves_mode_to_the_mass() {
        // a lone spike at 2 against a broad hump around 8
        let d = FptDistribution::from_counts(
            lvl(0.05),
            20,
            [(2, 10), (7, 8), (8, 9), (9, 8)],
            0,
        )
        .unwrap();
        assert_eq!(mode_tau(&d, 1).unwrap(), 2);
        assert_eq!(mode_tau(&d, 3).unwrap(), 8);
    }

    #[test]
    fn pdf_peak_is_at_brownian_mode() {
        let (rho, d) = (0.05, 0.5e-4);
        let m = brownian_mode(rho, d);
        let peak = brownian_fpt_pdf(rho, d, m).unwrap();
        for dt in [1e-3, 1e-2, 0.1, 1.0] {
            assert!(brownian_fpt_pdf(rho, d, m - dt).unwrap() < peak);
            assert!(brownian_fpt_pdf(rho, d, m + dt).unwrap() < peak);
        }
        assert!(brownian_fpt_pdf(rho, 0.0, 1.0).is_err());
        assert!(brownian_fpt_pdf(0.0, d, 1.0).is_err());
        assert!(brownian_fpt_pdf(rho, d, 0.0).is_err());
    }

    #[test]
    fn planted_power_law_tail() {
        let pairs = (1..=5000).map(|t| (t, (1e12 / (t as f64).powi(2)).round() as u64));
        let d = FptDistribution::from_counts(lvl(0.05), 5000, pairs, 0).unwrap();
        let f = tail_exponent(&d, 20, 4000).unwrap();
        assert!((f.value - 2.0).abs() < 0.01, "{f:?}");
        assert!(f.n_points >= 3);
    }

    #[test]
    fn single_spike_tail_fit_fails() {
        let d = FptDistribution::from_counts(lvl(0.05), 100, [(10, 1000)], 0).unwrap();
        assert!(matches!(tail_exponent(&d, 1, 100), Err(Error::Fit(_))));
    }

    #[test]
    fn gamma_of_square_law() {
        let levels: Vec<(f64, f64)> =
            (1..=8).map(|k| (k as f64 * 0.01, 3000.0 * (k as f64 * 0.01).powi(2))).collect();
        let f = gamma_scaling(&levels, 0.03).unwrap();
        assert!((f.value - 2.0).abs() < 0.01);
        assert_eq!(f.n_points, 5);
        assert!(gamma_scaling(&levels, 0.065).is_err());
    }

    #[test]
    fn log_bins_tile_range() {
        let d = FptDistribution::empty(lvl(0.05), 3000);
        let bins = log_bins(&d, 50, 2000);
        assert_eq!(bins[0].lo, 50);
        assert_eq!(bins.last().unwrap().hi, 2001);
        for w in bins.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
    }

    #[test]
    fn level_sign_helpers() {
        let l = ReturnLevel::new(5.0, 0.011).unwrap();
        assert_relative_eq!(l.rho, 0.055);
        assert_eq!(l.sign(), Sign::Plus);
        let m = l.with_sign(Sign::Minus);
        assert_relative_eq!(m.rho, -0.055);
        assert_eq!(m.sign(), Sign::Minus);
        assert!(ReturnLevel::new(0.0, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn kernel_matches_definition(
            steps in prop::collection::vec(-0.03f64..0.03, 2..120),
            rho in prop_oneof![0.005f64..0.08, -0.08f64..-0.005],
            tau_max in 1usize..150,
        ) {
            let mut s = vec![0.0];
            for v in &steps { s.push(s.last().unwrap() + v); }
            for t in 0..s.len() {
                prop_assert_eq!(passage_time(&s, t, rho, tau_max), oracle(&s, t, rho, tau_max));
            }
        }

        #[test]
        fn counts_are_conserved(
            steps in prop::collection::vec(-0.03f64..0.03, 2..300),
            rho in prop_oneof![0.005f64..0.08, -0.08f64..-0.005],
            tau_max in 1usize..300,
        ) {
            let mut s = vec![0.0];
            for v in &steps { s.push(s.last().unwrap() + v); }
            let d = fpt_distribution(&log(&s), &lvl(rho), tau_max).unwrap();
            prop_assert_eq!(d.passages() + d.censored, d.total_starts);
            prop_assert_eq!(d.total_starts as usize, s.len() - 1);
            prop_assert_eq!(d.count(0), 0);
        }

        #[test]
        fn pdf_sign_symmetric(
            rho in 1e-4f64..1.0, diffusion in 1e-6f64..1.0, tau in 1e-2f64..1e4,
        ) {
            prop_assert_eq!(
                brownian_fpt_pdf(rho, diffusion, tau).unwrap(),
                brownian_fpt_pdf(-rho, diffusion, tau).unwrap()
            );
        }
    }
}

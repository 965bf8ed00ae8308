//! Gain-loss asymmetry measures over the shuffle window length.
//!
//! For a level magnitude `|rho|` and window `T`:
//! - `delta(T) = tau*_{+|rho|}(T) - tau*_{-|rho|}(T)`
//! - `w(T) = delta(T) / delta(T_inf)`, the asymmetry left after shuffling
//! - `w_pm(T) = (tau*_pm(T) - tau*(1)) / (tau*_pm(T_inf) - tau*(1))`, the
//!   distance of each maximum from the fully shuffled one.
//!
//! `T_inf` (default 1000) stands in for the unshuffled series and is sampled
//! with the same number of permutations as every other window.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::linfit;
use crate::inverse_stats::{ReturnLevel, Sign};
use crate::market_data::{daily_returns, split_era, to_log, PriceSeries, ReturnSeries};
use crate::shuffler::{sweep, SweepCell, SweepConfig, SweepResult};

pub const DEFAULT_T_INF: usize = 1000;
/// θ is fitted on windows strictly below this length.
pub const DEFAULT_THETA_T_HI: usize = 30;
/// Minimum calendar span of an era.
pub const MIN_ERA_DAYS: i64 = 730;

pub fn delta_tau(cell: &SweepCell) -> Result<f64> {
    match (cell.side(Sign::Plus), cell.side(Sign::Minus)) {
        (Some(p), Some(m)) => Ok(p.tau_star - m.tau_star),
        _ => Err(Error::validation(format!(
            "cell T={} k={} lacks one of the two level signs",
            cell.window, cell.k
        ))),
    }
}

pub fn w_of_t(delta_t: f64, delta_inf: f64) -> Result<f64> {
    if delta_inf == 0.0 {
        return Err(Error::Computation(
            "no asymmetry at T_inf: w(T) is undefined".into(),
        ));
    }
    Ok(delta_t / delta_inf)
}

pub fn w_pm(tau_star_pm_t: f64, tau_star_1: f64, tau_star_pm_inf: f64) -> Result<f64> {
    let denom = tau_star_pm_inf - tau_star_1;
    if denom == 0.0 {
        return Err(Error::Computation(
            "tau*(T_inf) equals tau*(1): w_pm is undefined".into(),
        ));
    }
    Ok((tau_star_pm_t - tau_star_1) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub window: usize,
    pub tau_star_plus: f64,
    pub tau_star_minus: f64,
    pub delta: f64,
    pub w: f64,
    /// `None` where the denominator vanishes.
    pub w_plus: Option<f64>,
    pub w_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryCurve {
    pub level: ReturnLevel,
    pub points: Vec<CurvePoint>,
    pub t_inf: usize,
    pub tau_star_inf_plus: f64,
    pub tau_star_inf_minus: f64,
    /// Mean of the two fully shuffled maxima.
    pub tau_star_1: f64,
    pub tau_star_1_plus: f64,
    pub tau_star_1_minus: f64,
}

impl AsymmetryCurve {
    pub fn w_points(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.window, p.w)).collect()
    }

    pub fn point(&self, window: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.window == window)
    }

    /// Largest `|w - w_plus|` or `|w - w_minus|` over defined points.
    pub fn max_equivalence_gap(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| {
                [p.w_plus, p.w_minus]
                    .into_iter()
                    .flatten()
                    .map(move |x| (p.w - x).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the curve of level `k_index` from a sweep that contains both
/// `T = 1` and `T = t_inf` with both signs.
///
/// `w_plus` and `w_minus` are taken relative to the fully shuffled maximum of
/// their own sign, so that they vanish exactly at `T = 1`.
pub fn asymmetry_curve(res: &SweepResult, k_index: usize, t_inf: usize) -> Result<AsymmetryCurve> {
    let cell_at = |w: usize| {
        res.cell(w, k_index).ok_or_else(|| {
            Error::Config(format!("sweep has no cell at T={w} for level index {k_index}"))
        })
    };
    let side = |c: &SweepCell, s: Sign| {
        c.side(s).map(|x| x.tau_star).ok_or_else(|| {
            Error::validation(format!("cell T={} lacks sign {}", c.window, s.as_str()))
        })
    };
    let inf = cell_at(t_inf)?;
    let one = cell_at(1)?;
    let (inf_p, inf_m) = (side(inf, Sign::Plus)?, side(inf, Sign::Minus)?);
    let (one_p, one_m) = (side(one, Sign::Plus)?, side(one, Sign::Minus)?);
    let delta_inf = inf_p - inf_m;

    let mut cells: Vec<&SweepCell> = res.cells.iter().filter(|c| c.k_index == k_index).collect();
    cells.sort_by_key(|c| c.window);
    let mut points = Vec::with_capacity(cells.len());
    for c in cells {
        let (p, m) = (side(c, Sign::Plus)?, side(c, Sign::Minus)?);
        let delta = p - m;
        points.push(CurvePoint {
            window: c.window,
            tau_star_plus: p,
            tau_star_minus: m,
            delta,
            w: w_of_t(delta, delta_inf)?,
            w_plus: w_pm(p, one_p, inf_p).ok(),
            w_minus: w_pm(m, one_m, inf_m).ok(),
        });
    }
    Ok(AsymmetryCurve {
        level: ReturnLevel::new(inf.k, inf.sigma)?,
        points,
        t_inf,
        tau_star_inf_plus: inf_p,
        tau_star_inf_minus: inf_m,
        tau_star_1: 0.5 * (one_p + one_m),
        tau_star_1_plus: one_p,
        tau_star_1_minus: one_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaFit {
    pub theta: f64,
    pub fit_range_t: (usize, usize),
    pub stderr: f64,
    pub n_points: usize,
    /// Points with `w >= 1` left out of the fit.
    pub excluded_overshoot: usize,
    pub r_squared: f64,
}

/// θ from an exponential model `|1 - w(T)| = A exp(-T / θ)` fitted by least
/// squares on `ln(1 - w)` over windows `T < t_hi`.
pub fn theta_fit(curve: &AsymmetryCurve, t_hi: usize) -> Result<ThetaFit> {
    theta_from_points(&curve.w_points(), t_hi)
}

pub fn theta_from_points(points: &[(usize, f64)], t_hi: usize) -> Result<ThetaFit> {
    let candidates: Vec<(usize, f64)> = points.iter().filter(|(t, _)| *t < t_hi).copied().collect();
    let excluded = candidates.iter().filter(|(_, w)| *w >= 1.0).count();
    let used: Vec<(usize, f64)> = candidates.into_iter().filter(|(_, w)| *w < 1.0).collect();
    if used.len() < 3 {
        return Err(Error::fit(format!(
            "theta fit needs 3 windows below T={t_hi} with w < 1, found {}",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|(t, _)| *t as f64).collect();
    let ys: Vec<f64> = used.iter().map(|(_, w)| (1.0 - w).ln()).collect();
    let f = linfit(&xs, &ys)?;
    if !(f.slope < 0.0) {
        return Err(Error::fit(format!(
            "|1 - w(T)| does not decay (slope {})",
            f.slope
        )));
    }
    Ok(ThetaFit {
        theta: -1.0 / f.slope,
        fit_range_t: (used[0].0, used[used.len() - 1].0),
        stderr: f.slope_stderr / (f.slope * f.slope),
        n_points: f.n,
        excluded_overshoot: excluded,
        r_squared: f.r_squared,
    })
}

/// Location/scale summary of daily returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub n: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    pub std: f64,
    pub std_stderr: f64,
    pub excess_kurtosis: f64,
}

pub fn return_stats(r: &ReturnSeries) -> Result<ReturnStats> {
    let v = r.values();
    if v.len() < 2 {
        return Err(Error::validation("need at least 2 returns"));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let std = (m2 * n / (n - 1.0)).sqrt();
    // delta method on the variance estimator, valid for fat tails too
    let var_se = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    Ok(ReturnStats {
        n: v.len(),
        mean,
        mean_stderr: std / n.sqrt(),
        std,
        std_stderr: if std > 0.0 { var_se / (2.0 * std) } else { 0.0 },
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
    })
}

/// Whether the means and the standard deviations of two return samples are
/// compatible within `z` combined standard errors.
pub fn stats_overlap(a: &ReturnStats, b: &ReturnStats, z: f64) -> bool {
    let mean_ok = (a.mean - b.mean).abs() <= z * a.mean_stderr.hypot(b.mean_stderr);
    let std_ok = (a.std - b.std).abs() <= z * a.std_stderr.hypot(b.std_stderr);
    mean_ok && std_ok
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub k: f64,
    pub curve: Option<AsymmetryCurve>,
    pub theta: Option<ThetaFit>,
    /// Why the curve or the fit is missing, if it is.
    pub error: Option<String>,
}

/// Curves and θ fits for every level of a sweep; failures are recorded per
/// level instead of aborting the others.
pub fn summarize_levels(res: &SweepResult, t_inf: usize, t_hi: usize) -> Vec<LevelSummary> {
    res.config
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| match asymmetry_curve(res, i, t_inf) {
            Ok(curve) => {
                let fit = theta_fit(&curve, t_hi);
                LevelSummary {
                    k,
                    error: fit.as_ref().err().map(|e| e.to_string()),
                    theta: fit.ok(),
                    curve: Some(curve),
                }
            }
            Err(e) => LevelSummary {
                k,
                curve: None,
                theta: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraResult {
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_days: usize,
    pub sigma: f64,
    pub returns: ReturnStats,
    pub levels: Vec<LevelSummary>,
    #[serde(skip)]
    pub sweep: Option<SweepResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraReport {
    pub boundary: NaiveDate,
    pub before: EraResult,
    pub after: EraResult,
    /// Return distributions compatible within 2 standard errors.
    pub returns_similar: bool,
}

/// Analysis of one price series, with sigma measured on that series.
pub fn analyze_prices(
    p: &PriceSeries,
    cfg: &SweepConfig,
    t_inf: usize,
    t_hi: usize,
) -> Result<EraResult> {
    let r = daily_returns(&to_log(p))?;
    let res = sweep(&r, cfg)?;
    Ok(EraResult {
        first_date: p.first_date(),
        last_date: p.last_date(),
        n_days: p.len(),
        sigma: res.sigma,
        returns: return_stats(&r)?,
        levels: summarize_levels(&res, t_inf, t_hi),
        sweep: Some(res),
    })
}

/// Splits at `boundary` and runs the full pipeline on each era separately.
pub fn era_report(
    p: &PriceSeries,
    boundary: NaiveDate,
    cfg: &SweepConfig,
    t_inf: usize,
    t_hi: usize,
) -> Result<EraReport> {
    let (a, b) = split_era(p, boundary)?;
    for part in [&a, &b] {
        let span = (part.last_date() - part.first_date()).num_days();
        if span < MIN_ERA_DAYS {
            return Err(Error::validation(format!(
                "era {}..{} spans {span} days; at least two years are required",
                part.first_date(),
                part.last_date()
            )));
        }
    }
    let before = analyze_prices(&a, cfg, t_inf, t_hi)?;
    let after = analyze_prices(&b, cfg, t_inf, t_hi)?;
    let returns_similar = stats_overlap(&before.returns, &after.returns, 2.0);
    Ok(EraReport {
        boundary,
        before,
        after,
        returns_similar,
    })
}

//! Daily price ingestion, log-prices and daily log-returns.
//!
//! All time arithmetic is done in row indices (trading days); calendar gaps
//! such as weekends and holidays are simply absent rows.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Default boundary between the human-trading and program-trading eras.
pub fn default_era_boundary() -> NaiveDate {
    NaiveDate::from_ymd_opt(1980, 1, 1).expect("valid date")
}

/// Dated daily closing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    close: Vec<f64>,
    label: String,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, close: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dates.len() != close.len() {
            return Err(Error::validation(format!(
                "{} dates but {} closing values",
                dates.len(),
                close.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::validation("a price series needs at least 2 rows"));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some((i, c)) = close
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c > 0.0))
        {
            return Err(Error::validation(format!(
                "non-positive or non-finite close {c} on {}",
                dates[i]
            )));
        }
        Ok(Self {
            dates,
            close,
            label: label.into(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn close(&self) -> &[f64] {
        &self.close
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Appends `other` after `self`; dates must keep increasing.
    pub fn concat(&self, other: &PriceSeries) -> Result<PriceSeries> {
        let mut dates = self.dates.clone();
        dates.extend_from_slice(&other.dates);
        let mut close = self.close.clone();
        close.extend_from_slice(&other.close);
        PriceSeries::new(dates, close, self.label.clone())
    }

    /// Writes the series as `date,close` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(out, "date,close").map_err(io)?;
        for (d, c) in self.dates.iter().zip(&self.close) {
            writeln!(out, "{},{}", d.format(DATE_FORMAT), c).map_err(io)?;
        }
        Ok(())
    }
}

/// Column names of the date and close fields in an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub close_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            close_column: "close".into(),
        }
    }
}

/// Loads a daily price CSV. Rows may come in any order; they are sorted by
/// date, and duplicate dates or non-positive prices are rejected.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, schema, label)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    schema: &CsvSchema,
    label: impl Into<String>,
) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column '{name}' not found in header")))
    };
    let date_idx = find(&schema.date_column)?;
    let close_idx = find(&schema.close_column)?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize, what: &str| {
            rec.get(idx).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing {what} field"),
            })
        };
        let raw_date = field(date_idx, "date")?;
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|e| Error::Parse {
            line,
            message: format!("bad date '{raw_date}': {e}"),
        })?;
        let raw_close = field(close_idx, "close")?;
        let close: f64 = raw_close.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad close value '{raw_close}'"),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::validation(format!(
                "non-positive close {close} at line {line}"
            )));
        }
        rows.push((date, close));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::validation(format!("duplicate date {}", w[0].0)));
    }
    let (dates, close) = rows.into_iter().unzip();
    PriceSeries::new(dates, close, label)
}

/// Natural logarithm of a price series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSeries {
    s: Vec<f64>,
    origin: Option<NaiveDate>,
}

impl LogSeries {
    pub fn new(s: Vec<f64>, origin: Option<NaiveDate>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::validation("empty log series"));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("log series contains non-finite values"));
        }
        Ok(Self { s, origin })
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn origin(&self) -> Option<NaiveDate> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

pub fn to_log(p: &PriceSeries) -> LogSeries {
    LogSeries {
        s: p.close.iter().map(|c| c.ln()).collect(),
        origin: Some(p.first_date()),
    }
}

/// `s(t + dt) - s(t)`.
pub fn log_return(s: &LogSeries, t: usize, dt: usize) -> Result<f64> {
    let end = t
        .checked_add(dt)
        .filter(|&e| e < s.len())
        .ok_or_else(|| Error::Range(format!("t={t}, dt={dt} for length {}", s.len())))?;
    Ok(s.s[end] - s.s[t])
}

/// Daily log-returns. `sigma` caches the sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    r: Vec<f64>,
    sigma: Option<f64>,
}

impl ReturnSeries {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("return series contains non-finite values"));
        }
        let sigma = sample_std(&r);
        Ok(Self { r, sigma })
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn into_values(self) -> Vec<f64> {
        self.r
    }

    pub fn sigma_cache(&self) -> Option<f64> {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Returns in reverse time order.
    pub fn reversed(&self) -> ReturnSeries {
        let mut r = self.r.clone();
        r.reverse();
        ReturnSeries { r, sigma: self.sigma }
    }

    /// All returns multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<ReturnSeries> {
        ReturnSeries::new(self.r.iter().map(|v| v * c).collect())
    }
}

pub fn daily_returns(s: &LogSeries) -> Result<ReturnSeries> {
    if s.len() < 2 {
        return Err(Error::validation("need at least 2 log values for returns"));
    }
    ReturnSeries::new(s.s.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Sample standard deviation (n - 1 divisor) of the daily returns.
pub fn volatility(r: &ReturnSeries) -> Result<f64> {
    r.sigma
        .ok_or_else(|| Error::validation("volatility needs at least 2 returns"))
}

/// Computed over the sorted values, so the result is bit-identical for any
/// permutation of the input.
fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// Integrates returns back into a log-price series starting at `s0`.
pub fn rebuild_index(r: &ReturnSeries, s0: f64) -> LogSeries {
    let mut s = Vec::with_capacity(r.len() + 1);
    let mut acc = s0;
    s.push(acc);
    for v in &r.r {
        acc += v;
        s.push(acc);
    }
    LogSeries { s, origin: None }
}

/// Splits into rows strictly before `boundary` and rows at or after it.
pub fn split_era(p: &PriceSeries, boundary: NaiveDate) -> Result<(PriceSeries, PriceSeries)> {
    if boundary <= p.first_date() || boundary > p.last_date() {
        return Err(Error::validation(format!(
            "era boundary {boundary} must fall inside ({}, {}]",
            p.first_date(),
            p.last_date()
        )));
    }
    let cut = p.dates.partition_point(|d| *d < boundary);
    let part = |range: std::ops::Range<usize>| {
        PriceSeries::new(
            p.dates[range.clone()].to_vec(),
            p.close[range].to_vec(),
            p.label.clone(),
        )
    };
    Ok((part(0..cut)?, part(cut..p.len())?))
}

/// Consecutive Monday-to-Friday dates starting at `origin` (rolled forward
/// to a weekday if needed).
pub fn business_days(origin: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = origin;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

/// Builds a dated price series `S0 * exp(cumsum(r))` on business days.
pub fn price_series_from_returns(
    r: &ReturnSeries,
    s0: f64,
    origin: NaiveDate,
    label: impl Into<String>,
) -> Result<PriceSeries> {
    if !(s0 > 0.0) {
        return Err(Error::validation("initial price must be positive"));
    }
    let log = rebuild_index(r, s0.ln());
    let close = log.values().iter().map(|v| v.exp()).collect::<Vec<_>>();
    PriceSeries::new(business_days(origin, close.len()), close, label)
}

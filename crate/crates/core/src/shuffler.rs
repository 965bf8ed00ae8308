//! Time-window shuffling of daily returns.
//!
//! The return series is cut into blocks of `T` trading days (after a leading
//! block of `offset` days), the blocks are put in uniformly random order and
//! the index is rebuilt from the shuffled returns. Inside a block the order of
//! days is untouched, so dependencies shorter than `T` days largely survive
//! while longer ones are destroyed; the return multiset, and with it the
//! volatility, is preserved exactly. `T = 1` is the plain full shuffle.
//!
//! [`sweep`] repeats this for `n_p` permutations per (window, level, sign)
//! cell, re-drawing the offset for every permutation, and reports the mode of
//! the summed first-passage histogram. Each permutation draws from its own
//! [`RngStream`] keyed by `(T, sign, level index, permutation)`, and
//! histograms merge by integer addition, so results do not depend on how the
//! work is scheduled.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse_stats::{
    accumulate_passages, mode_of_counts, FptDistribution, ReturnLevel, Sign,
    DEFAULT_SMOOTH_WINDOW, DEFAULT_TAU_MAX,
};
use crate::market_data::{volatility, ReturnSeries};
use crate::rng::{fisher_yates, purpose, uniform_below, RngStream, RNG_ALGORITHM};

pub const DEFAULT_WINDOWS: [usize; 20] = [
    1, 2, 3, 5, 7, 10, 15, 20, 25, 30, 40, 50, 75, 100, 150, 200, 300, 500, 700, 1000,
];
pub const DEFAULT_KS: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 7.0];
pub const DEFAULT_PERMUTATIONS: usize = 1000;

/// Tiling of a return series into shuffle blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPartition {
    pub window: usize,
    pub offset: usize,
    pub len: usize,
    /// Half-open `(start, end)` index pairs, in series order.
    pub blocks: Vec<(usize, usize)>,
}

impl WindowPartition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Leading block of `offset` days (if any), then full blocks of `window`
/// days, then the trailing remainder (if any).
pub fn partition(len: usize, window: usize, offset: usize) -> Result<WindowPartition> {
    if window < 1 || window > len {
        return Err(Error::validation(format!(
            "window length {window} must lie in [1, {len}]"
        )));
    }
    if offset >= window {
        return Err(Error::validation(format!(
            "offset {offset} must be smaller than the window {window}"
        )));
    }
    let mut blocks = Vec::with_capacity(len / window + 2);
    if offset > 0 {
        blocks.push((0, offset));
    }
    let mut start = offset;
    while start + window <= len {
        blocks.push((start, start + window));
        start += window;
    }
    if start < len {
        blocks.push((start, len));
    }
    Ok(WindowPartition {
        window,
        offset,
        len,
        blocks,
    })
}

pub fn partition_returns(r: &ReturnSeries, window: usize, offset: usize) -> Result<WindowPartition> {
    partition(r.len(), window, offset)
}

/// Writes the blocks of `src` into `dst` in the given block order.
fn gather(src: &[f64], blocks: &[(usize, usize)], order: &[usize], dst: &mut Vec<f64>) {
    dst.clear();
    for &b in order {
        let (lo, hi) = blocks[b];
        dst.extend_from_slice(&src[lo..hi]);
    }
}

/// Puts the blocks of `p` in a uniformly random order (Fisher-Yates over
/// block indices), keeping each block's content intact.
pub fn shuffle_blocks(p: &WindowPartition, r: &ReturnSeries, stream: &RngStream) -> Result<ReturnSeries> {
    if p.len != r.len() {
        return Err(Error::validation(format!(
            "partition covers {} days but the series has {}",
            p.len,
            r.len()
        )));
    }
    let mut order: Vec<usize> = (0..p.blocks.len()).collect();
    fisher_yates(&mut order, &mut stream.rng());
    let mut out = Vec::with_capacity(r.len());
    gather(r.values(), &p.blocks, &order, &mut out);
    ReturnSeries::new(out)
}

/// Which level signs a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Signs {
    Plus,
    Minus,
    #[default]
    Both,
}

impl Signs {
    pub fn list(self) -> &'static [Sign] {
        match self {
            Signs::Plus => &[Sign::Plus],
            Signs::Minus => &[Sign::Minus],
            Signs::Both => &[Sign::Plus, Sign::Minus],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub windows: Vec<usize>,
    /// Level magnitudes in units of sigma.
    pub ks: Vec<f64>,
    pub signs: Signs,
    pub n_p: usize,
    pub tau_max: usize,
    pub smooth: usize,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            windows: DEFAULT_WINDOWS.to_vec(),
            ks: DEFAULT_KS.to_vec(),
            signs: Signs::Both,
            n_p: DEFAULT_PERMUTATIONS,
            tau_max: DEFAULT_TAU_MAX,
            smooth: DEFAULT_SMOOTH_WINDOW,
            master_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() || self.windows.contains(&0) {
            return Err(Error::Config("window lengths must be >= 1".into()));
        }
        if self.ks.is_empty() || self.ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::Config("level magnitudes k must be positive".into()));
        }
        if self.n_p < 1 {
            return Err(Error::Config("n_p must be >= 1".into()));
        }
        if self.tau_max < 1 {
            return Err(Error::Config("tau_max must be >= 1".into()));
        }
        if self.smooth == 0 || self.smooth.is_multiple_of(2) {
            return Err(Error::Config("smoothing width must be odd".into()));
        }
        Ok(())
    }
}

/// Permutation-averaged statistics of one sign in a sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    /// Mode of the histogram summed over all permutations.
    pub tau_star: f64,
    /// Sample standard deviation of the per-permutation modes.
    pub dispersion: f64,
    /// Mean of the per-permutation modes.
    pub mean_perm_mode: f64,
    pub censored_frac: f64,
    #[serde(skip)]
    pub histogram: Option<FptDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub window: usize,
    /// Level magnitude in sigma units and its position in the k list.
    pub k: f64,
    pub k_index: usize,
    pub sigma: f64,
    pub n_p: usize,
    pub plus: Option<SideStats>,
    pub minus: Option<SideStats>,
}

impl SweepCell {
    pub fn side(&self, sign: Sign) -> Option<&SideStats> {
        match sign {
            Sign::Plus => self.plus.as_ref(),
            Sign::Minus => self.minus.as_ref(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.k * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub sigma: f64,
    pub series_len: usize,
    pub rng_algorithm: String,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, window: usize, k_index: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.window == window && c.k_index == k_index)
    }

    /// `T,k,sign,tau_star,dispersion,n_p,censored_frac`, after a `#` line
    /// with sigma, seed and RNG identifier.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<csv output>", e);
        writeln!(
            out,
            "# sigma={} seed={} rng={} tau_max={} smooth={} series_len={}",
            self.sigma,
            self.config.master_seed,
            self.rng_algorithm,
            self.config.tau_max,
            self.config.smooth,
            self.series_len
        )
        .map_err(io)?;
        writeln!(out, "T,k,sign,tau_star,dispersion,n_p,censored_frac").map_err(io)?;
        for c in &self.cells {
            for sign in [Sign::Plus, Sign::Minus] {
                if let Some(s) = c.side(sign) {
                    writeln!(
                        out,
                        "{},{},{},{},{:.6},{},{:.8}",
                        c.window,
                        c.k,
                        sign.as_str(),
                        s.tau_star,
                        s.dispersion,
                        c.n_p,
                        s.censored_frac
                    )
                    .map_err(io)?;
                }
            }
        }
        Ok(())
    }
}

/// Stream for permutation `perm` of a cell.
pub fn permutation_stream(master_seed: u64, window: usize, sign: Sign, k_index: usize, perm: usize) -> RngStream {
    RngStream::new(
        master_seed,
        vec![purpose::SWEEP, window as u64, sign.index(), k_index as u64, perm as u64],
    )
}

#[derive(Default)]
struct Accum {
    counts: Vec<u64>,
    censored: u64,
    modes: Vec<(usize, usize)>,
}

/// Runs `n_p` window shuffles for one (window, level, sign) and sums their
/// histograms. A window covering the whole series admits no reordering, so
/// it is used with offset 0 as a single block.
pub fn shuffled_histogram(
    r: &ReturnSeries,
    window: usize,
    level: &ReturnLevel,
    k_index: usize,
    n_p: usize,
    tau_max: usize,
    smooth: usize,
    master_seed: u64,
) -> Result<SideStats> {
    if r.is_empty() {
        return Err(Error::validation("empty return series"));
    }
    let window_eff = window.min(r.len());
    let sign = level.sign();
    let values = r.values();

    let acc = (0..n_p)
        .into_par_iter()
        .fold(
            || Accum {
                counts: vec![0; tau_max + 1],
                ..Accum::default()
            },
            |mut acc, perm| {
                let mut rng = permutation_stream(master_seed, window, sign, k_index, perm).rng();
                let offset = if window_eff >= values.len() {
                    0
                } else {
                    uniform_below(&mut rng, window_eff as u64) as usize
                };
                let part = partition(values.len(), window_eff, offset).expect("valid partition");
                let mut order: Vec<usize> = (0..part.blocks.len()).collect();
                fisher_yates(&mut order, &mut rng);
                let mut shuffled = Vec::with_capacity(values.len());
                gather(values, &part.blocks, &order, &mut shuffled);

                let mut s = Vec::with_capacity(values.len() + 1);
                let mut x = 0.0;
                s.push(x);
                for v in &shuffled {
                    x += v;
                    s.push(x);
                }
                let mut counts = vec![0u64; tau_max + 1];
                acc.censored += accumulate_passages(&s, level.rho, tau_max, &mut counts);
                if let Ok(m) = mode_of_counts(&counts, smooth) {
                    acc.modes.push((perm, m));
                }
                acc.counts.iter_mut().zip(&counts).for_each(|(a, b)| *a += b);
                acc
            },
        )
        .reduce(
            || Accum {
                counts: vec![0; tau_max + 1],
                ..Accum::default()
            },
            |mut a, b| {
                a.counts.iter_mut().zip(&b.counts).for_each(|(x, y)| *x += y);
                a.censored += b.censored;
                a.modes.extend(b.modes);
                a
            },
        );

    let mut modes = acc.modes;
    modes.sort_unstable();
    let mut hist = FptDistribution::empty(*level, tau_max);
    hist.add_raw(&acc.counts, acc.censored);
    let tau_star = mode_of_counts(&acc.counts, smooth).map_err(|_| {
        Error::Computation(format!(
            "level {} never reached within tau_max={tau_max} at T={window}",
            level.rho
        ))
    })? as f64;
    let (mean, dispersion) = mean_std(modes.iter().map(|(_, m)| *m as f64));
    Ok(SideStats {
        tau_star,
        dispersion,
        mean_perm_mode: mean,
        censored_frac: hist.censored_fraction(),
        histogram: Some(hist),
    })
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Permutation-averaged optimal horizons over a (window, level) grid.
pub fn sweep(r: &ReturnSeries, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let sigma = volatility(r)?;
    let mut jobs = Vec::new();
    for &window in &config.windows {
        for (k_index, &k) in config.ks.iter().enumerate() {
            for &sign in config.signs.list() {
                jobs.push((window, k_index, k, sign));
            }
        }
    }
    let sides = jobs
        .par_iter()
        .map(|&(window, k_index, k, sign)| {
            let level = ReturnLevel::new(k, sigma)?.with_sign(sign);
            shuffled_histogram(
                r,
                window,
                &level,
                k_index,
                config.n_p,
                config.tau_max,
                config.smooth,
                config.master_seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<SweepCell> = Vec::new();
    for ((window, k_index, k, sign), side) in jobs.into_iter().zip(sides) {
        let idx = match cells
            .iter()
            .position(|c| c.window == window && c.k_index == k_index)
        {
            Some(i) => i,
            None => {
                cells.push(SweepCell {
                    window,
                    k,
                    k_index,
                    sigma,
                    n_p: config.n_p,
                    plus: None,
                    minus: None,
                });
                cells.len() - 1
            }
        };
        match sign {
            Sign::Plus => cells[idx].plus = Some(side),
            Sign::Minus => cells[idx].minus = Some(side),
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        sigma,
        series_len: r.len(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        cells,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

//! Command line front end.
//!
//! Every run writes flat CSV/JSON result files plus `manifest.json`, which
//! records the configuration, seed, RNG algorithm, input checksums and tool
//! version. The worker count is deliberately absent from all outputs: results
//! are identical for any degree of parallelism.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::asymmetry::{
    era_report, return_stats, summarize_levels, EraResult, LevelSummary, DEFAULT_THETA_T_HI,
    DEFAULT_T_INF,
};
use crate::error::{Error, Result};
use crate::inverse_stats::{
    fpt_distribution, gamma_scaling, mode_tau, tail_exponent, FitResult, ReturnLevel, Sign,
    DEFAULT_SMOOTH_WINDOW, DEFAULT_TAU_MAX,
};
use crate::leverage::leverage;
use crate::market_data::{
    daily_returns, default_era_boundary, load_csv, price_series_from_returns, to_log, volatility,
    CsvSchema, PriceSeries, DATE_FORMAT,
};
use crate::rng::RNG_ALGORITHM;
use crate::shuffler::{
    sweep, with_workers, Signs, SweepConfig, SweepResult, DEFAULT_KS, DEFAULT_PERMUTATIONS,
    DEFAULT_WINDOWS,
};
use crate::synth::{SynthKind, SynthSpec, DEFAULT_LENGTH};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "gainloss", version, about = "Inverse statistics and time-window shuffling of price series")]
pub struct Cli {
    /// Directory for result files.
    #[arg(long, global = true, env = "GAINLOSS_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads (0 = available parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "GAINLOSS_WORKERS", default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SignArg {
    Plus,
    Minus,
    Both,
}

impl From<SignArg> for Signs {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Signs::Plus,
            SignArg::Minus => Signs::Minus,
            SignArg::Both => Signs::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKindArg {
    Gaussian,
    StudentT,
    DropRebound,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Daily price CSV file(s); each is analysed separately.
    #[arg(long = "input", short = 'i', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value = "close")]
    pub close_column: String,
}

impl InputArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema {
            date_column: self.date_column.clone(),
            close_column: self.close_column.clone(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LevelArgs {
    /// Level magnitudes in units of the daily volatility.
    #[arg(long = "k", value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
    pub ks: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SignArg::Both)]
    pub sign: SignArg,
    #[arg(long, default_value_t = DEFAULT_TAU_MAX)]
    pub tau_max: usize,
    /// Odd moving-average width used before taking modes (1 = off).
    #[arg(long, default_value_t = DEFAULT_SMOOTH_WINDOW)]
    pub smooth: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub levels: LevelArgs,
    /// Shuffle window lengths in trading days.
    #[arg(long = "T", value_delimiter = ',', default_values_t = DEFAULT_WINDOWS.to_vec())]
    pub windows: Vec<usize>,
    /// Permutations per cell.
    #[arg(long = "np", default_value_t = DEFAULT_PERMUTATIONS)]
    pub n_p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Window length standing in for the unshuffled series.
    #[arg(long, default_value_t = DEFAULT_T_INF)]
    pub t_inf: usize,
    /// θ is fitted on windows shorter than this.
    #[arg(long, default_value_t = DEFAULT_THETA_T_HI)]
    pub theta_t_hi: usize,
}

impl SweepArgs {
    fn config(&self) -> SweepConfig {
        SweepConfig {
            windows: self.windows.clone(),
            ks: self.levels.ks.clone(),
            signs: self.levels.sign.into(),
            n_p: self.n_p,
            tau_max: self.levels.tau_max,
            smooth: self.levels.smooth,
            master_seed: self.seed,
        }
    }

    /// Sweep config that also contains T = 1 and T_inf.
    fn asymmetry_config(&self) -> SweepConfig {
        let mut cfg = self.config();
        cfg.signs = Signs::Both;
        for w in [1, self.t_inf] {
            if !cfg.windows.contains(&w) {
                cfg.windows.push(w);
            }
        }
        cfg.windows.sort_unstable();
        cfg
    }
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Validate price files and summarize their daily returns.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Write a synthetic price series.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKindArg::StudentT)]
        kind: SynthKindArg,
        /// Number of daily returns (default: length of --like, else 20000).
        #[arg(long)]
        n: Option<usize>,
        /// Reference price file whose length the series copies.
        #[arg(long)]
        like: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        #[arg(long, default_value_t = 0.01)]
        scale: f64,
        #[arg(long, default_value_t = 0.05)]
        drop: f64,
        #[arg(long, default_value_t = 10)]
        rebound_len: usize,
        #[arg(long, default_value_t = 0.02)]
        drop_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First business day of the synthetic dates.
        #[arg(long, default_value = "1950-01-02")]
        origin: String,
        #[arg(long, default_value_t = 100.0)]
        s0: f64,
        /// Output file name inside the output directory.
        #[arg(long)]
        name: Option<String>,
    },
    /// First-passage distributions, their modes and scaling fits.
    Fpt {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        levels: LevelArgs,
        /// Tail-fit range for the exponent alpha.
        #[arg(long, default_value_t = 50)]
        tail_lo: usize,
        #[arg(long, default_value_t = 1000)]
        tail_hi: usize,
    },
    /// Permutation-averaged optimal horizons over a (T, k) grid.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Asymmetry curves w(T), w_pm(T), θ fits and gamma scaling.
    Asymmetry {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Also compare the eras before and after this date.
        #[arg(long)]
        eras: Option<String>,
    },
    /// Leverage correlation function.
    Leverage {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = -50, allow_hyphen_values = true)]
        tau_lo: i64,
        #[arg(long, default_value_t = 50)]
        tau_hi: i64,
    },
    /// Era split and per-era asymmetry analysis.
    Era {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Everything: ingest, fpt, asymmetry (with gamma) and leverage.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = -50, allow_hyphen_values = true)]
        tau_lo: i64,
        #[arg(long, default_value_t = 50)]
        tau_hi: i64,
    },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub workers: usize,
    #[serde(flatten)]
    pub command: Command,
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        Self {
            out_dir: c.out_dir,
            workers: c.workers,
            command: c.command,
        }
    }
}

#[derive(Debug, Serialize)]
struct InputRecord {
    path: String,
    label: String,
    sha256: String,
    rows: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    rng_algorithm: &'static str,
    seed: Option<u64>,
    config: &'a RunConfig,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)
                .map_err(|e| Error::Computation(format!("json: {e}")))?;
            writeln!(w).map_err(|e| Error::io(name, e))
        })
    }
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT)
        .map_err(|e| Error::Config(format!("bad date '{s}': {e}")))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn load_inputs(input: &InputArgs, records: &mut Vec<InputRecord>) -> Result<Vec<PriceSeries>> {
    let schema = input.schema();
    let mut out = Vec::new();
    for path in &input.inputs {
        let p = load_csv(path, &schema)?;
        records.push(InputRecord {
            path: path.display().to_string(),
            label: p.label().to_string(),
            sha256: sha256_file(path)?,
            rows: p.len(),
        });
        out.push(p);
    }
    let mut labels: Vec<&str> = out.iter().map(|p| p.label()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("input files must have distinct file stems".into()));
    }
    Ok(out)
}

/// Runs one command and writes its artifacts plus the manifest.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut out = Outputs {
        dir: config.out_dir.clone(),
        files: Vec::new(),
    };
    let mut inputs = Vec::new();
    let seed = with_workers(config.workers, || execute(&config.command, &mut out, &mut inputs))??;
    let manifest = Manifest {
        tool: "gainloss",
        version: TOOL_VERSION,
        rng_algorithm: RNG_ALGORITHM,
        seed,
        config,
        inputs,
        outputs: out.files.clone(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(RunOutcome {
        out_dir: out.dir,
        files: out.files,
    })
}

fn execute(cmd: &Command, out: &mut Outputs, records: &mut Vec<InputRecord>) -> Result<Option<u64>> {
    match cmd {
        Command::Ingest { input } => {
            for p in load_inputs(input, records)? {
                ingest(&p, out)?;
            }
            Ok(None)
        }
        Command::Synth {
            kind,
            n,
            like,
            sigma,
            nu,
            scale,
            drop,
            rebound_len,
            drop_prob,
            seed,
            origin,
            s0,
            name,
        } => {
            let n = match (n, like) {
                (Some(n), _) => *n,
                (None, Some(path)) => load_csv(path, &CsvSchema::default())?.len() - 1,
                (None, None) => DEFAULT_LENGTH,
            };
            let kind = match kind {
                SynthKindArg::Gaussian => SynthKind::Gaussian { sigma: *sigma },
                SynthKindArg::StudentT => SynthKind::StudentT { nu: *nu, scale: *scale },
                SynthKindArg::DropRebound => SynthKind::DropRebound {
                    sigma: *sigma,
                    drop_magnitude: *drop,
                    rebound_len: *rebound_len,
                    drop_prob: *drop_prob,
                },
            };
            let spec = SynthSpec { kind, n, seed: *seed };
            let r = spec.generate()?;
            let label = name.clone().unwrap_or_else(|| {
                format!("synth_{}", serde_json::to_value(kind).ok()
                    .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
                    .unwrap_or_default())
            });
            let p = price_series_from_returns(&r, *s0, parse_date(origin)?, label.clone())?;
            let file = if label.ends_with(".csv") { label } else { format!("{label}.csv") };
            out.write(&file, |w| p.write_csv(w))?;
            out.json(
                &file.replace(".csv", ".json"),
                &serde_json::json!({ "spec": spec, "sigma": volatility(&r)?, "rng_algorithm": RNG_ALGORITHM }),
            )?;
            Ok(Some(*seed))
        }
        Command::Fpt {
            input,
            levels,
            tail_lo,
            tail_hi,
        } => {
            for p in load_inputs(input, records)? {
                fpt_command(&p, levels, *tail_lo, *tail_hi, out)?;
            }
            Ok(None)
        }
        Command::Sweep { input, sweep: args } => {
            for p in load_inputs(input, records)? {
                let r = daily_returns(&to_log(&p))?;
                let res = sweep(&r, &args.config())?;
                write_sweep(p.label(), &res, out)?;
            }
            Ok(Some(args.seed))
        }
        Command::Asymmetry {
            input,
            sweep: args,
            eras,
        } => {
            let boundary = eras.as_deref().map(parse_date).transpose()?;
            for p in load_inputs(input, records)? {
                asymmetry_command(&p, args, out)?;
                if let Some(b) = boundary {
                    era_command(&p, args, b, out)?;
                }
            }
            Ok(Some(args.seed))
        }
        Command::Leverage {
            input,
            tau_lo,
            tau_hi,
        } => {
            for p in load_inputs(input, records)? {
                leverage_command(&p, *tau_lo, *tau_hi, out)?;
            }
            Ok(None)
        }
        Command::Era {
            input,
            sweep: args,
            boundary,
        } => {
            let b = boundary
                .as_deref()
                .map(parse_date)
                .transpose()?
                .unwrap_or_else(default_era_boundary);
            for p in load_inputs(input, records)? {
                era_command(&p, args, b, out)?;
            }
            Ok(Some(args.seed))
        }
        Command::Report {
            input,
            sweep: args,
            tau_lo,
            tau_hi,
        } => {
            for p in load_inputs(input, records)? {
                ingest(&p, out)?;
                fpt_command(&p, &args.levels, 50, args.levels.tau_max, out)?;
                asymmetry_command(&p, args, out)?;
                leverage_command(&p, *tau_lo, *tau_hi, out)?;
            }
            Ok(Some(args.seed))
        }
    }
}

fn ingest(p: &PriceSeries, out: &mut Outputs) -> Result<()> {
    let log = to_log(p);
    let r = daily_returns(&log)?;
    let label = p.label();
    out.write(&format!("series_{label}.csv"), |w| {
        writeln!(w, "# sigma={}", volatility(&r)?).map_err(io_err)?;
        writeln!(w, "date,close,log_close,return").map_err(io_err)?;
        for (i, (d, c)) in p.dates().iter().zip(p.close()).enumerate() {
            let ret = if i == 0 { String::new() } else { r.values()[i - 1].to_string() };
            writeln!(w, "{},{},{},{}", d.format(DATE_FORMAT), c, log.values()[i], ret).map_err(io_err)?;
        }
        Ok(())
    })?;
    out.json(
        &format!("summary_{label}.json"),
        &serde_json::json!({
            "label": label,
            "rows": p.len(),
            "first_date": p.first_date(),
            "last_date": p.last_date(),
            "sigma": volatility(&r)?,
            "returns": return_stats(&r)?,
        }),
    )
}

#[derive(Debug, Serialize)]
struct FptSummaryRow {
    k: f64,
    sign: &'static str,
    rho: f64,
    sigma: f64,
    tau_star: usize,
    passages: u64,
    censored: u64,
    alpha: Option<FitResult>,
}

fn fpt_command(p: &PriceSeries, levels: &LevelArgs, tail_lo: usize, tail_hi: usize, out: &mut Outputs) -> Result<()> {
    let log = to_log(p);
    let r = daily_returns(&log)?;
    let sigma = volatility(&r)?;
    let label = p.label();
    let signs: Signs = levels.sign.into();
    let mut rows = Vec::new();
    for &k in &levels.ks {
        for &sign in signs.list() {
            let level = ReturnLevel::new(k, sigma)?.with_sign(sign);
            let d = fpt_distribution(&log, &level, levels.tau_max)?;
            let tag = format!("{label}_k{k}_{}", sign_word(sign));
            out.write(&format!("fpt_{tag}.csv"), |w| d.write_csv(w))?;
            let tau_star = mode_tau(&d, levels.smooth)?;
            let alpha = tail_exponent(&d, tail_lo, tail_hi).ok();
            out.json(
                &format!("fpt_{tag}.json"),
                &serde_json::json!({
                    "k": k, "rho": level.rho, "sigma": sigma, "tau_max": d.tau_max,
                    "total_starts": d.total_starts, "censored": d.censored,
                    "smoothing": levels.smooth, "tau_star": tau_star, "alpha": alpha,
                    "counts": d.iter().collect::<Vec<_>>(),
                }),
            )?;
            rows.push(FptSummaryRow {
                k,
                sign: sign.as_str(),
                rho: level.rho,
                sigma,
                tau_star,
                passages: d.passages(),
                censored: d.censored,
                alpha,
            });
        }
    }
    out.write(&format!("fpt_modes_{label}.csv"), |w| {
        writeln!(w, "# sigma={sigma}").map_err(io_err)?;
        writeln!(w, "k,sign,rho,tau_star,passages,censored").map_err(io_err)?;
        for row in &rows {
            writeln!(w, "{},{},{},{},{},{}", row.k, row.sign, row.rho, row.tau_star, row.passages, row.censored)
                .map_err(io_err)?;
        }
        Ok(())
    })?;
    let gammas: Vec<serde_json::Value> = signs
        .list()
        .iter()
        .map(|&sign| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.sign == sign.as_str())
                .map(|row| (row.rho, row.tau_star as f64))
                .collect();
            let fit = gamma_scaling(&pts, 3.0 * sigma);
            serde_json::json!({
                "sign": sign.as_str(),
                "gamma": fit.as_ref().ok(),
                "error": fit.as_ref().err().map(|e| e.to_string()),
            })
        })
        .collect();
    out.json(
        &format!("fpt_summary_{label}.json"),
        &serde_json::json!({ "sigma": sigma, "levels": rows, "gamma": gammas }),
    )
}

fn sign_word(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn write_sweep(label: &str, res: &SweepResult, out: &mut Outputs) -> Result<()> {
    out.write(&format!("sweep_{label}.csv"), |w| res.write_csv(w))?;
    out.json(&format!("sweep_{label}.json"), res)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_levels(tag: &str, sigma: f64, levels: &[LevelSummary], out: &mut Outputs) -> Result<()> {
    for lvl in levels {
        if let Some(c) = &lvl.curve {
            out.write(&format!("w_{tag}_k{}.csv", lvl.k), |w| {
                writeln!(
                    w,
                    "# sigma={sigma} k={} t_inf={} tau_star_1={} tau_star_inf_plus={} tau_star_inf_minus={}",
                    lvl.k, c.t_inf, c.tau_star_1, c.tau_star_inf_plus, c.tau_star_inf_minus
                )
                .map_err(io_err)?;
                writeln!(w, "T,w,w_plus,w_minus,tau_star_plus,tau_star_minus,delta").map_err(io_err)?;
                for p in &c.points {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        p.window,
                        p.w,
                        fmt_opt(p.w_plus),
                        fmt_opt(p.w_minus),
                        p.tau_star_plus,
                        p.tau_star_minus,
                        p.delta
                    )
                    .map_err(io_err)?;
                }
                Ok(())
            })?;
        }
    }
    out.write(&format!("theta_{tag}.csv"), |w| {
        writeln!(w, "# sigma={sigma}").map_err(io_err)?;
        writeln!(w, "k,theta,stderr,T_lo,T_hi,n_points,excluded_overshoot,error").map_err(io_err)?;
        for lvl in levels {
            match &lvl.theta {
                Some(t) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},",
                    lvl.k, t.theta, t.stderr, t.fit_range_t.0, t.fit_range_t.1, t.n_points, t.excluded_overshoot
                ),
                None => writeln!(
                    w,
                    "{},,,,,,,\"{}\"",
                    lvl.k,
                    lvl.error.clone().unwrap_or_default().replace('"', "'")
                ),
            }
            .map_err(io_err)?;
        }
        Ok(())
    })
}

/// gamma fits over levels above 3 sigma at the given window, per sign.
fn gamma_rows(res: &SweepResult, window: usize) -> Vec<(Sign, Result<FitResult>)> {
    [Sign::Plus, Sign::Minus]
        .into_iter()
        .map(|sign| {
            let pts: Vec<(f64, f64)> = res
                .cells
                .iter()
                .filter(|c| c.window == window)
                .filter_map(|c| c.side(sign).map(|s| (c.rho(), s.tau_star)))
                .collect();
            (sign, gamma_scaling(&pts, 3.0 * res.sigma))
        })
        .collect()
}

fn asymmetry_command(p: &PriceSeries, args: &SweepArgs, out: &mut Outputs) -> Result<()> {
    let r = daily_returns(&to_log(p))?;
    let res = sweep(&r, &args.asymmetry_config())?;
    let label = p.label();
    write_sweep(label, &res, out)?;
    let levels = summarize_levels(&res, args.t_inf, args.theta_t_hi);
    write_levels(label, res.sigma, &levels, out)?;
    out.write(&format!("gamma_{label}.csv"), |w| {
        writeln!(w, "# sigma={} fit over |rho| > 3 sigma", res.sigma).map_err(io_err)?;
        writeln!(w, "T,sign,gamma,stderr,n_points").map_err(io_err)?;
        for window in [args.t_inf, 1] {
            for (sign, fit) in gamma_rows(&res, window) {
                if let Ok(f) = fit {
                    writeln!(w, "{},{},{},{},{}", window, sign.as_str(), f.value, f.stderr, f.n_points)
                        .map_err(io_err)?;
                }
            }
        }
        Ok(())
    })?;
    out.json(
        &format!("asymmetry_{label}.json"),
        &serde_json::json!({ "sigma": res.sigma, "t_inf": args.t_inf, "levels": levels }),
    )
}

fn era_command(p: &PriceSeries, args: &SweepArgs, boundary: NaiveDate, out: &mut Outputs) -> Result<()> {
    let rep = era_report(p, boundary, &args.asymmetry_config(), args.t_inf, args.theta_t_hi)?;
    let label = p.label();
    for (name, era) in [("before", &rep.before), ("after", &rep.after)] {
        write_levels(&format!("{label}_{name}"), era.sigma, &era.levels, out)?;
    }
    out.write(&format!("era_theta_{label}.csv"), |w| {
        writeln!(w, "# boundary={}", boundary.format(DATE_FORMAT)).map_err(io_err)?;
        writeln!(w, "era,first_date,last_date,sigma,k,theta,stderr").map_err(io_err)?;
        for (name, era) in [("before", &rep.before), ("after", &rep.after)] {
            write_era_rows(w, name, era)?;
        }
        Ok(())
    })?;
    out.json(&format!("era_{label}.json"), &rep)
}

fn write_era_rows(w: &mut dyn Write, name: &str, era: &EraResult) -> Result<()> {
    for lvl in &era.levels {
        let (theta, se) = lvl
            .theta
            .map(|t| (t.theta.to_string(), t.stderr.to_string()))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            name,
            era.first_date.format(DATE_FORMAT),
            era.last_date.format(DATE_FORMAT),
            era.sigma,
            lvl.k,
            theta,
            se
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn leverage_command(p: &PriceSeries, tau_lo: i64, tau_hi: i64, out: &mut Outputs) -> Result<()> {
    let r = daily_returns(&to_log(p))?;
    let curve = leverage(&r, tau_lo, tau_hi)?;
    let sigma = volatility(&r)?;
    out.write(&format!("leverage_{}.csv", p.label()), |w| curve.write_csv(w, sigma))
}

/// Parses arguments, runs, and maps errors to exit codes
/// (0 ok, 2 config, 3 io, 4 data, 5 fit).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = RunConfig::from(cli);
    match run(&config) {
        Ok(outcome) => {
            println!(
                "wrote {} files to {}",
                outcome.files.len(),
                outcome.out_dir.display()
            );
            0
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.category(), "message": e.to_string() })
            );
            e.exit_code()
        }
    }
}

//! Command-line front end: code generation, BER sweeps, uncoded detection
//! sweeps, density-evolution thresholds and SNR conversion.
//!
//! Every run starts from a JSON configuration (`--config`, or the defaults)
//! and applies command-line flags on top. Relative output paths are placed
//! under `$TWODOS_OUT_DIR` when it is set.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use twodos::channel::{sigma2_from_snr_db, snr_db, SignalLevelTable};
use twodos::density_evolution::DeCode;
use twodos::harness::{
    emit_results, run_ber_sweep_with, run_gen_code, run_threshold_with, write_json, CodeSource,
    ExperimentConfig, Mode, OutputFormat,
};

const OUT_DIR_ENV: &str = "TWODOS_OUT_DIR";

#[derive(Parser)]
#[command(name = "twodos", version, about = "Joint equalization and LDPC decoding for 2D optical storage")]
struct Cli {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Plain-text signal-level table replacing the built-in levels.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a regular LDPC code and write it as an alist file.
    GenCode(GenCodeArgs),
    /// Coded BER sweep on the full graph.
    Ber(BerArgs),
    /// Uncoded detection BER sweep.
    Detect(DetectArgs),
    /// Density-evolution noise-tolerance thresholds.
    Threshold(ThresholdArgs),
    /// Convert between noise variance and SNR in dB.
    Snr(SnrArgs),
}

#[derive(Args)]
struct GenCodeArgs {
    #[arg(long, default_value_t = 3)]
    dv: usize,
    #[arg(long, default_value_t = 30)]
    dc: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output alist path; metadata goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep points in dB (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "sigma2")]
    snr: Option<Vec<f64>>,
    /// Sweep points as noise variances (comma separated).
    #[arg(long, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    /// Iteration caps to report (comma separated).
    #[arg(long, value_delimiter = ',')]
    iters: Option<Vec<usize>>,
    /// Page size as ROWSxCOLS.
    #[arg(long)]
    page: Option<Dims>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    min_frames: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Frames decoded between stop-rule checks.
    #[arg(long)]
    batch: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    llr_clamp: Option<f64>,
    /// Output file; `.csv` for CSV, anything else for JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BerArgs {
    /// Code in alist format.
    #[arg(long, conflicts_with_all = ["dv", "dc", "n", "code_seed"])]
    alist: Option<PathBuf>,
    #[arg(long)]
    dv: Option<usize>,
    #[arg(long)]
    dc: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Seed of a generated code.
    #[arg(long)]
    code_seed: Option<u64>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Code degrees as DV,DC; DC may be `inf` for the uncoded channel.
    /// Repeat for several codes.
    #[arg(long = "code")]
    codes: Vec<CodeArg>,
    /// Monte Carlo message samples per data-node update.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    target_pe: Option<f64>,
    /// Bisection bracket as LO,HI.
    #[arg(long, value_delimiter = ',')]
    bracket: Option<Vec<f64>>,
    /// Bisection stops when the bracket is narrower than this.
    #[arg(long)]
    tol: Option<f64>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("value").required(true))]
struct SnrArgs {
    /// Noise variance to convert to dB.
    #[arg(long, group = "value")]
    sigma2: Option<f64>,
    /// SNR in dB to convert to a noise variance.
    #[arg(long, group = "value", allow_hyphen_values = true)]
    db: Option<f64>,
    /// Code rate (1 for uncoded and threshold figures).
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

#[derive(Clone, Copy)]
struct Dims(usize, usize);

impl FromStr for Dims {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (r, c) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Dims(parse(r)?, parse(c)?))
    }
}

#[derive(Clone, Copy)]
struct CodeArg(DeCode);

impl FromStr for CodeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (dv, dc) = s.split_once(',').ok_or("expected DV,DC")?;
        let dv = dv.trim().parse().map_err(|e| format!("dv {dv:?}: {e}"))?;
        let dc = match dc.trim() {
            "inf" | "none" => None,
            d => Some(d.parse().map_err(|e| format!("dc {d:?}: {e}"))?),
        };
        Ok(CodeArg(DeCode { dv, dc }))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let base = |mode: Mode| -> Result<ExperimentConfig> {
        let mut cfg = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::new(mode),
        };
        cfg.mode = mode;
        if let Some(t) = &cli.table {
            cfg.table = SignalLevelTable::load(t)?;
        }
        if cli.threads.is_some() {
            cfg.threads = cli.threads;
        }
        Ok(cfg)
    };

    match cli.command {
        Command::GenCode(a) => {
            let mut cfg = base(Mode::GenCode)?;
            cfg.code = Some(CodeSource::Generate {
                dv: a.dv,
                dc: a.dc,
                n: a.n,
                seed: a.seed,
            });
            cfg.output = Some(out_path(&a.out));
            ensure_parent(cfg.output.as_ref().expect("set above"))?;
            let meta = run_gen_code(&cfg)?;
            let path = cfg.output.as_ref().expect("set above");
            println!("{}", path.display());
            eprintln!("{}", serde_json::to_string(&meta)?);
        }
        Command::Ber(a) => {
            let mut cfg = base(Mode::BerSweep)?;
            if let Some(path) = a.alist {
                cfg.code = Some(CodeSource::Alist { path });
            } else if a.dv.is_some() || a.dc.is_some() || a.n.is_some() || a.code_seed.is_some() {
                let (dv0, dc0, n0, s0) = match cfg.code {
                    Some(CodeSource::Generate { dv, dc, n, seed }) => (dv, dc, n, seed),
                    _ => (3, 30, 10_000, 1),
                };
                cfg.code = Some(CodeSource::Generate {
                    dv: a.dv.unwrap_or(dv0),
                    dc: a.dc.unwrap_or(dc0),
                    n: a.n.unwrap_or(n0),
                    seed: a.code_seed.unwrap_or(s0),
                });
            }
            sweep(cfg, a.sweep, "ber.csv")?;
        }
        Command::Detect(a) => {
            let cfg = base(Mode::DetectUncoded)?;
            sweep(cfg, a.sweep, "detect.csv")?;
        }
        Command::Threshold(a) => {
            let mut cfg = base(Mode::Threshold)?;
            let th = &mut cfg.threshold;
            if !a.codes.is_empty() {
                th.codes = a.codes.iter().map(|c| c.0).collect();
            }
            if let Some(s) = a.samples {
                th.mc.samples = s;
                th.mc.min_samples = th.mc.min_samples.min(s);
            }
            if let Some(s) = a.seed {
                th.mc.seed = s;
            }
            if let Some(m) = a.max_iters {
                th.max_iters = m;
            }
            if let Some(t) = a.target_pe {
                th.target_pe = t;
            }
            if let Some(b) = a.bracket {
                if b.len() != 2 {
                    anyhow::bail!("--bracket takes LO,HI");
                }
                th.search.lo = b[0];
                th.search.hi = b[1];
            }
            if let Some(t) = a.tol {
                th.search.tol = t;
            }
            let out = out_path(&a.out.unwrap_or_else(|| "threshold.json".into()));
            cfg.output = Some(out.clone());
            cfg.validate()?;
            let report = run_threshold_with(&cfg, |code, p| {
                eprintln!(
                    "{code}: sigma2 {:.6} -> {:?} after {} iterations (final p_e {:.3e})",
                    p.sigma2, p.outcome, p.iterations, p.pe.last().copied().unwrap_or(f64::NAN)
                );
            })?;
            ensure_parent(&out)?;
            write_json(&out, &report)?;
            println!("code\tsigma2*\tsnr_db");
            for r in &report.results {
                println!("{}\t{:.5}\t{:.3}", r.code, r.sigma2_star, r.snr_db);
            }
            eprintln!("report written to {}", out.display());
        }
        Command::Snr(a) => {
            let table = match &cli.table {
                Some(t) => SignalLevelTable::load(t)?,
                None => SignalLevelTable::default(),
            };
            match (a.sigma2, a.db) {
                (Some(s), _) => println!("{:.4}", snr_db(s, a.rate, &table)?),
                (None, Some(d)) => println!("{:.6}", sigma2_from_snr_db(d, a.rate, &table)?),
                (None, None) => unreachable!("clap requires one"),
            }
        }
    }
    Ok(())
}

fn sweep(mut cfg: ExperimentConfig, a: SweepArgs, default_out: &str) -> Result<()> {
    if a.snr.is_some() {
        cfg.snr_db = a.snr;
        cfg.sigma2 = None;
    }
    if a.sigma2.is_some() {
        cfg.sigma2 = a.sigma2;
        cfg.snr_db = None;
    }
    if let Some(i) = a.iters {
        cfg.iterations = i;
    }
    if let Some(Dims(r, c)) = a.page {
        cfg.page_dims = Some((r, c));
    }
    if let Some(v) = a.min_errors {
        cfg.stop.min_bit_errors = v;
    }
    if let Some(v) = a.min_frames {
        cfg.stop.min_frames = v;
    }
    if let Some(v) = a.max_frames {
        cfg.stop.max_frames = v;
    }
    if let Some(v) = a.batch {
        cfg.batch_frames = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.llr_clamp {
        cfg.llr_clamp = v;
    }
    let out = out_path(&a.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| default_out.into()));
    cfg.output = Some(out.clone());
    cfg.validate()?;

    println!("snr_db\tsigma2\titers\tframes\tbit_errors\tber");
    let records = run_ber_sweep_with(&cfg, |r| {
        println!(
            "{:.3}\t{:.6}\t{}\t{}\t{}\t{:.3e}",
            r.snr_db, r.sigma2, r.iters, r.frames, r.bit_errors, r.ber
        );
        eprintln!(
            "point {:.3} dB, {} iterations done in {:.1} s{}",
            r.snr_db,
            r.iters,
            r.seconds,
            if r.early_stop { " (error target reached)" } else { "" }
        );
    })?;
    emit_results(&records, &cfg, &out, OutputFormat::from_path(&out))?;
    eprintln!("results written to {}", out.display());
    Ok(())
}

/// `path` placed under `$TWODOS_OUT_DIR` when it is relative and the
/// variable is set.
fn out_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

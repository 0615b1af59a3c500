//! Command-line driver for the quantized-precoding simulator.
//!
//! Subcommands map onto the sweep engines: `ber`, `rate`, `csi` and
//! `analytic`. Flags can also be given in a flat `key = value` config file
//! (`--config`); command-line flags override file values. Results are
//! written as CSV to `--out` or standard output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmimo::channel::Constellation;
use qmimo::error::{Error, Result};
use qmimo::sim::{
    analytic_curves, run_ber_sweep, run_csi_sweep, run_rate_sweep, write_csv, write_csv_path,
    DacConfig, PrecoderSel, ResultRow, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "qmimo",
    about = "Quantized massive MU-MIMO downlink precoding simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Uncoded-BER sweep over SNR (QPSK, nearest-neighbor decoding)
    Ber(RunArgs),
    /// Achievable-rate sweep over SNR (Gaussian codebook, histogram MI)
    Rate(RunArgs),
    /// Uncoded-BER sweep over the CSI error at fixed SNR
    Csi(RunArgs),
    /// Closed-form BER/rate approximation curves
    Analytic(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Base-station antenna count
    #[arg(long)]
    b: Option<usize>,
    /// User count
    #[arg(long)]
    u: Option<usize>,
    /// DAC levels per real dimension, or `inf`
    #[arg(long)]
    levels: Option<String>,
    /// SNR grid in dB: comma list or `start:step:stop`
    #[arg(long)]
    snr: Option<String>,
    /// Comma list of precoders: wf,zf,mrt,exhaustive,sdr1,sdrr,squid,sp
    #[arg(long)]
    precoders: Option<String>,
    /// Symbol-trial cap per point (`rate`: draws per channel)
    #[arg(long)]
    trials: Option<u64>,
    /// Channel realizations per point
    #[arg(long)]
    channels: Option<usize>,
    /// CSI error grid, comma list in [0, 1] (`csi` only)
    #[arg(long)]
    eps: Option<String>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

/// `key = value` lines, `#` comments. Keys mirror the long flags.
fn load_config_file(path: &PathBuf, args: &mut RunArgs) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim().to_string());
        let bad = |what: &str| {
            Error::Config(format!("{}:{}: bad {what} '{value}'", path.display(), lineno + 1))
        };
        match key {
            "b" => args.b = args.b.or(Some(value.parse().map_err(|_| bad("b"))?)),
            "u" => args.u = args.u.or(Some(value.parse().map_err(|_| bad("u"))?)),
            "levels" => args.levels = args.levels.take().or(Some(value)),
            "snr" => args.snr = args.snr.take().or(Some(value)),
            "precoders" => args.precoders = args.precoders.take().or(Some(value)),
            "trials" => {
                args.trials = args.trials.or(Some(value.parse().map_err(|_| bad("trials"))?))
            }
            "channels" => {
                args.channels = args.channels.or(Some(value.parse().map_err(|_| bad("channels"))?))
            }
            "eps" => args.eps = args.eps.take().or(Some(value)),
            "seed" => args.seed = args.seed.or(Some(value.parse().map_err(|_| bad("seed"))?)),
            "out" => args.out = args.out.take().or(Some(PathBuf::from(value))),
            "threads" => {
                args.threads = args.threads.or(Some(value.parse().map_err(|_| bad("threads"))?))
            }
            other => {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(())
}

fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>> {
    let bad = |detail: String| Error::Config(format!("bad {what} grid: {detail}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:stop".into()));
        }
        let parse =
            |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) {
            return Err(bad("step must be positive".into()));
        }
        let mut grid = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + f64::from(k) * step;
            if v > stop + 1e-9 {
                break;
            }
            grid.push(v);
            k += 1;
        }
        if grid.is_empty() {
            return Err(bad("empty range".into()));
        }
        Ok(grid)
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number"))))
            .collect()
    }
}

fn build_config(mut args: RunArgs, rate_mode: bool) -> Result<SimConfig> {
    if let Some(path) = args.config.take() {
        load_config_file(&path, &mut args)?;
    }
    let b = args.b.ok_or_else(|| Error::Config("missing --b".into()))?;
    let u = args.u.ok_or_else(|| Error::Config("missing --u".into()))?;
    let mut cfg = SimConfig::new(b, u);
    if let Some(levels) = &args.levels {
        cfg.dac = DacConfig::parse(levels)?;
    }
    if let Some(snr) = &args.snr {
        cfg.snr_db = parse_grid(snr, "snr")?;
    }
    if let Some(precoders) = &args.precoders {
        cfg.precoders = precoders.split(',').map(PrecoderSel::parse).collect::<Result<_>>()?;
    }
    if let Some(trials) = args.trials {
        if rate_mode {
            cfg.rate_draws_per_channel = trials;
        } else {
            cfg.trials_per_point = trials;
        }
    }
    if let Some(channels) = args.channels {
        cfg.channels_per_point = channels;
    }
    if let Some(eps) = &args.eps {
        cfg.csi_eps = parse_grid(eps, "eps")?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.threads = args.threads;
    if rate_mode {
        cfg.constellation = Constellation::GaussianCodebook;
    }
    Ok(cfg)
}

fn emit(rows: &[ResultRow], out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_csv_path(rows, path),
        None => write_csv(rows, std::io::stdout().lock()),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Ber(args) => {
            let out = args.out.clone();
            let cfg = build_config(args, false)?;
            emit(&run_ber_sweep(&cfg)?, out.as_ref())
        }
        Cmd::Rate(args) => {
            let out = args.out.clone();
            let cfg = build_config(args, true)?;
            emit(&run_rate_sweep(&cfg)?, out.as_ref())
        }
        Cmd::Csi(args) => {
            let out = args.out.clone();
            let cfg = build_config(args, false)?;
            emit(&run_csi_sweep(&cfg)?, out.as_ref())
        }
        Cmd::Analytic(args) => {
            let out = args.out.clone();
            let cfg = build_config(args, false)?;
            emit(&analytic_curves(&cfg)?, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

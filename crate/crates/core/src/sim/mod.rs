//! Deterministic Monte-Carlo sweep engine.
//!
//! A sweep is described by a [`SimConfig`] and produces [`ResultRow`]s, one
//! per (precoder, operating point, metric). All randomness is drawn from
//! counter-based substreams of the configured seed, work is fanned out over
//! a thread pool in fixed-size blocks and reduced in index order, so the
//! output bytes depend only on the configuration — never on thread count or
//! scheduling.

mod analytic;
mod ber;
mod csv;
mod rate;

pub use analytic::analytic_curves;
pub use ber::{run_ber_sweep, run_csi_sweep};
pub use csv::{parse_csv, rows_to_csv_string, write_csv, write_csv_path};
pub use rate::{histogram_mutual_information, run_rate_sweep, MiParams};

use crate::channel::Constellation;
use crate::error::{Error, Result};
use crate::linear::PrecoderKind;
use crate::nonlinear::{exhaustive::MAX_EXHAUSTIVE_ANTENNAS, sphere::MAX_SPHERE_ANTENNAS};
use crate::nonlinear::{SphereOptions, SquidOptions};
use crate::sdp::SdpOptions;

/// DAC resolution axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DacConfig {
    /// Infinite-resolution DACs.
    Infinite,
    /// Uniform DACs with `L` levels per real dimension.
    Levels(usize),
}

impl DacConfig {
    /// Parses `"inf"` or an integer level count.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "inf" | "Inf" | "INF" => Ok(DacConfig::Infinite),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|&l| l >= 2)
                .map(DacConfig::Levels)
                .ok_or_else(|| Error::Config(format!("invalid DAC level spec '{other}'"))),
        }
    }

    /// Level count, `None` for infinite resolution.
    pub fn levels(&self) -> Option<usize> {
        match self {
            DacConfig::Infinite => None,
            DacConfig::Levels(l) => Some(*l),
        }
    }
}

/// Precoders selectable in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderSel {
    Wf,
    Zf,
    Mrt,
    Exhaustive,
    Sdr1,
    Sdrr,
    Squid,
    Sp,
}

impl PrecoderSel {
    pub const ALL: [PrecoderSel; 8] = [
        PrecoderSel::Wf,
        PrecoderSel::Zf,
        PrecoderSel::Mrt,
        PrecoderSel::Exhaustive,
        PrecoderSel::Sdr1,
        PrecoderSel::Sdrr,
        PrecoderSel::Squid,
        PrecoderSel::Sp,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            PrecoderSel::Wf => "wf",
            PrecoderSel::Zf => "zf",
            PrecoderSel::Mrt => "mrt",
            PrecoderSel::Exhaustive => "exhaustive",
            PrecoderSel::Sdr1 => "sdr1",
            PrecoderSel::Sdrr => "sdrr",
            PrecoderSel::Squid => "squid",
            PrecoderSel::Sp => "sp",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.tag() == text.trim().to_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown precoder '{text}'")))
    }

    /// True for the 1-bit nonlinear methods.
    pub fn is_nonlinear(&self) -> bool {
        !matches!(self, PrecoderSel::Wf | PrecoderSel::Zf | PrecoderSel::Mrt)
    }

    /// The analysis-side precoder kind, for linear selections.
    pub fn linear_kind(&self) -> Option<PrecoderKind> {
        match self {
            PrecoderSel::Wf => Some(PrecoderKind::Wf),
            PrecoderSel::Zf => Some(PrecoderKind::Zf),
            PrecoderSel::Mrt => Some(PrecoderKind::Mrt),
            _ => None,
        }
    }
}

/// What a [`ResultRow`] value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Ber,
    SumRate,
    PerUserRate,
    AnalyticBer,
    AnalyticRate,
    RateLb,
}

impl MetricKind {
    pub fn tag(&self) -> &'static str {
        match self {
            MetricKind::Ber => "ber",
            MetricKind::SumRate => "sum_rate",
            MetricKind::PerUserRate => "per_user_rate",
            MetricKind::AnalyticBer => "analytic_ber",
            MetricKind::AnalyticRate => "analytic_rate",
            MetricKind::RateLb => "rate_lb",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        [
            MetricKind::Ber,
            MetricKind::SumRate,
            MetricKind::PerUserRate,
            MetricKind::AnalyticBer,
            MetricKind::AnalyticRate,
            MetricKind::RateLb,
        ]
        .iter()
        .copied()
        .find(|m| m.tag() == text)
        .ok_or_else(|| Error::Config(format!("unknown metric '{text}'")))
    }
}

/// One output record of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub precoder: String,
    pub b: usize,
    pub u: usize,
    /// DAC levels; `None` encodes infinite resolution.
    pub levels: Option<usize>,
    pub snr_db: f64,
    /// CSI error, present only in CSI sweeps.
    pub eps: Option<f64>,
    pub metric: MetricKind,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub b: usize,
    pub u: usize,
    pub dac: DacConfig,
    pub snr_db: Vec<f64>,
    pub precoders: Vec<PrecoderSel>,
    pub constellation: Constellation,
    /// Symbol-trial cap per (precoder, operating point).
    pub trials_per_point: u64,
    /// Channel realizations averaged per point.
    pub channels_per_point: usize,
    /// CSI-error grid for [`run_csi_sweep`].
    pub csi_eps: Vec<f64>,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Bit errors after which a BER point stops early.
    pub error_target: u64,
    /// Trials per work unit; `0` picks a size from the budget.
    pub block_size: u64,
    /// Symbol/noise draws per channel in rate sweeps.
    pub rate_draws_per_channel: u64,
    pub squid: SquidOptions,
    pub sphere: SphereOptions,
    pub sdp: SdpOptions,
    /// Rounding draws for the randomized SDR extraction.
    pub sdr_randomizations: usize,
}

impl SimConfig {
    /// Defaults for a `B x U` system: 1-bit DACs, QPSK, a coarse SNR grid.
    pub fn new(b: usize, u: usize) -> Self {
        Self {
            b,
            u,
            dac: DacConfig::Levels(2),
            snr_db: (-10..=10).step_by(2).map(f64::from).collect(),
            precoders: vec![PrecoderSel::Zf],
            constellation: Constellation::Qpsk,
            trials_per_point: 10_000,
            channels_per_point: 10,
            csi_eps: Vec::new(),
            seed: 0,
            threads: None,
            error_target: 200,
            block_size: 0,
            rate_draws_per_channel: 100_000,
            squid: SquidOptions::default(),
            sphere: SphereOptions::default(),
            sdp: SdpOptions { tol: 1e-4, max_iter: 20_000 },
            sdr_randomizations: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u < 1 || self.b < self.u {
            return Err(Error::Config(format!(
                "need B >= U >= 1, got B={}, U={}",
                self.b, self.u
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.precoders.is_empty() {
            return Err(Error::Config("no precoders selected".into()));
        }
        if self.trials_per_point == 0 || self.channels_per_point == 0 {
            return Err(Error::Config("trial and channel budgets must be positive".into()));
        }
        if self.error_target == 0 {
            return Err(Error::Config("error target must be positive".into()));
        }
        for p in &self.precoders {
            if p.is_nonlinear() && self.dac != DacConfig::Levels(2) {
                return Err(Error::Config(format!(
                    "precoder '{}' requires 1-bit DACs (levels = 2)",
                    p.tag()
                )));
            }
            match p {
                PrecoderSel::Exhaustive if self.b > MAX_EXHAUSTIVE_ANTENNAS => {
                    return Err(Error::Config(format!(
                        "exhaustive precoder refuses B={} (limit {MAX_EXHAUSTIVE_ANTENNAS})",
                        self.b
                    )));
                }
                PrecoderSel::Sp if self.b > MAX_SPHERE_ANTENNAS => {
                    return Err(Error::Config(format!(
                        "sphere precoder refuses B={} (limit {MAX_SPHERE_ANTENNAS})",
                        self.b
                    )));
                }
                PrecoderSel::Sdr1 | PrecoderSel::Sdrr if self.b > MAX_SPHERE_ANTENNAS => {
                    return Err(Error::Config(format!(
                        "SDR precoding refuses B={} (limit {MAX_SPHERE_ANTENNAS})",
                        self.b
                    )));
                }
                _ => {}
            }
        }
        for &e in &self.csi_eps {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Config(format!("CSI error {e} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Work-unit size used by the BER waves.
    pub(crate) fn effective_block_size(&self) -> u64 {
        if self.block_size > 0 {
            return self.block_size;
        }
        let per_channel = self.trials_per_point / self.channels_per_point.max(1) as u64;
        (per_channel / 8).clamp(1, 2048)
    }
}

/// Runs `f` on the configured thread pool (or the global one).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        let mut cfg = SimConfig::new(8, 2);
        cfg.precoders = vec![PrecoderSel::Squid];
        assert!(cfg.validate().is_ok());

        cfg.dac = DacConfig::Levels(4);
        assert!(cfg.validate().is_err(), "nonlinear needs 1-bit");

        cfg.dac = DacConfig::Infinite;
        cfg.precoders = vec![PrecoderSel::Wf];
        assert!(cfg.validate().is_ok());

        let mut cfg = SimConfig::new(13, 2);
        cfg.precoders = vec![PrecoderSel::Exhaustive];
        assert!(cfg.validate().is_err(), "exhaustive guard rail");

        let mut cfg = SimConfig::new(17, 2);
        cfg.precoders = vec![PrecoderSel::Sp];
        assert!(cfg.validate().is_err(), "sphere guard rail");

        let mut cfg = SimConfig::new(4, 8);
        cfg.precoders = vec![PrecoderSel::Zf];
        assert!(cfg.validate().is_err(), "B < U");

        let mut cfg = SimConfig::new(8, 2);
        cfg.csi_eps = vec![0.0, 1.2];
        assert!(cfg.validate().is_err(), "eps out of range");
    }

    #[test]
    fn parsing() {
        assert_eq!(DacConfig::parse("inf").unwrap(), DacConfig::Infinite);
        assert_eq!(DacConfig::parse("8").unwrap(), DacConfig::Levels(8));
        assert!(DacConfig::parse("1").is_err());
        assert!(DacConfig::parse("x").is_err());
        assert_eq!(PrecoderSel::parse("SQUID").unwrap(), PrecoderSel::Squid);
        assert!(PrecoderSel::parse("wfq").is_err());
        assert_eq!(MetricKind::parse("rate_lb").unwrap(), MetricKind::RateLb);
    }
}

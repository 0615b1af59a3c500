//! Uncoded-BER sweeps with QPSK signaling and symbol-wise nearest-neighbor
//! decoding.
//!
//! Work is organized in waves: one fixed-size trial block per channel
//! realization, computed in parallel and reduced in channel order. After
//! each wave the accumulated bit-error count is checked against the error
//! target, so points stop early once the estimate is stable while staying
//! bit-reproducible for any thread count. Symbol and noise substreams are
//! addressed only by (channel, wave), which gives common random numbers
//! across precoders and SNR points.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    apply_channel, corrupt_csi, sample_channel, sample_symbols, ChannelRealization, Constellation,
    NoiseModel,
};
use crate::error::{Error, Result};
use crate::linear::{linear_quantized_precode, LinearPrecoder};
use crate::nonlinear::sphere::SphereEngine;
use crate::nonlinear::squid::SquidEngine;
use crate::nonlinear::{exhaustive_qp, sdr_precode_warm, SdrExtraction};
use crate::sdp::SdpWarmState;
use crate::quantizer::DacModel;
use crate::rng::{substream, StreamPurpose};
use crate::sim::{with_threads, MetricKind, PrecoderSel, ResultRow, SimConfig};
use crate::CVec;

/// Per-channel precoding state for one operating point.
enum Engine {
    Linear { lp: LinearPrecoder, dac: DacModel },
    Exhaustive { ch: ChannelRealization, n0: f64, p: f64 },
    Sdr { ch: ChannelRealization, n0: f64, p: f64, extraction: SdrExtraction },
    Squid(SquidEngine),
    Sphere(SphereEngine),
}

struct ChannelCtx {
    /// Channel the signal actually propagates through.
    ch_true: ChannelRealization,
    engine: Engine,
}

impl Engine {
    /// Builds the precoder state from the channel knowledge available to
    /// the transmitter (which differs from the true channel in CSI sweeps).
    fn build(
        sel: PrecoderSel,
        known: &ChannelRealization,
        n0: f64,
        p: f64,
        dac: &DacModel,
        cfg: &SimConfig,
    ) -> Result<Engine> {
        Ok(match sel {
            PrecoderSel::Wf => {
                Engine::Linear { lp: crate::linear::wf_precoder(known, n0, p)?, dac: dac.clone() }
            }
            PrecoderSel::Zf => {
                Engine::Linear { lp: crate::linear::zf_precoder(known, p)?, dac: dac.clone() }
            }
            PrecoderSel::Mrt => {
                Engine::Linear { lp: crate::linear::mrt_precoder(known, p)?, dac: dac.clone() }
            }
            PrecoderSel::Exhaustive => Engine::Exhaustive { ch: known.clone(), n0, p },
            PrecoderSel::Sdr1 => {
                Engine::Sdr { ch: known.clone(), n0, p, extraction: SdrExtraction::Rank1 }
            }
            PrecoderSel::Sdrr => Engine::Sdr {
                ch: known.clone(),
                n0,
                p,
                extraction: SdrExtraction::Randomized(cfg.sdr_randomizations),
            },
            PrecoderSel::Squid => Engine::Squid(SquidEngine::new(known, n0, p)?),
            PrecoderSel::Sp => Engine::Sphere(SphereEngine::new(known, n0, p)?),
        })
    }

    fn precode(
        &self,
        s: &CVec,
        rng: &mut ChaCha8Rng,
        cfg: &SimConfig,
        warm: &mut Option<SdpWarmState>,
    ) -> Result<CVec> {
        Ok(match self {
            Engine::Linear { lp, dac } => linear_quantized_precode(lp, s, dac)?,
            Engine::Exhaustive { ch, n0, p } => exhaustive_qp(ch, s, *n0, *p)?.x,
            Engine::Sdr { ch, n0, p, extraction } => {
                sdr_precode_warm(ch, s, *n0, *p, *extraction, &cfg.sdp, rng, warm)?.x
            }
            Engine::Squid(eng) => eng.precode(s, &cfg.squid)?.x,
            Engine::Sphere(eng) => eng.precode(s, &cfg.sphere)?.x,
        })
    }
}

/// QPSK quadrant decoding: two bits per symbol, one per sign.
fn count_bit_errors(s: &CVec, y: &CVec) -> u64 {
    let mut errors = 0;
    for i in 0..s.len() {
        if (s[i].re < 0.0) != (y[i].re < 0.0) {
            errors += 1;
        }
        if (s[i].im < 0.0) != (y[i].im < 0.0) {
            errors += 1;
        }
    }
    errors
}

fn run_block(
    cfg: &SimConfig,
    ctx: &ChannelCtx,
    noise: &NoiseModel,
    channel_idx: u64,
    wave: u64,
    block: u64,
) -> Result<(u64, u64)> {
    let mut rng_sym = substream(cfg.seed, StreamPurpose::Trials, channel_idx, wave, 0);
    let mut rng_method = substream(cfg.seed, StreamPurpose::Method, channel_idx, wave, 0);
    let mut errors = 0u64;
    // SDP iterates carry over within a block and reset at its boundary
    let mut warm = None;
    for _ in 0..block {
        let s = sample_symbols(Constellation::Qpsk, cfg.u, &mut rng_sym)?;
        let x = ctx.engine.precode(&s, &mut rng_method, cfg, &mut warm)?;
        let y = apply_channel(&ctx.ch_true, &x, noise, &mut rng_sym)?;
        errors += count_bit_errors(&s, &y);
    }
    Ok((errors, block * 2 * cfg.u as u64))
}

fn simulate_ber_point(
    cfg: &SimConfig,
    sel: PrecoderSel,
    snr_db: f64,
    eps: Option<(usize, f64)>,
    dac: &DacModel,
) -> Result<ResultRow> {
    let noise = NoiseModel::from_snr_db(snr_db);
    let (n0, p) = (noise.n0(), noise.power());

    let ctxs: Vec<ChannelCtx> = (0..cfg.channels_per_point)
        .into_par_iter()
        .map(|c| -> Result<ChannelCtx> {
            let mut rng = substream(cfg.seed, StreamPurpose::Channel, c as u64, 0, 0);
            let ch_true = sample_channel(cfg.u, cfg.b, &mut rng)?;
            let known = match eps {
                None => ch_true.clone(),
                Some((ei, e)) => {
                    let mut rng_csi =
                        substream(cfg.seed, StreamPurpose::Csi, c as u64, ei as u64, 0);
                    corrupt_csi(&ch_true, e, &mut rng_csi)?
                }
            };
            let engine = Engine::build(sel, &known, n0, p, dac, cfg)?;
            Ok(ChannelCtx { ch_true, engine })
        })
        .collect::<Result<Vec<_>>>()?;

    let block = cfg.effective_block_size();
    let cap = cfg.trials_per_point;
    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut trials = 0u64;
    let mut wave = 0u64;
    while trials < cap && errors < cfg.error_target {
        let partials: Vec<Result<(u64, u64)>> = ctxs
            .par_iter()
            .enumerate()
            .map(|(c, ctx)| run_block(cfg, ctx, &noise, c as u64, wave, block))
            .collect();
        for partial in partials {
            let (e, b) = partial?;
            errors += e;
            bits += b;
        }
        trials += block * ctxs.len() as u64;
        wave += 1;
    }

    let ber = if bits > 0 { errors as f64 / bits as f64 } else { 0.0 };
    let stderr = if bits > 0 { (ber * (1.0 - ber) / bits as f64).sqrt() } else { 0.0 };
    Ok(ResultRow {
        precoder: sel.tag().to_string(),
        b: cfg.b,
        u: cfg.u,
        levels: cfg.dac.levels(),
        snr_db,
        eps: eps.map(|(_, e)| e),
        metric: MetricKind::Ber,
        value: ber,
        stderr,
        trials,
    })
}

fn dac_for(cfg: &SimConfig) -> Result<DacModel> {
    match cfg.dac.levels() {
        None => Ok(DacModel::Infinite),
        Some(l) => DacModel::for_levels(l, cfg.b, 1.0),
    }
}

/// Sweeps uncoded BER over the SNR grid for every configured precoder.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.constellation != Constellation::Qpsk {
        return Err(Error::Config("BER sweeps require the QPSK constellation".into()));
    }
    let dac = dac_for(cfg)?;
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for &sel in &cfg.precoders {
            for &snr in &cfg.snr_db {
                rows.push(simulate_ber_point(cfg, sel, snr, None, &dac)?);
            }
        }
        Ok(rows)
    })
}

/// Sweeps uncoded BER over the CSI-error grid: precoders see the corrupted
/// channel, the signal propagates through the true one.
pub fn run_csi_sweep(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.constellation != Constellation::Qpsk {
        return Err(Error::Config("BER sweeps require the QPSK constellation".into()));
    }
    if cfg.csi_eps.is_empty() {
        return Err(Error::Config("CSI sweep needs a nonempty eps grid".into()));
    }
    let dac = dac_for(cfg)?;
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for &sel in &cfg.precoders {
            for &snr in &cfg.snr_db {
                for (ei, &e) in cfg.csi_eps.iter().enumerate() {
                    rows.push(simulate_ber_point(cfg, sel, snr, Some((ei, e)), &dac)?);
                }
            }
        }
        Ok(rows)
    })
}

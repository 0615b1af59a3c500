//! Achievable-rate estimation with Gaussian codebooks.
//!
//! Per channel realization, many symbol/noise draws are simulated and the
//! per-user mutual information `I(s_u; y_u)` is estimated from 2-D
//! histograms: the receive samples are binned on a rectangular grid
//! spanning ±5 sample standard deviations, conditioned on a coarser grid
//! over the transmitted symbol. The plug-in estimate is debiased with the
//! first-order (Miller-Madow) occupancy correction, without which the
//! conditional table is far too optimistic at realistic draw counts.
//! Receiver-side scaling drops out: mutual information is invariant under
//! the per-user factor, so the raw channel output is binned directly.

use rayon::prelude::*;

use crate::bussgang::{asymptotic_params, asymptotic_sindr, rate_lower_bound_one_bit};
use crate::channel::{sample_channel, sample_cn01, Constellation, NoiseModel};
use crate::error::{Error, Result};
use crate::linear::{linear_quantized_precode, LinearPrecoder};
use crate::quantizer::DacModel;
use crate::rng::{substream, StreamPurpose};
use crate::sim::{with_threads, DacConfig, MetricKind, PrecoderSel, ResultRow, SimConfig};
use crate::{CVec, Cx};

/// Histogram geometry for the mutual-information estimator.
#[derive(Debug, Clone, Copy)]
pub struct MiParams {
    /// Output grid resolution per complex dimension.
    pub out_bins: usize,
    /// Output grid half-width in sample standard deviations.
    pub out_span: f64,
    /// Conditioning grid resolution over the transmitted symbol.
    pub cond_bins: usize,
    /// Conditioning grid half-width in sample standard deviations.
    pub cond_span: f64,
}

impl Default for MiParams {
    fn default() -> Self {
        Self { out_bins: 100, out_span: 5.0, cond_bins: 30, cond_span: 3.5 }
    }
}

struct Axis {
    lo: f64,
    inv_width: f64,
    bins: usize,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64> + Clone, bins: usize, span: f64) -> Axis {
        let mut n = 0usize;
        let mut mean = 0.0;
        for v in values.clone() {
            mean += v;
            n += 1;
        }
        mean /= n.max(1) as f64;
        let mut var = 0.0;
        for v in values {
            var += (v - mean) * (v - mean);
        }
        let std = (var / n.max(1) as f64).sqrt().max(1e-300);
        let lo = mean - span * std;
        Axis { lo, inv_width: bins as f64 / (2.0 * span * std), bins }
    }

    #[inline]
    fn index(&self, v: f64) -> usize {
        let raw = (v - self.lo) * self.inv_width;
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.bins - 1)
        }
    }
}

/// Reusable scratch space for repeated mutual-information estimates.
pub struct MiEstimator {
    params: MiParams,
    joint: Vec<u32>,
    touched: Vec<u32>,
    cond_tot: Vec<u64>,
    out_tot: Vec<u64>,
}

impl MiEstimator {
    pub fn new(params: MiParams) -> Self {
        let out_cells = params.out_bins * params.out_bins;
        let cond_cells = params.cond_bins * params.cond_bins;
        Self {
            params,
            joint: vec![0; out_cells * cond_cells],
            touched: Vec::new(),
            cond_tot: vec![0; cond_cells],
            out_tot: vec![0; out_cells],
        }
    }

    /// Estimates `I(s; shat)` in bits from paired samples.
    pub fn estimate(&mut self, s: &[Cx], shat: &[Cx]) -> f64 {
        assert_eq!(s.len(), shat.len());
        let n = s.len();
        assert!(n >= 2, "need at least two samples");
        let p = self.params;
        let out_cells = p.out_bins * p.out_bins;

        // clear only the cells the previous call populated
        for &idx in &self.touched {
            self.joint[idx as usize] = 0;
        }
        self.touched.clear();
        self.cond_tot.fill(0);
        self.out_tot.fill(0);

        let s_re = Axis::fit(s.iter().map(|v| v.re), p.cond_bins, p.cond_span);
        let s_im = Axis::fit(s.iter().map(|v| v.im), p.cond_bins, p.cond_span);
        let y_re = Axis::fit(shat.iter().map(|v| v.re), p.out_bins, p.out_span);
        let y_im = Axis::fit(shat.iter().map(|v| v.im), p.out_bins, p.out_span);

        for k in 0..n {
            let a = s_re.index(s[k].re) * p.cond_bins + s_im.index(s[k].im);
            let c = y_re.index(shat[k].re) * p.out_bins + y_im.index(shat[k].im);
            let idx = a * out_cells + c;
            if self.joint[idx] == 0 {
                self.touched.push(idx as u32);
            }
            self.joint[idx] += 1;
            self.cond_tot[a] += 1;
            self.out_tot[c] += 1;
        }

        let nf = n as f64;
        let mut acc = 0.0;
        for &idx in &self.touched {
            let n_ac = f64::from(self.joint[idx as usize]);
            let a = idx as usize / out_cells;
            let c = idx as usize % out_cells;
            // empty-cell floor guards the densities in the log
            let n_a = (self.cond_tot[a] as f64).max(1.0);
            let m_c = (self.out_tot[c] as f64).max(1.0);
            acc += n_ac * (n_ac * nf / (n_a * m_c)).log2();
        }
        let plug_in = acc / nf;

        // first-order occupancy (Miller-Madow) bias correction
        let k_joint = self.touched.len() as f64;
        let k_cond = self.cond_tot.iter().filter(|&&v| v > 0).count() as f64;
        let k_out = self.out_tot.iter().filter(|&&v| v > 0).count() as f64;
        let correction = (k_joint - k_cond - k_out + 1.0) * std::f64::consts::LOG2_E / (2.0 * nf);
        (plug_in - correction).max(0.0)
    }
}

/// One-shot estimate of `I(s; shat)` in bits.
pub fn histogram_mutual_information(s: &[Cx], shat: &[Cx], params: MiParams) -> f64 {
    MiEstimator::new(params).estimate(s, shat)
}

fn build_linear(
    sel: PrecoderSel,
    ch: &crate::channel::ChannelRealization,
    n0: f64,
    p: f64,
) -> Result<LinearPrecoder> {
    match sel {
        PrecoderSel::Wf => crate::linear::wf_precoder(ch, n0, p),
        PrecoderSel::Zf => crate::linear::zf_precoder(ch, p),
        PrecoderSel::Mrt => crate::linear::mrt_precoder(ch, p),
        other => Err(Error::Config(format!(
            "rate sweeps support the linear precoders only, got '{}'",
            other.tag()
        ))),
    }
}

/// Sweeps the achievable sum rate over SNR: histogram-MI estimate plus the
/// large-system approximation, and for 1-bit DACs the closed-form lower
/// bound.
pub fn run_rate_sweep(cfg: &SimConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.constellation != Constellation::GaussianCodebook {
        return Err(Error::Config("rate sweeps require the Gaussian codebook".into()));
    }
    let p = 1.0;
    let dac = match cfg.dac {
        DacConfig::Infinite => DacModel::Infinite,
        DacConfig::Levels(l) => DacModel::for_levels(l, cfg.b, p)?,
    };
    let draws = cfg.rate_draws_per_channel as usize;

    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        let mut estimator = MiEstimator::new(MiParams::default());
        let mut s_buf: Vec<Cx> = Vec::new();
        let mut y_buf: Vec<Cx> = Vec::new();
        let mut s_user: Vec<Cx> = vec![Cx::new(0.0, 0.0); draws];
        let mut y_user: Vec<Cx> = vec![Cx::new(0.0, 0.0); draws];

        for &sel in &cfg.precoders {
            for &snr in &cfg.snr_db {
                let noise = NoiseModel::from_snr_db(snr);
                let n0 = noise.n0();
                let mut mi_sums = Vec::with_capacity(cfg.channels_per_point);
                let mut lb_sums = Vec::with_capacity(cfg.channels_per_point);

                for c in 0..cfg.channels_per_point {
                    let mut rng = substream(cfg.seed, StreamPurpose::Channel, c as u64, 0, 0);
                    let ch = sample_channel(cfg.u, cfg.b, &mut rng)?;
                    let lp = build_linear(sel, &ch, n0, p)?;

                    s_buf.resize(draws * cfg.u, Cx::new(0.0, 0.0));
                    y_buf.resize(draws * cfg.u, Cx::new(0.0, 0.0));
                    let batch = 2048usize;
                    s_buf
                        .par_chunks_mut(batch * cfg.u)
                        .zip(y_buf.par_chunks_mut(batch * cfg.u))
                        .enumerate()
                        .try_for_each(|(bi, (s_chunk, y_chunk))| -> Result<()> {
                            let mut rng =
                                substream(cfg.seed, StreamPurpose::Rate, c as u64, bi as u64, 0);
                            let rows_here = s_chunk.len() / cfg.u;
                            for k in 0..rows_here {
                                let s = CVec::from_fn(cfg.u, |_, _| sample_cn01(&mut rng));
                                let x = linear_quantized_precode(&lp, &s, &dac)?;
                                let y = crate::channel::apply_channel(
                                    &ch, &x, &noise, &mut rng,
                                )?;
                                for uu in 0..cfg.u {
                                    s_chunk[k * cfg.u + uu] = s[uu];
                                    y_chunk[k * cfg.u + uu] = y[uu];
                                }
                            }
                            Ok(())
                        })?;

                    let mut mi_sum = 0.0;
                    for uu in 0..cfg.u {
                        for k in 0..draws {
                            s_user[k] = s_buf[k * cfg.u + uu];
                            y_user[k] = y_buf[k * cfg.u + uu];
                        }
                        mi_sum += estimator.estimate(&s_user, &y_user);
                    }
                    mi_sums.push(mi_sum);

                    if cfg.dac == DacConfig::Levels(2) {
                        lb_sums.push(rate_lower_bound_one_bit(&ch, &lp, p, n0)?.sum());
                    }
                }

                let (mi_mean, mi_se) = mean_stderr(&mi_sums);
                rows.push(ResultRow {
                    precoder: sel.tag().to_string(),
                    b: cfg.b,
                    u: cfg.u,
                    levels: cfg.dac.levels(),
                    snr_db: snr,
                    eps: None,
                    metric: MetricKind::SumRate,
                    value: mi_mean,
                    stderr: mi_se,
                    trials: (cfg.channels_per_point as u64) * cfg.rate_draws_per_channel,
                });
                rows.push(ResultRow {
                    precoder: sel.tag().to_string(),
                    b: cfg.b,
                    u: cfg.u,
                    levels: cfg.dac.levels(),
                    snr_db: snr,
                    eps: None,
                    metric: MetricKind::PerUserRate,
                    value: mi_mean / cfg.u as f64,
                    stderr: mi_se / cfg.u as f64,
                    trials: (cfg.channels_per_point as u64) * cfg.rate_draws_per_channel,
                });
                if !lb_sums.is_empty() {
                    let (lb_mean, lb_se) = mean_stderr(&lb_sums);
                    rows.push(ResultRow {
                        precoder: sel.tag().to_string(),
                        b: cfg.b,
                        u: cfg.u,
                        levels: cfg.dac.levels(),
                        snr_db: snr,
                        eps: None,
                        metric: MetricKind::RateLb,
                        value: lb_mean,
                        stderr: lb_se,
                        trials: cfg.channels_per_point as u64,
                    });
                }

                let params = asymptotic_params(cfg.dac.levels(), cfg.b, p, noise.rho())?;
                let kind = sel.linear_kind().expect("linear selection checked above");
                let gamma_bar = asymptotic_sindr(kind, params.rho_bar, cfg.b, cfg.u)?;
                rows.push(ResultRow {
                    precoder: sel.tag().to_string(),
                    b: cfg.b,
                    u: cfg.u,
                    levels: cfg.dac.levels(),
                    snr_db: snr,
                    eps: None,
                    metric: MetricKind::AnalyticRate,
                    value: cfg.u as f64 * (1.0 + gamma_bar).log2(),
                    stderr: 0.0,
                    trials: 0,
                });
            }
        }
        Ok(rows)
    })
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

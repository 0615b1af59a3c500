//! Closed-form analysis of linear-quantized precoding.
//!
//! For Gaussian symbols the DAC output decomposes as `x = G P s + d` with a
//! diagonal gain matrix `G` and a distortion `d` uncorrelated with `s`. This
//! module computes `G` for uniform multi-bit DACs, the exact 1-bit output
//! covariance (arcsine law), the distortion covariance, the per-user SINDR
//! and rate lower bound, and the large-system SINDR approximations.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linear::{LinearPrecoder, PrecoderKind};
use crate::quantizer::{gaussian_power_scale, QuantizerSpec};
use crate::{CMat, Cx, RVec};

pub use crate::stats::std_normal_cdf;
use crate::stats::std_normal_tail;

/// Bussgang decomposition of one `(H, P)` pair under 1-bit DACs.
#[derive(Debug, Clone)]
pub struct BussgangModel {
    /// Diagonal of the gain matrix `G` (length `B`, strictly positive).
    pub gain: RVec,
    /// Output covariance `Cxx = E[x x^H]`.
    pub cxx: CMat,
    /// Distortion covariance `Cdd = Cxx - G P P^H G`.
    pub cdd: CMat,
    /// Per-user SINDR (length `U`).
    pub gamma: RVec,
}

/// Large-system parameters: average gain and effective SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams {
    /// Average Bussgang gain of the power-normalized DAC, in `(0, 1]`.
    pub g_bar: f64,
    /// Effective SNR after replacing distortion by Gaussian noise.
    pub rho_bar: f64,
}

fn row_powers(p_matrix: &CMat) -> Vec<f64> {
    (0..p_matrix.nrows())
        .map(|b| p_matrix.row(b).iter().map(|v| v.norm_sqr()).sum())
        .collect()
}

/// Diagonal Bussgang gain of a uniform DAC for input `z = P s`,
/// `s ~ CN(0, I)`:
/// `G_bb = (alpha delta / sqrt(pi sigma_b^2)) sum_i exp(-delta^2 (i - L/2)^2 / sigma_b^2)`
/// with `sigma_b^2 = [P P^H]_bb`.
pub fn bussgang_gain(p_matrix: &CMat, spec: &QuantizerSpec) -> Result<RVec> {
    let l = spec.levels() as f64;
    let delta = spec.delta();
    let coeff = spec.alpha() * delta / std::f64::consts::PI.sqrt();
    let powers = row_powers(p_matrix);
    let mut g = RVec::zeros(p_matrix.nrows());
    for (b, &s2) in powers.iter().enumerate() {
        if !(s2 > 0.0) {
            return Err(Error::DegenerateChannel(format!("precoder row {b} has zero power")));
        }
        let mut acc = 0.0;
        for i in 1..spec.levels() {
            let t = delta * (i as f64 - l / 2.0);
            acc += (-t * t / s2).exp();
        }
        g[b] = coeff / s2.sqrt() * acc;
    }
    Ok(g)
}

/// 1-bit special case: `G = sqrt(2P/(pi B)) diag(P P^H)^{-1/2}`.
pub fn bussgang_gain_one_bit(p_matrix: &CMat, p: f64) -> Result<RVec> {
    let b = p_matrix.nrows();
    let coeff = (2.0 * p / (std::f64::consts::PI * b as f64)).sqrt();
    let powers = row_powers(p_matrix);
    let mut g = RVec::zeros(b);
    for (i, &s2) in powers.iter().enumerate() {
        if !(s2 > 0.0) {
            return Err(Error::DegenerateChannel(format!("precoder row {i} has zero power")));
        }
        g[i] = coeff / s2.sqrt();
    }
    Ok(g)
}

fn clamped_asin(x: f64) -> f64 {
    // unit correlations land epsilon outside [-1, 1] after rounding
    x.clamp(-1.0, 1.0).asin()
}

/// Arcsine-law covariance of the 1-bit DAC output for `z = P s`,
/// `s ~ CN(0, I)`:
/// `Cxx = (2P/(pi B)) (asin(K_re) + j asin(K_im))` where `K` is the
/// normalized correlation `diag^{-1/2}(PP^H) PP^H diag^{-1/2}(PP^H)`.
/// The prefactor makes every diagonal entry exactly `P/B`.
pub fn one_bit_output_covariance(p_matrix: &CMat, p: f64) -> Result<CMat> {
    let b = p_matrix.nrows();
    let czz = p_matrix * p_matrix.adjoint();
    let powers: Vec<f64> = (0..b).map(|i| czz[(i, i)].re).collect();
    if powers.iter().any(|&s2| !(s2 > 0.0)) {
        return Err(Error::DegenerateChannel("zero-power precoder row".into()));
    }
    let kappa = 2.0 * p / (std::f64::consts::PI * b as f64);
    let mut cxx = CMat::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            let norm = (powers[i] * powers[j]).sqrt();
            let rho = czz[(i, j)] / Cx::new(norm, 0.0);
            cxx[(i, j)] = Cx::new(
                kappa * clamped_asin(rho.re),
                kappa * clamped_asin(rho.im),
            );
        }
    }
    Ok(cxx)
}

/// Distortion covariance `Cdd = Cxx - G P P^H G` (Hermitian, PSD up to
/// rounding).
pub fn distortion_covariance(cxx: &CMat, gain: &RVec, p_matrix: &CMat) -> CMat {
    let czz = p_matrix * p_matrix.adjoint();
    let b = p_matrix.nrows();
    let mut cdd = cxx.clone();
    for i in 0..b {
        for j in 0..b {
            cdd[(i, j)] -= czz[(i, j)] * Cx::new(gain[i] * gain[j], 0.0);
        }
    }
    // re-symmetrize against float drift
    let adj = cdd.adjoint();
    (cdd + adj) * Cx::new(0.5, 0.0)
}

/// Per-user SINDR
/// `gamma_u = |h_u^T G p_u|^2 / (sum_{v != u} |h_u^T G p_v|^2 + h_u^T Cdd h_u^* + N0)`.
pub fn sindr(
    ch: &ChannelRealization,
    p_matrix: &CMat,
    gain: &RVec,
    cdd: &CMat,
    n0: f64,
) -> RVec {
    let u = ch.users();
    let mut gp = p_matrix.clone();
    for b in 0..gp.nrows() {
        let g = Cx::new(gain[b], 0.0);
        for j in 0..gp.ncols() {
            gp[(b, j)] *= g;
        }
    }
    let s = ch.h() * gp; // U x U: signal and interference couplings
    let hc = ch.h() * cdd; // U x B
    let mut gamma = RVec::zeros(u);
    for i in 0..u {
        let signal = s[(i, i)].norm_sqr();
        let mut interf = 0.0;
        for j in 0..u {
            if j != i {
                interf += s[(i, j)].norm_sqr();
            }
        }
        // h_i^T Cdd h_i^* is real for Hermitian Cdd
        let mut dist = 0.0;
        for b in 0..ch.antennas() {
            dist += (hc[(i, b)] * ch.h()[(i, b)].conj()).re;
        }
        gamma[i] = signal / (interf + dist.max(0.0) + n0);
    }
    gamma
}

/// Assembles the full 1-bit Bussgang model for one channel and precoder.
pub fn one_bit_model(
    ch: &ChannelRealization,
    lp: &LinearPrecoder,
    p: f64,
    n0: f64,
) -> Result<BussgangModel> {
    let gain = bussgang_gain_one_bit(lp.matrix(), p)?;
    let cxx = one_bit_output_covariance(lp.matrix(), p)?;
    let cdd = distortion_covariance(&cxx, &gain, lp.matrix());
    let gamma = sindr(ch, lp.matrix(), &gain, &cdd, n0);
    Ok(BussgangModel { gain, cxx, cdd, gamma })
}

/// Per-user achievable-rate lower bound for 1-bit DACs,
/// `R_u = log2(1 + gamma_u)` at the current channel realization.
pub fn rate_lower_bound_one_bit(
    ch: &ChannelRealization,
    lp: &LinearPrecoder,
    p: f64,
    n0: f64,
) -> Result<RVec> {
    let model = one_bit_model(ch, lp, p, n0)?;
    Ok(model.gamma.map(|g| (1.0 + g).log2()))
}

/// Average Bussgang gain of the power-normalized `L`-level DAC driven by a
/// `CN(0, P/B)` input:
/// `G = alpha delta sqrt(B/(pi P)) sum_i exp(-(B delta^2 / P)(i - L/2)^2)`.
pub fn asymptotic_gain(levels: usize, delta: f64, b: usize, p: f64) -> Result<f64> {
    let alpha = gaussian_power_scale(levels, delta, b, p)?;
    let l = levels as f64;
    let scale = b as f64 * delta * delta / p;
    let mut acc = 0.0;
    for i in 1..levels {
        let t = i as f64 - l / 2.0;
        acc += (-scale * t * t).exp();
    }
    Ok(alpha * delta * (b as f64 / (std::f64::consts::PI * p)).sqrt() * acc)
}

/// Effective SNR after treating quantization distortion as Gaussian noise:
/// `rho_bar = G^2 rho / ((1 - G^2) rho + 1)`.
pub fn effective_snr(g_bar: f64, rho: f64) -> f64 {
    let g2 = g_bar * g_bar;
    g2 * rho / ((1.0 - g2) * rho + 1.0)
}

/// Large-system parameters for an `L`-level DAC (`None` = infinite
/// resolution) at SNR `rho`, with the step size optimized for the
/// per-antenna Gaussian input.
pub fn asymptotic_params(levels: Option<usize>, b: usize, p: f64, rho: f64) -> Result<AsymptoticParams> {
    let g_bar = match levels {
        None => 1.0,
        Some(l) => {
            let delta = crate::quantizer::optimize_step_size(l, p / (2.0 * b as f64))?;
            asymptotic_gain(l, delta, b, p)?
        }
    };
    Ok(AsymptoticParams { g_bar, rho_bar: effective_snr(g_bar, rho) })
}

/// Large-`B`, large-`U` SINDR approximation for the three linear precoders.
pub fn asymptotic_sindr(kind: PrecoderKind, rho_bar: f64, b: usize, u: usize) -> Result<f64> {
    if u == 0 || b == 0 {
        return Err(Error::InvalidParameter("need B, U >= 1".into()));
    }
    let beta = b as f64 / u as f64;
    match kind {
        PrecoderKind::Wf => {
            if b <= u {
                return Err(Error::InvalidParameter("WF approximation needs B > U".into()));
            }
            let t = rho_bar * (beta - 1.0);
            Ok(0.5 * t - 0.5
                + 0.5 * (t * t + 2.0 * rho_bar * (beta + 1.0) + 1.0).sqrt())
        }
        PrecoderKind::Zf => {
            if b <= u {
                return Err(Error::InvalidParameter("ZF approximation needs B > U".into()));
            }
            Ok(rho_bar * (beta - 1.0))
        }
        PrecoderKind::Mrt => Ok(rho_bar * b as f64 / (rho_bar * (u as f64 - 1.0) + u as f64)),
    }
}

/// Uncoded QPSK BER approximation `1 - Φ(sqrt(gamma))`.
pub fn ber_approximation(gamma_bar: f64) -> f64 {
    std_normal_tail(gamma_bar.max(0.0).sqrt())
}

//! Downlink channel model: i.i.d. Rayleigh fading, symbol and noise
//! sampling, and the mixing model for imperfect CSI.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{CMat, CVec, Cx};

/// One realization of the `U x B` downlink channel.
///
/// Rows are users, columns are base-station antennas. Entries are modeled
/// as i.i.d. circularly-symmetric complex Gaussian with unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: CMat,
}

impl ChannelRealization {
    /// Wraps an explicit channel matrix. Requires `U >= 1` and `B >= U`.
    pub fn new(h: CMat) -> Result<Self> {
        let (u, b) = h.shape();
        if u < 1 || b < u {
            return Err(Error::InvalidDimension(format!(
                "channel must satisfy U >= 1 and B >= U, got U={u}, B={b}"
            )));
        }
        Ok(Self { h })
    }

    /// The channel matrix `H`.
    pub fn h(&self) -> &CMat {
        &self.h
    }

    /// Number of users `U` (rows).
    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    /// Number of BS antennas `B` (columns).
    pub fn antennas(&self) -> usize {
        self.h.ncols()
    }

    /// Noiseless channel output `Hx`.
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.antennas() {
            return Err(Error::InvalidDimension(format!(
                "precoded vector has length {}, expected B={}",
                x.len(),
                self.antennas()
            )));
        }
        Ok(&self.h * x)
    }
}

/// Noise level and transmit power budget; `rho = P/N0` is the SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    n0: f64,
    p: f64,
}

impl NoiseModel {
    pub fn new(n0: f64, p: f64) -> Result<Self> {
        if !(n0 > 0.0) || !(p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance and power must be positive, got N0={n0}, P={p}"
            )));
        }
        Ok(Self { n0, p })
    }

    /// Convenience constructor with `P = 1` and `N0 = 10^(-snr_db/10)`.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self { n0: 10f64.powf(-snr_db / 10.0), p: 1.0 }
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    /// SNR `rho = P/N0`.
    pub fn rho(&self) -> f64 {
        self.p / self.n0
    }
}

/// Transmit signaling alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// Unit-energy QPSK, points `(±1 ± j)/√2`.
    Qpsk,
    /// i.i.d. `CN(0,1)` codebook symbols, used for rate estimation.
    GaussianCodebook,
}

impl Constellation {
    /// The four QPSK points, indexed by `(sign of Re, sign of Im)` bits.
    pub fn qpsk_points() -> [Cx; 4] {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        [
            Cx::new(a, a),
            Cx::new(a, -a),
            Cx::new(-a, a),
            Cx::new(-a, -a),
        ]
    }
}

/// One draw of a circularly-symmetric complex Gaussian `CN(0,1)`:
/// two independent real `N(0, 1/2)` components.
pub fn sample_cn01<R: Rng + ?Sized>(rng: &mut R) -> Cx {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws a `U x B` channel with i.i.d. `CN(0,1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(u: usize, b: usize, rng: &mut R) -> Result<ChannelRealization> {
    if u == 0 || b == 0 {
        return Err(Error::InvalidDimension(format!(
            "channel dimensions must be nonzero, got U={u}, B={b}"
        )));
    }
    // Column-major fill order is part of the determinism contract.
    let h = CMat::from_fn(u, b, |_, _| sample_cn01(rng));
    ChannelRealization::new(h)
}

/// Applies the channel and adds i.i.d. `CN(0, N0)` noise: `y = Hx + n`.
pub fn apply_channel<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    x: &CVec,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<CVec> {
    let mut y = ch.apply(x)?;
    let sigma = (noise.n0() / 2.0).sqrt();
    for v in y.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * sigma, im * sigma);
    }
    Ok(y)
}

/// Mixes the channel with an independent Gaussian matrix:
/// `Hhat = sqrt(1-eps) H + sqrt(eps) Z`, preserving unit entry variance.
///
/// `eps = 0` returns the channel unchanged (and consumes no randomness);
/// `eps = 1` is statistically independent of `H`.
pub fn corrupt_csi<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    eps: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "CSI error must lie in [0, 1], got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(ch.clone());
    }
    let a = (1.0 - eps).sqrt();
    let z = (eps).sqrt();
    let h = CMat::from_fn(ch.users(), ch.antennas(), |r, c| {
        ch.h()[(r, c)] * a + sample_cn01(rng) * z
    });
    ChannelRealization::new(h)
}

/// Draws a length-`U` symbol vector: uniform QPSK points or `CN(0,1)`.
pub fn sample_symbols<R: Rng + ?Sized>(
    c: Constellation,
    u: usize,
    rng: &mut R,
) -> Result<CVec> {
    if u == 0 {
        return Err(Error::InvalidDimension("symbol vector length must be nonzero".into()));
    }
    Ok(match c {
        Constellation::Qpsk => {
            let pts = Constellation::qpsk_points();
            CVec::from_fn(u, |_, _| pts[rng.gen_range(0..4)])
        }
        Constellation::GaussianCodebook => CVec::from_fn(u, |_, _| sample_cn01(rng)),
    })
}

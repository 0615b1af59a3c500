//! Uniform symmetric DAC model.
//!
//! A DAC with `L` levels per real dimension maps each real component into
//! the label set `l_i = alpha * delta * (i - (L-1)/2)` using the thresholds
//! `tau_i = delta * (i - L/2)`; cells are half-open on the right and the
//! end cells extend to infinity. The step size is chosen to minimize the
//! mean-square distortion for a Gaussian input, and the output scale
//! `alpha` restores the transmit power budget.

use num_complex::Complex64;


use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, std_normal_pdf};
use crate::CVec;

/// A fully-specified uniform quantizer for one real dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    levels: usize,
    delta: f64,
    alpha: f64,
    labels: Vec<f64>,
    thresholds: Vec<f64>,
}

impl QuantizerSpec {
    /// Number of levels `L` per real dimension.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of quantization bits `log2 L` (non-integer for odd `L`).
    pub fn bits(&self) -> f64 {
        (self.levels as f64).log2()
    }

    /// Step size `delta`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Output scale `alpha`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The `L` output labels, sorted ascending.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// The `L - 1` finite thresholds, sorted ascending.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Maps one real component to its label. Cells are `[tau_k, tau_{k+1})`.
    #[inline]
    pub fn quantize_real(&self, v: f64) -> f64 {
        let k = self.thresholds.partition_point(|&t| t <= v);
        self.labels[k]
    }
}

/// Builds the label and threshold sets for an `L`-level uniform quantizer.
pub fn make_uniform_quantizer(levels: usize, delta: f64, alpha: f64) -> Result<QuantizerSpec> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "quantizer needs at least two levels, got {levels}"
        )));
    }
    if !(delta > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size and scale must be positive, got delta={delta}, alpha={alpha}"
        )));
    }
    let l = levels as f64;
    let labels: Vec<f64> = (0..levels)
        .map(|i| alpha * delta * (i as f64 - (l - 1.0) / 2.0))
        .collect();
    let thresholds: Vec<f64> = (1..levels).map(|i| delta * (i as f64 - l / 2.0)).collect();
    Ok(QuantizerSpec { levels, delta, alpha, labels, thresholds })
}

/// Mean-square distortion `E[(Q1(w) - w)^2]` of the unit-scale (`alpha = 1`)
/// quantizer for `w ~ N(0, variance)`, in closed form through `Φ` and `φ`.
pub fn gaussian_mse(levels: usize, delta: f64, variance: f64) -> f64 {
    let sigma = variance.sqrt();
    let l = levels as f64;
    let mut mse = 0.0;
    for i in 0..levels {
        let label = delta * (i as f64 - (l - 1.0) / 2.0);
        // standardized cell boundaries; end cells are infinite
        let lo = if i == 0 { f64::NEG_INFINITY } else { delta * (i as f64 - l / 2.0) / sigma };
        let hi = if i == levels - 1 { f64::INFINITY } else { delta * ((i + 1) as f64 - l / 2.0) / sigma };
        let (cdf_lo, pdf_lo, xpdf_lo) = if lo.is_finite() {
            (std_normal_cdf(lo), std_normal_pdf(lo), lo * std_normal_pdf(lo))
        } else {
            (0.0, 0.0, 0.0)
        };
        let (cdf_hi, pdf_hi, xpdf_hi) = if hi.is_finite() {
            (std_normal_cdf(hi), std_normal_pdf(hi), hi * std_normal_pdf(hi))
        } else {
            (1.0, 0.0, 0.0)
        };
        let p = cdf_hi - cdf_lo;
        let m1 = sigma * (pdf_lo - pdf_hi);
        let m2 = variance * (p + xpdf_lo - xpdf_hi);
        mse += m2 - 2.0 * label * m1 + label * label * p;
    }
    mse
}

/// Distortion-minimizing step size for a real `N(0, input_variance)` input,
/// found by golden-section search on [`gaussian_mse`] over `(0, 8 sigma]`.
pub fn optimize_step_size(levels: usize, input_variance: f64) -> Result<f64> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "quantizer needs at least two levels, got {levels}"
        )));
    }
    if !(input_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "input variance must be positive, got {input_variance}"
        )));
    }
    let sigma = input_variance.sqrt();
    let f = |d: f64| gaussian_mse(levels, d, input_variance);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1e-12 * sigma, 8.0 * sigma);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-6 * sigma {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Output scale `alpha` such that a per-antenna `CN(0, P/B)` input produces
/// `B * E|Q(z)|^2 = P` exactly, via the closed-form second moment of the
/// unit-scale quantizer output.
pub fn gaussian_power_scale(levels: usize, delta: f64, b: usize, p: f64) -> Result<f64> {
    if levels < 2 || b == 0 {
        return Err(Error::InvalidParameter(format!(
            "need L >= 2 and B >= 1, got L={levels}, B={b}"
        )));
    }
    if !(delta > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size and power must be positive, got delta={delta}, P={p}"
        )));
    }
    // per-real-dimension input variance
    let var = p / (2.0 * b as f64);
    let sigma = var.sqrt();
    let l = levels as f64;
    let mut second_moment = 0.0;
    for i in 0..levels {
        let label = delta * (i as f64 - (l - 1.0) / 2.0);
        let lo = if i == 0 { 0.0 } else { std_normal_cdf(delta * (i as f64 - l / 2.0) / sigma) };
        let hi = if i == levels - 1 {
            1.0
        } else {
            std_normal_cdf(delta * ((i + 1) as f64 - l / 2.0) / sigma)
        };
        second_moment += label * label * (hi - lo);
    }
    if second_moment <= 0.0 {
        return Err(Error::InvalidParameter(
            "quantizer output power vanished; step size too small".into(),
        ));
    }
    Ok(sigma / second_moment.sqrt())
}

/// Applies the quantizer-mapping function entrywise to real and imaginary
/// parts. Rejects non-finite inputs.
pub fn quantize(spec: &QuantizerSpec, z: &CVec) -> Result<CVec> {
    for v in z.iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite quantizer input {v}")));
        }
    }
    Ok(CVec::from_fn(z.len(), |i, _| {
        Complex64::new(spec.quantize_real(z[i].re), spec.quantize_real(z[i].im))
    }))
}

/// 1-bit quantizer-mapping function:
/// `sqrt(P/(2B)) (sgn(Re z) + j sgn(Im z))` with `sgn(0) = +1`.
pub fn quantize_one_bit(z: &CVec, p: f64, b: usize) -> CVec {
    let a = (p / (2.0 * b as f64)).sqrt();
    CVec::from_fn(z.len(), |i, _| {
        Complex64::new(
            if z[i].re >= 0.0 { a } else { -a },
            if z[i].im >= 0.0 { a } else { -a },
        )
    })
}

/// DAC resolution used by the linear-quantized pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum DacModel {
    /// Infinite resolution; the quantizer is the identity.
    Infinite,
    /// Finite uniform quantizer.
    Uniform(QuantizerSpec),
}

impl DacModel {
    /// Builds the `L`-level DAC for a `B`-antenna transmitter with power
    /// budget `P`: distortion-optimal step size for a `CN(0, P/B)` input,
    /// power-normalizing scale.
    pub fn for_levels(levels: usize, b: usize, p: f64) -> Result<Self> {
        let delta = optimize_step_size(levels, p / (2.0 * b as f64))?;
        let alpha = gaussian_power_scale(levels, delta, b, p)?;
        Ok(DacModel::Uniform(make_uniform_quantizer(levels, delta, alpha)?))
    }
}

//! Infinite-resolution linear precoders (WF, ZF, MRT) and the
//! linear-quantized pipeline `x = Q(Ps)`.
//!
//! All three precoders are normalized so that `tr(P P^H) = P`, i.e. the
//! average power constraint holds with equality for `s ~ CN(0, I)`. The
//! `U x U` Gram matrix is factorized instead of anything `B x B` since
//! `U << B` in the systems of interest.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::quantizer::{quantize, DacModel};
use crate::{CMat, CVec, Cx};

/// Which closed-form linear precoder a matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Wiener filter (MMSE) precoder.
    Wf,
    /// Zero-forcing (pseudoinverse) precoder.
    Zf,
    /// Maximal-ratio transmission (matched filter) precoder.
    Mrt,
}

/// A linear precoding matrix together with its precoding factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPrecoder {
    kind: PrecoderKind,
    matrix: CMat,
    beta: f64,
}

impl LinearPrecoder {
    pub fn kind(&self) -> PrecoderKind {
        self.kind
    }

    /// The `B x U` precoding matrix, power-normalized.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Precoding factor `beta > 0` relating the receive signal to the
    /// symbol estimate.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The precoded (pre-DAC) vector `P s`.
    pub fn precode(&self, s: &CVec) -> Result<CVec> {
        if s.len() != self.matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "symbol vector has length {}, expected U={}",
                s.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * s)
    }
}

fn gram(ch: &ChannelRealization) -> CMat {
    ch.h() * ch.h().adjoint()
}

/// Wiener filter precoder
/// `P = (1/beta) H^H (H H^H + (U N0 / P) I)^{-1}` with `beta` fixing
/// `tr(P P^H) = P`.
pub fn wf_precoder(ch: &ChannelRealization, n0: f64, p: f64) -> Result<LinearPrecoder> {
    if !(p > 0.0) || !(n0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("need P > 0 and N0 >= 0, got P={p}, N0={n0}")));
    }
    let u = ch.users();
    let mut a = gram(ch);
    let ridge = u as f64 * n0 / p;
    for i in 0..u {
        a[(i, i)] += Cx::new(ridge, 0.0);
    }
    let chol = nalgebra::linalg::Cholesky::new(a)
        .ok_or_else(|| Error::DegenerateChannel("regularized Gram matrix is singular".into()))?;
    // M = H^H A^{-1} = (A^{-1} H)^H since A is Hermitian
    let m = chol.solve(ch.h()).adjoint();
    let beta = m.norm() / p.sqrt();
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::DegenerateChannel("precoder normalization failed".into()));
    }
    Ok(LinearPrecoder { kind: PrecoderKind::Wf, matrix: m / Cx::new(beta, 0.0), beta })
}

/// Zero-forcing precoder `P = H^dagger / beta`,
/// `beta = sqrt(tr((H H^H)^{-1}) / P)`; nulls the multiuser interference.
pub fn zf_precoder(ch: &ChannelRealization, p: f64) -> Result<LinearPrecoder> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("need P > 0, got {p}")));
    }
    let chol = nalgebra::linalg::Cholesky::new(gram(ch))
        .ok_or_else(|| Error::DegenerateChannel("channel is rank deficient".into()))?;
    let inv = chol.inverse();
    let beta = (inv.diagonal().map(|d| d.re).sum() / p).sqrt();
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::DegenerateChannel("precoder normalization failed".into()));
    }
    let pinv = ch.h().adjoint() * inv;
    Ok(LinearPrecoder { kind: PrecoderKind::Zf, matrix: pinv / Cx::new(beta, 0.0), beta })
}

/// Maximal-ratio transmission precoder `P = H^H / (beta B)`,
/// `beta = sqrt(tr(H H^H)) / (B sqrt(P))`.
pub fn mrt_precoder(ch: &ChannelRealization, p: f64) -> Result<LinearPrecoder> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("need P > 0, got {p}")));
    }
    let b = ch.antennas() as f64;
    let beta = ch.h().norm() / (b * p.sqrt());
    if !(beta > 0.0) {
        return Err(Error::DegenerateChannel("all-zero channel".into()));
    }
    let matrix = ch.h().adjoint() / Cx::new(beta * b, 0.0);
    Ok(LinearPrecoder { kind: PrecoderKind::Mrt, matrix, beta })
}

/// Linear-quantized transmit vector `x = Q(P s)`; with an
/// infinite-resolution DAC this is `P s` unchanged.
pub fn linear_quantized_precode(lp: &LinearPrecoder, s: &CVec, dac: &DacModel) -> Result<CVec> {
    let z = lp.precode(s)?;
    match dac {
        DacModel::Infinite => Ok(z),
        DacModel::Uniform(spec) => quantize(spec, &z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, sample_symbols, Constellation};
    use crate::quantizer::DacModel;
    use crate::rng::{substream, StreamPurpose};
    use crate::RMat;

    fn test_rng(c: u64) -> rand_chacha::ChaCha8Rng {
        substream(100, StreamPurpose::Channel, c, 0, 0)
    }

    #[test]
    fn wf_scalar_case() {
        let ch = ChannelRealization::new(CMat::from_element(1, 1, Cx::new(1.0, 0.0))).unwrap();
        let lp = wf_precoder(&ch, 0.5, 1.0).unwrap();
        // A = 1 + 0.5, unnormalized column 1/1.5, beta = 2/3, matrix = 1
        assert!((lp.beta() - 2.0 / 3.0).abs() < 1e-12);
        assert!((lp.matrix()[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zf_identity_case() {
        let ch = ChannelRealization::new(CMat::identity(2, 2)).unwrap();
        let lp = zf_precoder(&ch, 4.0).unwrap();
        assert!((lp.beta() - 0.5f64.sqrt()).abs() < 1e-12);
        for i in 0..2 {
            assert!((lp.matrix()[(i, i)].re - 2.0f64.sqrt()).abs() < 1e-12);
        }
        let tr = lp.matrix().norm_squared();
        assert!((tr - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mrt_row_case() {
        let h = CMat::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(1.0, 0.0)]);
        let ch = ChannelRealization::new(h).unwrap();
        let lp = mrt_precoder(&ch, 1.0).unwrap();
        assert!((lp.beta() - 0.7071067811865476).abs() < 1e-12);
        assert!((lp.matrix()[(0, 0)].re - 0.7071067811865476).abs() < 1e-12);
        assert!((lp.matrix()[(1, 0)].re - 0.7071067811865476).abs() < 1e-12);

        let zero = ChannelRealization::new(CMat::zeros(1, 2)).unwrap();
        assert!(mrt_precoder(&zero, 1.0).is_err());
    }

    #[test]
    fn power_constraint_met_with_equality() {
        let mut rng = test_rng(1);
        for &(u, b, p) in &[(2usize, 8usize, 1.0f64), (4, 16, 3.5), (16, 128, 1.0)] {
            let ch = sample_channel(u, b, &mut rng).unwrap();
            for lp in [
                wf_precoder(&ch, 0.3, p).unwrap(),
                zf_precoder(&ch, p).unwrap(),
                mrt_precoder(&ch, p).unwrap(),
            ] {
                let tr = lp.matrix().norm_squared();
                assert!((tr - p).abs() < 1e-9 * p, "{:?}: tr={tr}", lp.kind());
            }
        }
    }

    #[test]
    fn wf_limits_are_zf_and_mrt() {
        let mut rng = test_rng(2);
        let ch = sample_channel(3, 12, &mut rng).unwrap();

        // N0 -> 0: beta * P converges to the pseudoinverse
        let wf = wf_precoder(&ch, 1e-8, 1.0).unwrap();
        let zf = zf_precoder(&ch, 1.0).unwrap();
        let wf_unn = wf.matrix() * Cx::new(wf.beta(), 0.0);
        let zf_unn = zf.matrix() * Cx::new(zf.beta(), 0.0);
        assert!((&wf_unn - &zf_unn).norm() / zf_unn.norm() < 1e-5);

        // N0 -> infinity: direction converges to the matched filter
        let wf = wf_precoder(&ch, 1e8, 1.0).unwrap();
        let mrt = mrt_precoder(&ch, 1.0).unwrap();
        let a = wf.matrix() / Cx::new(wf.matrix().norm(), 0.0);
        let b = mrt.matrix() / Cx::new(mrt.matrix().norm(), 0.0);
        assert!((&a - &b).norm() < 1e-5);
    }

    /// Mean-square objective of the infinite-resolution precoding problem
    /// for `s ~ CN(0, I)`: `||I - beta H P||_F^2 + beta^2 U N0`.
    fn lqp_objective(ch: &ChannelRealization, pm: &CMat, beta: f64, n0: f64) -> f64 {
        let hp = ch.h() * pm;
        let mut acc = 0.0;
        for i in 0..ch.users() {
            for j in 0..ch.users() {
                let target = if i == j { Cx::new(1.0, 0.0) } else { Cx::new(0.0, 0.0) };
                acc += (target - hp[(i, j)] * Cx::new(beta, 0.0)).norm_sqr();
            }
        }
        acc + beta * beta * ch.users() as f64 * n0
    }

    #[test]
    fn wf_beats_random_candidates() {
        let mut rng = test_rng(3);
        let (u, b, p, n0) = (2usize, 4usize, 1.0f64, 0.4f64);
        let ch = sample_channel(u, b, &mut rng).unwrap();
        let wf = wf_precoder(&ch, n0, p).unwrap();
        let best = lqp_objective(&ch, wf.matrix(), wf.beta(), n0);
        use rand::Rng;
        for _ in 0..100_000 {
            let mut cand = CMat::from_fn(b, u, |_, _| crate::channel::sample_cn01(&mut rng));
            cand *= Cx::new((p / cand.norm_squared()).sqrt(), 0.0);
            let beta: f64 = rng.gen_range(0.01..4.0);
            assert!(lqp_objective(&ch, &cand, beta, n0) >= best - 1e-9);
        }
    }

    #[test]
    fn quantized_pipeline() {
        let mut rng = test_rng(4);
        let (u, b, p) = (2usize, 8usize, 1.0f64);
        let ch = sample_channel(u, b, &mut rng).unwrap();
        let lp = zf_precoder(&ch, p).unwrap();
        let s = sample_symbols(Constellation::Qpsk, u, &mut rng).unwrap();

        // infinite resolution is the identity
        let x = linear_quantized_precode(&lp, &s, &DacModel::Infinite).unwrap();
        assert!((&x - lp.precode(&s).unwrap()).norm() < 1e-15);

        // 1-bit output always has norm P
        let dac = DacModel::for_levels(2, b, p).unwrap();
        for _ in 0..50 {
            let s = sample_symbols(Constellation::Qpsk, u, &mut rng).unwrap();
            let x = linear_quantized_precode(&lp, &s, &dac).unwrap();
            assert!((x.norm_squared() - p).abs() < 1e-12);
        }

        // ZF with infinite resolution inverts the channel up to 1/beta
        let y = ch.apply(&x_inf(&lp, &s)).unwrap() * Cx::new(lp.beta(), 0.0);
        assert!((&y - &s).norm() < 1e-10);
    }

    fn x_inf(lp: &LinearPrecoder, s: &CVec) -> CVec {
        linear_quantized_precode(lp, s, &DacModel::Infinite).unwrap()
    }

    // Orientation check for the complex Gram path: a real channel must
    // reproduce the textbook real-valued formulas.
    #[test]
    fn real_channel_cross_check() {
        let h = RMat::from_row_slice(2, 3, &[1.0, 0.5, -0.25, 0.0, 2.0, 1.0]);
        let ch = ChannelRealization::new(h.map(|v| Cx::new(v, 0.0))).unwrap();
        let lp = zf_precoder(&ch, 1.0).unwrap();
        let prod = ch.h() * lp.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 / lp.beta() } else { 0.0 };
                assert!((prod[(i, j)] - Cx::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}

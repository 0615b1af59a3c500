//! Nonlinear precoders for 1-bit DACs.
//!
//! All methods approximate the same problem: over the quaternary transmit
//! alphabet `X = {sqrt(P/(2B)) (±1 ± j)}` and a precoding factor
//! `beta > 0`, minimize `||s - beta H x||^2 + beta^2 U N0`. The submodules
//! implement an exhaustive oracle, semidefinite relaxation, Douglas-Rachford
//! splitting on a squared-infinity-norm relaxation (SQUID), and sphere
//! precoding.

pub mod exhaustive;
pub mod sdr;
pub mod sphere;
pub mod squid;

pub use exhaustive::exhaustive_qp;
pub use sdr::{sdr_precode, sdr_precode_warm, SdrExtraction};
pub use sphere::{sphere_precode, sphere_search_fixed_beta, SphereOptions};
pub use squid::{prox_g, prox_sq_linf, squid_precode, SquidOptions};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::{CVec, Cx, RMat, RVec};

/// Which nonlinear precoder produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearMethod {
    Exhaustive,
    Sdr1,
    Sdrr,
    Squid,
    Sp,
}

/// Output of a nonlinear precoder: a transmit vector on the 1-bit alphabet,
/// its precoding factor and the achieved objective value.
#[derive(Debug, Clone)]
pub struct PrecodeResult {
    /// Transmit vector; every entry satisfies `|Re| = |Im| = sqrt(P/(2B))`.
    pub x: CVec,
    /// Precoding factor `beta = optimal_beta(H, s, x)` (nonnegative; zero
    /// only for degenerate inputs such as `s = 0`).
    pub beta: f64,
    /// Achieved value of the partially-minimized objective.
    pub objective: f64,
    /// Producing method.
    pub method: NonlinearMethod,
    /// False when an iterative method hit its cap before its convergence
    /// signal fired.
    pub converged: bool,
}

/// Objective-optimal precoding factor for a fixed transmit vector:
/// `beta = Re{s^H H x} / (||H x||^2 + U N0)`.
pub fn optimal_beta(ch: &ChannelRealization, s: &CVec, x: &CVec, n0: f64) -> Result<f64> {
    if s.len() != ch.users() {
        return Err(Error::InvalidDimension(format!(
            "symbol vector has length {}, expected U={}",
            s.len(),
            ch.users()
        )));
    }
    let hx = ch.apply(x)?;
    let num = s.dotc(&hx).re;
    let den = hx.norm_squared() + ch.users() as f64 * n0;
    Ok(num / den)
}

/// Objective of the 1-bit precoding problem at a given `beta`:
/// `||s - beta H x||^2 + beta^2 U N0`.
pub fn qp_objective(ch: &ChannelRealization, s: &CVec, x: &CVec, beta: f64, n0: f64) -> Result<f64> {
    let hx = ch.apply(x)?;
    let mut acc = 0.0;
    for i in 0..s.len() {
        acc += (s[i] - hx[i] * Cx::new(beta, 0.0)).norm_sqr();
    }
    Ok(acc + beta * beta * ch.users() as f64 * n0)
}

/// Objective minimized over `beta > 0`, together with the minimizing factor.
///
/// At the unconstrained optimum the objective collapses to
/// `||s||^2 - Re{s^H H x}^2 / (||H x||^2 + U N0)`. Candidates whose optimal
/// factor would be nonpositive are assigned the `beta -> 0+` limit value
/// `||s||^2` (their mirrored candidate `-x` is always at least as good).
pub fn minimized_qp_objective(
    ch: &ChannelRealization,
    s: &CVec,
    x: &CVec,
    n0: f64,
) -> Result<(f64, f64)> {
    let hx = ch.apply(x)?;
    let num = s.dotc(&hx).re;
    let den = hx.norm_squared() + ch.users() as f64 * n0;
    let s2 = s.norm_squared();
    if num > 0.0 {
        Ok((s2 - num * num / den, num / den))
    } else {
        Ok((s2, 0.0))
    }
}

/// Real-valued embedding of a complex instance:
/// `H_R = [[Re H, -Im H], [Im H, Re H]]`, `s_R = [Re s; Im s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    /// `2U x 2B` real channel.
    pub h_r: RMat,
    /// Length-`2U` real symbol vector.
    pub s_r: RVec,
}

impl RealEmbedding {
    /// Number of complex antennas `B`.
    pub fn antennas(&self) -> usize {
        self.h_r.ncols() / 2
    }

    /// Number of complex users `U`.
    pub fn users(&self) -> usize {
        self.h_r.nrows() / 2
    }
}

/// Builds the real-valued embedding of `(H, s)`.
pub fn realify(ch: &ChannelRealization, s: &CVec) -> RealEmbedding {
    let (u, b) = (ch.users(), ch.antennas());
    let mut h_r = RMat::zeros(2 * u, 2 * b);
    for i in 0..u {
        for j in 0..b {
            let v = ch.h()[(i, j)];
            h_r[(i, j)] = v.re;
            h_r[(i, j + b)] = -v.im;
            h_r[(i + u, j)] = v.im;
            h_r[(i + u, j + b)] = v.re;
        }
    }
    let s_r = RVec::from_fn(2 * u, |i, _| if i < u { s[i].re } else { s[i - u].im });
    RealEmbedding { h_r, s_r }
}

/// Inverse of the vector embedding: `x_b = x_R[b] + j x_R[B + b]`.
pub fn complexify(x_r: &RVec) -> CVec {
    let b = x_r.len() / 2;
    CVec::from_fn(b, |i, _| Cx::new(x_r[i], x_r[i + b]))
}

/// Forward vector embedding, the inverse of [`complexify`].
pub fn realify_vec(x: &CVec) -> RVec {
    let b = x.len();
    RVec::from_fn(2 * b, |i, _| if i < b { x[i].re } else { x[i - b].im })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, sample_cn01, sample_symbols, Constellation};
    use crate::rng::{substream, StreamPurpose};
    use crate::CMat;

    fn test_rng(c: u64) -> rand_chacha::ChaCha8Rng {
        substream(300, StreamPurpose::Channel, c, 0, 0)
    }

    #[test]
    fn optimal_beta_examples() {
        let ch = ChannelRealization::new(CMat::from_element(1, 1, Cx::new(1.0, 0.0))).unwrap();
        let s = CVec::from_element(1, Cx::new(1.0, 0.0));

        let x = CVec::from_element(1, Cx::new(1.0, 0.0));
        assert!((optimal_beta(&ch, &s, &x, 0.0).unwrap() - 1.0).abs() < 1e-15);

        let x = CVec::from_element(1, Cx::new(1.0, 1.0));
        assert!((optimal_beta(&ch, &s, &x, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let minus = -x.clone();
        let a = optimal_beta(&ch, &s, &x, 1.0).unwrap();
        let b = optimal_beta(&ch, &s, &minus, 1.0).unwrap();
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn qp_objective_examples_and_identity() {
        let mut rng = test_rng(1);
        let ch = sample_channel(2, 4, &mut rng).unwrap();
        let s = sample_symbols(Constellation::Qpsk, 2, &mut rng).unwrap();

        // beta H x = s with no noise gives zero objective
        let x = CVec::from_fn(4, |_, _| sample_cn01(&mut rng));
        let hx = ch.apply(&x).unwrap();
        let s_aligned = hx * Cx::new(2.0, 0.0);
        assert!(qp_objective(&ch, &s_aligned, &x, 2.0, 0.0).unwrap() < 1e-20);

        // s = 0: objective reduces to ||beta H x||^2 + beta^2 U N0, with
        // infimum at beta -> 0+
        let zero = CVec::zeros(2);
        let got = qp_objective(&ch, &zero, &x, 0.7, 0.3).unwrap();
        let want = 0.49 * ch.apply(&x).unwrap().norm_squared() + 0.49 * 2.0 * 0.3;
        assert!((got - want).abs() < 1e-12);
        let (obj0, beta0) = minimized_qp_objective(&ch, &zero, &x, 0.3).unwrap();
        assert_eq!(obj0, 0.0);
        assert_eq!(beta0, 0.0);

        // partially-minimized form agrees with the full objective at beta-hat
        for _ in 0..50 {
            let x = crate::quantizer::quantize_one_bit(
                &CVec::from_fn(4, |_, _| sample_cn01(&mut rng)),
                1.0,
                4,
            );
            let (obj, beta) = minimized_qp_objective(&ch, &s, &x, 0.25).unwrap();
            if beta > 0.0 {
                let full = qp_objective(&ch, &s, &x, beta, 0.25).unwrap();
                assert!((obj - full).abs() <= 1e-12 * full.max(1.0));
            }
        }
    }

    #[test]
    fn realify_examples() {
        let ch = ChannelRealization::new(CMat::from_element(1, 1, Cx::new(0.0, 1.0))).unwrap();
        let s = CVec::from_element(1, Cx::new(0.3, -0.4));
        let emb = realify(&ch, &s);
        assert_eq!(emb.h_r[(0, 0)], 0.0);
        assert_eq!(emb.h_r[(0, 1)], -1.0);
        assert_eq!(emb.h_r[(1, 0)], 1.0);
        assert_eq!(emb.h_r[(1, 1)], 0.0);
        assert_eq!(emb.s_r[0], 0.3);
        assert_eq!(emb.s_r[1], -0.4);
        assert_eq!(emb.users(), 1);
        assert_eq!(emb.antennas(), 1);
    }

    #[test]
    fn embedding_round_trip_and_isometry() {
        let mut rng = test_rng(2);
        let ch = sample_channel(3, 5, &mut rng).unwrap();
        for _ in 0..50 {
            let v = CVec::from_fn(5, |_, _| sample_cn01(&mut rng));
            let round = complexify(&realify_vec(&v));
            assert!((&round - &v).norm() < 1e-15);

            let s = CVec::from_fn(3, |_, _| sample_cn01(&mut rng));
            let emb = realify(&ch, &s);
            let lhs = (&emb.h_r * realify_vec(&v)).norm_squared();
            let rhs = ch.apply(&v).unwrap().norm_squared();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
        }
    }
}

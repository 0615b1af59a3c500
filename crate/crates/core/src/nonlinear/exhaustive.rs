//! Exhaustive solution of the 1-bit precoding problem.
//!
//! Enumerates all `4^B` transmit candidates through a Gray code over the
//! `2B` component signs, maintaining `H x` incrementally so each candidate
//! costs `O(U)`. Sign symmetry halves the search: of a pair `{x, -x}` the
//! member with `Re{s^H H x} >= 0` is never worse, so one sign is pinned and
//! candidates are re-oriented on the fly.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::nonlinear::{NonlinearMethod, PrecodeResult};
use crate::{CVec, Cx};

/// Largest antenna count accepted by the exhaustive search.
pub const MAX_EXHAUSTIVE_ANTENNAS: usize = 12;

/// Globally minimizes the partially-minimized 1-bit precoding objective by
/// enumerating the whole transmit alphabet. Refuses `B > 12`.
pub fn exhaustive_qp(
    ch: &ChannelRealization,
    s: &CVec,
    n0: f64,
    p: f64,
) -> Result<PrecodeResult> {
    let b = ch.antennas();
    let u = ch.users();
    if b > MAX_EXHAUSTIVE_ANTENNAS {
        return Err(Error::SizeLimit(format!(
            "exhaustive search over 4^{b} candidates refused (limit B <= {MAX_EXHAUSTIVE_ANTENNAS})"
        )));
    }
    if s.len() != u {
        return Err(Error::InvalidDimension(format!(
            "symbol vector has length {}, expected U={u}",
            s.len()
        )));
    }
    let amp = (p / (2.0 * b as f64)).sqrt();
    let un0 = u as f64 * n0;
    let s2 = s.norm_squared();

    // planar column-major copies of H for the hot loop
    let mut h_re = vec![0.0f64; u * b];
    let mut h_im = vec![0.0f64; u * b];
    for col in 0..b {
        for row in 0..u {
            h_re[col * u + row] = ch.h()[(row, col)].re;
            h_im[col * u + row] = ch.h()[(row, col)].im;
        }
    }
    // re-part of s^H column and of s^H (j column), per antenna
    let mut gr = vec![0.0f64; b];
    let mut gi = vec![0.0f64; b];
    for col in 0..b {
        let mut r = 0.0;
        let mut i = 0.0;
        for row in 0..u {
            let (sre, sim) = (s[row].re, s[row].im);
            r += sre * h_re[col * u + row] + sim * h_im[col * u + row];
            i += sim * h_re[col * u + row] - sre * h_im[col * u + row];
        }
        gr[col] = r;
        gi[col] = i;
    }

    // start from the all-plus candidate
    let n_signs = 2 * b;
    let mut sign = vec![1.0f64; n_signs];
    let mut w_re = vec![0.0f64; u];
    let mut w_im = vec![0.0f64; u];
    for col in 0..b {
        for row in 0..u {
            // x_col = amp (1 + j): contributes amp (h + j h)
            w_re[row] += amp * (h_re[col * u + row] - h_im[col * u + row]);
            w_im[row] += amp * (h_im[col * u + row] + h_re[col * u + row]);
        }
    }
    let mut re = amp * (gr.iter().sum::<f64>() + gi.iter().sum::<f64>());

    let mut code: u32 = 0;
    let mut best_code: u32 = 0;
    let mut best_flip = false;
    let mut best_v = f64::NEG_INFINITY;

    let consider = |code: u32, re: f64, n: f64, best_v: &mut f64, best_code: &mut u32, best_flip: &mut bool| {
        // oriented objective: both members of {x, -x} share re^2, the one
        // with re >= 0 attains it with a feasible beta
        let v = if re != 0.0 { re * re / (n + un0) } else { 0.0 };
        let flip = re < 0.0;
        let oriented = if flip { code ^ (((1u64 << n_signs) - 1) as u32) } else { code };
        if v > *best_v || (v == *best_v && oriented < orient(*best_code, *best_flip, n_signs)) {
            *best_v = v;
            *best_code = code;
            *best_flip = flip;
        }
    };

    let norm = |w_re: &[f64], w_im: &[f64]| -> f64 {
        let mut n = 0.0;
        for row in 0..u {
            n += w_re[row] * w_re[row] + w_im[row] * w_im[row];
        }
        n
    };

    consider(code, re, norm(&w_re, &w_im), &mut best_v, &mut best_code, &mut best_flip);

    // Gray-code walk over signs 1..2B-1 (sign 0 pinned by the mirror symmetry)
    let total: u64 = 1u64 << (n_signs - 1);
    for i in 1..total {
        let pos = 1 + i.trailing_zeros() as usize;
        let delta = -2.0 * amp * sign[pos];
        sign[pos] = -sign[pos];
        code ^= 1 << pos;
        if pos < b {
            let col = pos;
            for row in 0..u {
                w_re[row] += delta * h_re[col * u + row];
                w_im[row] += delta * h_im[col * u + row];
            }
            re += delta * gr[col];
        } else {
            let col = pos - b;
            for row in 0..u {
                w_re[row] -= delta * h_im[col * u + row];
                w_im[row] += delta * h_re[col * u + row];
            }
            re += delta * gi[col];
        }
        consider(code, re, norm(&w_re, &w_im), &mut best_v, &mut best_code, &mut best_flip);
    }

    let oriented = orient(best_code, best_flip, n_signs);
    let x = CVec::from_fn(b, |i, _| {
        let sre = if oriented & (1 << i) == 0 { amp } else { -amp };
        let sim = if oriented & (1 << (i + b)) == 0 { amp } else { -amp };
        Cx::new(sre, sim)
    });
    let (objective, beta) = crate::nonlinear::minimized_qp_objective(ch, s, &x, n0)?;
    debug_assert!((objective - (s2 - best_v.max(0.0))).abs() <= 1e-9 * s2.max(1.0));
    Ok(PrecodeResult { x, beta, objective, method: NonlinearMethod::Exhaustive, converged: true })
}

#[inline]
fn orient(code: u32, flip: bool, n_signs: usize) -> u32 {
    if flip {
        code ^ (((1u64 << n_signs) - 1) as u32)
    } else {
        code
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, sample_symbols, Constellation};
    use crate::nonlinear::minimized_qp_objective;
    use crate::rng::{substream, StreamPurpose};
    use crate::CMat;

    fn test_rng(c: u64) -> rand_chacha::ChaCha8Rng {
        substream(310, StreamPurpose::Channel, c, 0, 0)
    }

    #[test]
    fn single_antenna_aligns_with_symbol_quadrant() {
        let ch = ChannelRealization::new(CMat::from_element(1, 1, Cx::new(1.0, 0.0))).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let s = CVec::from_element(1, Cx::new(a, a));
        let r = exhaustive_qp(&ch, &s, 0.0, 2.0).unwrap();
        assert_eq!(r.x[0], Cx::new(1.0, 1.0));
        assert!(r.beta > 0.0);
    }

    #[test]
    fn beats_every_candidate_on_small_instances() {
        let mut rng = test_rng(1);
        for _ in 0..20 {
            let ch = sample_channel(2, 2, &mut rng).unwrap();
            let s = sample_symbols(Constellation::Qpsk, 2, &mut rng).unwrap();
            let n0 = 0.2;
            let p = 1.0;
            let best = exhaustive_qp(&ch, &s, n0, p).unwrap();
            let amp = (p / 4.0).sqrt();
            for m in 0..16u32 {
                let x = CVec::from_fn(2, |i, _| {
                    Cx::new(
                        if m & (1 << i) == 0 { amp } else { -amp },
                        if m & (1 << (i + 2)) == 0 { amp } else { -amp },
                    )
                });
                let (obj, _) = minimized_qp_objective(&ch, &s, &x, n0).unwrap();
                assert!(best.objective <= obj + 1e-12);
            }
            // feasibility: constant modulus, total power P
            assert!((best.x.norm_squared() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_symmetry() {
        let mut rng = test_rng(2);
        for _ in 0..10 {
            let ch = sample_channel(2, 3, &mut rng).unwrap();
            let s = sample_symbols(Constellation::Qpsk, 2, &mut rng).unwrap();
            let plus = exhaustive_qp(&ch, &s, 0.15, 1.0).unwrap();
            let minus = exhaustive_qp(&ch, &(-s.clone()), 0.15, 1.0).unwrap();
            assert!((&plus.x + &minus.x).norm() < 1e-12);
            assert!((plus.objective - minus.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_rail() {
        let mut rng = test_rng(3);
        let ch = sample_channel(2, 13, &mut rng).unwrap();
        let s = sample_symbols(Constellation::Qpsk, 2, &mut rng).unwrap();
        assert!(matches!(exhaustive_qp(&ch, &s, 0.1, 1.0), Err(Error::SizeLimit(_))));
    }
}

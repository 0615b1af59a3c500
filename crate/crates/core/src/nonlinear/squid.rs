//! SQUID: squared-infinity-norm Douglas-Rachford splitting.
//!
//! Solves the convex relaxation
//! `min ||s_R - H_R b||^2 + (2 B U N0 / P) ||b||_inf^2` by alternating the
//! proximal operators of the two terms, then extracts the transmit vector
//! from the signs of the iterate. The least-squares proximal step inverts
//! `(H_R^T H_R + I/2)` through its `2U x 2U` Woodbury complement, so no
//! `B x B` factorization is ever formed; the factor is computed once per
//! channel and shared across symbol vectors.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::nonlinear::{minimized_qp_objective, realify, NonlinearMethod, PrecodeResult, RealEmbedding};
use crate::{CVec, Cx, RMat, RVec};

/// Iteration controls for [`squid_precode`].
#[derive(Debug, Clone, Copy)]
pub struct SquidOptions {
    /// Hard iteration cap.
    pub max_iters: usize,
    /// Consecutive iterations with an unchanged sign pattern that count as
    /// convergence (Douglas-Rachford is not monotone in the objective, so
    /// sign stability is the practical stopping signal).
    pub sign_stable_iters: usize,
}

impl Default for SquidOptions {
    fn default() -> Self {
        Self { max_iters: 200, sign_stable_iters: 10 }
    }
}

/// Proximal operator of the squared infinity norm:
/// `argmin_u lambda ||u||_inf^2 + 1/2 ||z - u||^2`.
///
/// Sorts `|z|` descending, forms the running means
/// `c_k = (sum_{i<=k} s_i) / (2 lambda + k)`, clips at
/// `alpha = max(0, max_k c_k)` and restores signs. `lambda = 0` degenerates
/// to the identity.
pub fn prox_sq_linf(z: &RVec, lambda: f64) -> RVec {
    assert!(lambda >= 0.0 && lambda.is_finite(), "invalid weight {lambda}");
    let n = z.len();
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut alpha = 0.0f64;
    let mut acc = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        acc += m;
        let c = acc / (2.0 * lambda + (k + 1) as f64);
        if c > alpha {
            alpha = c;
        }
    }
    RVec::from_fn(n, |i, _| {
        let m = z[i].abs().min(alpha);
        if z[i] >= 0.0 {
            m
        } else {
            -m
        }
    })
}

fn woodbury_factor(h_r: &RMat) -> Option<Cholesky<f64, Dyn>> {
    // M = I/2 + H_R H_R^T, the small Gram complement
    let dim = h_r.nrows();
    let mut m = h_r * h_r.transpose();
    for i in 0..dim {
        m[(i, i)] += 0.5;
    }
    Cholesky::new(m)
}

fn apply_ls_inverse(h_r: &RMat, chol: &Cholesky<f64, Dyn>, t: &RVec) -> RVec {
    // (H^T H + I/2)^{-1} t = 2t - 2 H^T (I/2 + H H^T)^{-1} H t
    let ht = h_r * t;
    let y = chol.solve(&ht);
    let correction = h_r.transpose() * y;
    t * 2.0 - correction * 2.0
}

/// Proximal operator of `g(b) = ||s_R - H_R b||^2`:
/// `(H_R^T H_R + I/2)^{-1} (H_R^T s_R + w/2)`.
pub fn prox_g(w: &RVec, emb: &RealEmbedding) -> RVec {
    let chol = woodbury_factor(&emb.h_r).expect("Gram complement is positive definite");
    let t = emb.h_r.transpose() * &emb.s_r + w * 0.5;
    apply_ls_inverse(&emb.h_r, &chol, &t)
}

/// Per-channel SQUID state: the real embedding of `H` and the cached
/// least-squares factor, reusable across symbol vectors.
pub struct SquidEngine {
    ch: ChannelRealization,
    h_r: RMat,
    chol: Cholesky<f64, Dyn>,
    n0: f64,
    lambda: f64,
    amp: f64,
}

impl SquidEngine {
    pub fn new(ch: &ChannelRealization, n0: f64, p: f64) -> Result<Self> {
        if !(p > 0.0) || !(n0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need P > 0 and N0 >= 0, got P={p}, N0={n0}"
            )));
        }
        let b = ch.antennas();
        let u = ch.users();
        let emb = realify(ch, &CVec::zeros(u));
        let chol = woodbury_factor(&emb.h_r)
            .ok_or_else(|| Error::DegenerateChannel("Gram complement factorization failed".into()))?;
        Ok(Self {
            ch: ch.clone(),
            h_r: emb.h_r,
            chol,
            n0,
            lambda: 2.0 * b as f64 * u as f64 * n0 / p,
            amp: (p / (2.0 * b as f64)).sqrt(),
        })
    }

    /// Runs the Douglas-Rachford iteration for one symbol vector.
    pub fn precode(&self, s: &CVec, opts: &SquidOptions) -> Result<PrecodeResult> {
        if s.len() != self.ch.users() {
            return Err(Error::InvalidDimension(format!(
                "symbol vector has length {}, expected U={}",
                s.len(),
                self.ch.users()
            )));
        }
        let u = self.ch.users();
        let dim = 2 * self.ch.antennas();
        let s_r = RVec::from_fn(2 * u, |i, _| if i < u { s[i].re } else { s[i - u].im });
        let hts = self.h_r.transpose() * &s_r;

        let mut b = RVec::zeros(dim);
        let mut c = RVec::zeros(dim);
        let mut pattern = vec![0u64; dim.div_ceil(64)];
        let mut prev_pattern = pattern.clone();
        let mut stable = 0usize;
        let mut best: Option<(f64, f64, CVec)> = None;
        let mut evaluated_pattern = vec![u64::MAX; dim.div_ceil(64)];
        let mut converged = false;

        for _ in 0..opts.max_iters {
            // a = prox_g(2b - c); c += a - b; b = prox_f(c)
            let t = &hts + (&b * 2.0 - &c) * 0.5;
            let a = apply_ls_inverse(&self.h_r, &self.chol, &t);
            c += &a - &b;
            b = prox_sq_linf(&c, self.lambda);

            sign_pattern(&b, &mut pattern);
            if pattern == prev_pattern {
                stable += 1;
            } else {
                stable = 0;
            }
            std::mem::swap(&mut prev_pattern, &mut pattern);

            // score each new sign pattern so a cap-hit returns the best
            // candidate seen rather than the last one
            if prev_pattern != evaluated_pattern {
                evaluated_pattern.copy_from_slice(&prev_pattern);
                let x = self.extract(&prev_pattern);
                let (obj, beta) = minimized_qp_objective(&self.ch, s, &x, self.n0)?;
                if best.as_ref().map_or(true, |(bo, _, _)| obj < *bo) {
                    best = Some((obj, beta, x));
                }
            }

            if stable >= opts.sign_stable_iters {
                converged = true;
                break;
            }
        }

        let (x, beta, objective) = if converged {
            let x = self.extract(&prev_pattern);
            let (obj, beta) = minimized_qp_objective(&self.ch, s, &x, self.n0)?;
            (x, beta, obj)
        } else {
            let (obj, beta, x) = best.expect("at least one iteration ran");
            (x, beta, obj)
        };
        Ok(PrecodeResult { x, beta, objective, method: NonlinearMethod::Squid, converged })
    }

    fn extract(&self, pattern: &[u64]) -> CVec {
        let bb = self.ch.antennas();
        CVec::from_fn(bb, |i, _| {
            let re = if bit(pattern, i) { -self.amp } else { self.amp };
            let im = if bit(pattern, i + bb) { -self.amp } else { self.amp };
            Cx::new(re, im)
        })
    }
}

fn sign_pattern(v: &RVec, out: &mut [u64]) {
    for w in out.iter_mut() {
        *w = 0;
    }
    for (i, &x) in v.iter().enumerate() {
        if x < 0.0 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
}

#[inline]
fn bit(pattern: &[u64], i: usize) -> bool {
    pattern[i / 64] & (1 << (i % 64)) != 0
}

/// One-shot SQUID precoding; builds the per-channel state and runs the
/// iteration.
pub fn squid_precode(
    ch: &ChannelRealization,
    s: &CVec,
    n0: f64,
    p: f64,
    opts: &SquidOptions,
) -> Result<PrecodeResult> {
    SquidEngine::new(ch, n0, p)?.precode(s, opts)
}

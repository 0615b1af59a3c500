//! Sphere precoding: exact alphabet search at a fixed precoding factor,
//! alternated with factor updates.
//!
//! With `beta` fixed the 1-bit problem is a closest-vector problem for the
//! augmented channel `[H; sqrt(U N0 / P) I]`. A QR factorization turns it
//! into a triangular tree search over the quaternary alphabet, explored
//! depth first in Schnorr-Euchner order with branch-and-bound pruning. The
//! factor is initialized from the 1-bit-quantized WF solution and updated
//! between searches; the alternation settles in one to three rounds.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linear::{wf_precoder, LinearPrecoder};
use crate::nonlinear::{minimized_qp_objective, optimal_beta, NonlinearMethod, PrecodeResult};
use crate::quantizer::quantize_one_bit;
use crate::{CMat, CVec, Cx};

/// Largest antenna count accepted by the tree search.
pub const MAX_SPHERE_ANTENNAS: usize = 16;

/// Outer-loop controls for [`sphere_precode`].
#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    /// Cap on factor-update rounds.
    pub max_outer: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self { max_outer: 3 }
    }
}

/// Per-channel sphere-precoding state: QR factors of the augmented channel
/// and the WF precoder used for initialization.
pub struct SphereEngine {
    ch: ChannelRealization,
    wf: LinearPrecoder,
    /// Upper-triangular factor with real nonnegative diagonal.
    r: CMat,
    /// Maps `s` to `Q^H [s; 0]`.
    y_map: CMat,
    n0: f64,
    p: f64,
    amp: f64,
}

impl SphereEngine {
    pub fn new(ch: &ChannelRealization, n0: f64, p: f64) -> Result<Self> {
        let b = ch.antennas();
        let u = ch.users();
        if b > MAX_SPHERE_ANTENNAS {
            return Err(Error::SizeLimit(format!(
                "sphere search refused for B={b} (limit B <= {MAX_SPHERE_ANTENNAS})"
            )));
        }
        let wf = wf_precoder(ch, n0, p)?;

        // augmented channel [H; sqrt(U N0 / P) I_B]
        let reg = (u as f64 * n0 / p).sqrt();
        let mut aug = CMat::zeros(u + b, b);
        aug.view_mut((0, 0), (u, b)).copy_from(ch.h());
        for i in 0..b {
            aug[(u + i, i)] = Cx::new(reg, 0.0);
        }
        let qr = nalgebra::linalg::QR::new(aug);
        let mut q = qr.q();
        let mut r = qr.r();
        // rotate to a real nonnegative diagonal so the triangular search
        // works with consistent phases
        for k in 0..b {
            let d = r[(k, k)];
            let mag = d.norm();
            if mag > 0.0 {
                let ph = d / Cx::new(mag, 0.0);
                let conj = ph.conj();
                for j in k..b {
                    r[(k, j)] *= conj;
                }
                for i in 0..u + b {
                    q[(i, k)] *= ph;
                }
            }
        }
        let y_map = q.view((0, 0), (u, b)).adjoint();
        Ok(Self { ch: ch.clone(), wf, r, y_map, n0, p, amp: (p / (2.0 * b as f64)).sqrt() })
    }

    /// Alternates the triangular search with factor updates.
    pub fn precode(&self, s: &CVec, opts: &SphereOptions) -> Result<PrecodeResult> {
        let mut x = quantize_one_bit(&self.wf.precode(s)?, self.p, self.ch.antennas());
        let mut beta = optimal_beta(&self.ch, s, &x, self.n0)?;
        if beta < 0.0 {
            x = -x;
            beta = -beta;
        }
        let mut converged = false;
        if beta > 0.0 {
            let y = &self.y_map * s;
            for _ in 0..opts.max_outer.max(1) {
                let next = sphere_search_fixed_beta(&self.r, &y, self.amp, beta, Some(&x));
                if next == x {
                    converged = true;
                    break;
                }
                let mut beta_next = optimal_beta(&self.ch, s, &next, self.n0)?;
                x = next;
                if beta_next < 0.0 {
                    x = -x;
                    beta_next = -beta_next;
                }
                if beta_next == 0.0 {
                    break;
                }
                beta = beta_next;
            }
        }
        let (objective, beta) = minimized_qp_objective(&self.ch, s, &x, self.n0)?;
        Ok(PrecodeResult { x, beta, objective, method: NonlinearMethod::Sp, converged })
    }
}

/// One-shot sphere precoding; builds the per-channel state and runs the
/// alternation.
pub fn sphere_precode(
    ch: &ChannelRealization,
    s: &CVec,
    n0: f64,
    p: f64,
    opts: &SphereOptions,
) -> Result<PrecodeResult> {
    SphereEngine::new(ch, n0, p)?.precode(s, opts)
}

/// Depth-first Schnorr-Euchner search for
/// `argmin_{x in X^B} || y - beta R x ||` over the quaternary alphabet
/// `X = {amp (±1 ± j)}`, given upper-triangular `R`.
///
/// `init` seeds the pruning radius; passing `None` searches with an
/// unbounded initial radius. The returned minimizer is always the exact
/// argmin because pruning only discards branches that provably exceed the
/// incumbent.
pub fn sphere_search_fixed_beta(
    r: &CMat,
    y: &CVec,
    amp: f64,
    beta: f64,
    init: Option<&CVec>,
) -> CVec {
    let b = r.nrows();
    let cands = [
        Cx::new(amp, amp),
        Cx::new(amp, -amp),
        Cx::new(-amp, amp),
        Cx::new(-amp, -amp),
    ];
    let mut best = match init {
        Some(x0) => x0.clone(),
        None => CVec::from_element(b, cands[0]),
    };
    let mut best_d = match init {
        Some(x0) => {
            let mut d = 0.0;
            for k in 0..b {
                let mut sigma = y[k];
                for j in k..b {
                    sigma -= r[(k, j)] * x0[j] * Cx::new(beta, 0.0);
                }
                d += sigma.norm_sqr();
            }
            d
        }
        None => f64::INFINITY,
    };

    let mut cur = vec![cands[0]; b];
    descend(r, y, beta, &cands, b - 1, 0.0, &mut cur, &mut best, &mut best_d);
    best
}

#[allow(clippy::too_many_arguments)]
fn descend(
    r: &CMat,
    y: &CVec,
    beta: f64,
    cands: &[Cx; 4],
    k: usize,
    d: f64,
    cur: &mut [Cx],
    best: &mut CVec,
    best_d: &mut f64,
) {
    let b = r.nrows();
    let mut sigma = y[k];
    for j in k + 1..b {
        sigma -= r[(k, j)] * cur[j] * Cx::new(beta, 0.0);
    }
    let rkk = r[(k, k)] * Cx::new(beta, 0.0);
    let mut order: [(f64, usize); 4] = [(0.0, 0); 4];
    for (i, &q) in cands.iter().enumerate() {
        order[i] = ((sigma - rkk * q).norm_sqr(), i);
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for &(m, i) in &order {
        let nd = d + m;
        if nd >= *best_d {
            // children are ordered by metric, so the rest fail too
            break;
        }
        cur[k] = cands[i];
        if k == 0 {
            *best_d = nd;
            for (t, &v) in cur.iter().enumerate() {
                best[t] = v;
            }
        } else {
            descend(r, y, beta, cands, k - 1, nd, cur, best, best_d);
        }
    }
}

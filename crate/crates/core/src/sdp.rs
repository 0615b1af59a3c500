//! Small dense solver for the diagonally-constrained semidefinite program
//!
//! ```text
//! minimize   tr(T X)
//! subject to X >= 0,  X_11 = X_bb (b = 2..n-1),  X_nn = 1
//! ```
//!
//! which is the relaxation arising from lifting the 1-bit precoding
//! problem. Matrix dimensions are `2B + 1` with `B <= 16` in practice, so
//! dense eigendecompositions are cheap and an operator-splitting scheme is
//! self-contained: each iteration alternates an exact projection onto the
//! affine constraints with a projection onto the PSD cone, coupled through
//! scaled dual variables (ADMM with unit penalty). The cost matrix is
//! normalized by its Frobenius norm on entry, which also makes the iterates
//! exactly invariant under positive scaling of `T`.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::RMat;

/// Solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Residual tolerance, relative to the norm-preconditioned problem.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// TEMPORARY experiment knob.
    pub step_gain: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 20_000, step_gain: 1.0 }
    }
}

/// Carried-over iterates for warm-starting a sequence of related solves
/// (e.g. per-symbol liftings that share a channel).
#[derive(Debug, Clone)]
pub struct SdpWarmState {
    z: RMat,
    u: RMat,
}

/// Approximate minimizer together with feasibility diagnostics.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// PSD iterate (exactly positive semidefinite up to eigensolver
    /// rounding); the affine constraints hold within `constraint_residual`.
    pub x: RMat,
    /// `tr(T X)` for the original (unscaled) cost matrix.
    pub objective: f64,
    /// Frobenius distance between the affine-feasible and PSD iterates.
    pub primal_residual: f64,
    /// Largest violation of the diagonal constraints by `x`.
    pub constraint_residual: f64,
    /// Iterations consumed.
    pub iterations: usize,
    /// Whether both residuals fell below the tolerance.
    pub converged: bool,
}

/// Frobenius-nearest positive semidefinite matrix: eigendecomposition with
/// negative eigenvalues clipped to zero. The input is symmetrized first.
pub fn project_psd(s: &RMat) -> RMat {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut out = RMat::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            // out += lam * v v^T
            for i in 0..n {
                let vi = lam * v[i];
                for j in 0..n {
                    out[(i, j)] += vi * v[j];
                }
            }
        }
    }
    out
}

/// Exact projection onto the affine set: leading `n-1` diagonal entries
/// averaged to a common value, last diagonal entry pinned to one,
/// off-diagonal entries symmetrized.
fn project_affine(m: &RMat) -> RMat {
    let n = m.nrows();
    let mut out = (m + m.transpose()) * 0.5;
    let group = n - 1;
    let mean = (0..group).map(|i| out[(i, i)]).sum::<f64>() / group as f64;
    for i in 0..group {
        out[(i, i)] = mean;
    }
    out[(n - 1, n - 1)] = 1.0;
    out
}

fn affine_violation(m: &RMat) -> f64 {
    let n = m.nrows();
    let group = n - 1;
    let mean = (0..group).map(|i| m[(i, i)]).sum::<f64>() / group as f64;
    let mut v: f64 = (m[(n - 1, n - 1)] - 1.0).abs();
    for i in 0..group {
        v = v.max((m[(i, i)] - mean).abs());
    }
    v
}

/// Runs the splitting iteration on a symmetric cost matrix of size
/// `n = 2B + 1 >= 3`. Returns the PSD iterate; `converged = false` reports
/// the residuals reached at the iteration cap.
pub fn solve_diag_constrained_sdp(t: &RMat, opts: &SdpOptions) -> Result<SdpSolution> {
    solve_diag_constrained_sdp_warm(t, opts, &mut None)
}

/// [`solve_diag_constrained_sdp`] with iterate reuse: a `Some` state seeds
/// the iteration and receives the final iterates back. Solving a stream of
/// similar instances this way cuts iteration counts several-fold.
pub fn solve_diag_constrained_sdp_warm(
    t: &RMat,
    opts: &SdpOptions,
    warm: &mut Option<SdpWarmState>,
) -> Result<SdpSolution> {
    let n = t.nrows();
    if n != t.ncols() {
        return Err(Error::InvalidDimension(format!(
            "cost matrix must be square, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidDimension(format!("need n >= 3, got {n}")));
    }
    let sym = (t + t.transpose()) * 0.5;
    let scale = match sym.norm() {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let t_hat = &sym * (opts.step_gain / scale);

    // feasible start: identity satisfies both constraint groups
    let (mut z, mut u) = match warm.take() {
        Some(state) if state.z.nrows() == n => (state.z, state.u),
        _ => (RMat::identity(n, n), RMat::zeros(n, n)),
    };
    let mut primal;
    let mut constraint;
    let mut iterations = 0;
    let mut converged = false;
    // over-relaxation shortens the splitting tail without changing the
    // fixed points
    let alpha = 1.6;

    loop {
        let x = project_affine(&(&z - &u - &t_hat));
        let x_rel = &x * alpha + &z * (1.0 - alpha);
        let z_new = project_psd(&(&x_rel + &u));
        u += &x_rel - &z_new;
        // the split residual alone can vanish transiently away from the
        // optimum; the dual residual ||Z_k+1 - Z_k|| closes that gap
        let dual = (&z_new - &z).norm();
        z = z_new;
        iterations += 1;

        primal = (&x - &z).norm();
        constraint = affine_violation(&z);
        if primal <= opts.tol && dual <= opts.tol && constraint <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
    }

    let objective = (&sym * &z).trace();
    *warm = Some(SdpWarmState { z: z.clone(), u });
    Ok(SdpSolution {
        x: z,
        objective,
        primal_residual: primal,
        constraint_residual: constraint,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamPurpose};
    use rand::Rng;

    fn test_rng(c: u64) -> rand_chacha::ChaCha8Rng {
        substream(400, StreamPurpose::Channel, c, 0, 0)
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> RMat {
        let m = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    /// Random positive semidefinite cost, for which the minimum is attained
    /// (the lifted precoding costs are of this form).
    fn random_psd(n: usize, rng: &mut impl Rng) -> RMat {
        let m = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &m * m.transpose()
    }

    #[test]
    fn identity_cost_concentrates_on_the_corner() {
        let t = RMat::identity(9, 9);
        let sol = solve_diag_constrained_sdp(&t, &SdpOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.objective - 1.0).abs() < 1e-4, "objective {}", sol.objective);
        assert!((sol.x[(8, 8)] - 1.0).abs() < 1e-4);
        for i in 0..8 {
            assert!(sol.x[(i, i)].abs() < 1e-4);
        }
    }

    #[test]
    fn project_psd_cases() {
        let mut rng = test_rng(1);

        // idempotent on PSD inputs
        let a = random_symmetric(6, &mut rng);
        let psd = &a * a.transpose();
        let proj = project_psd(&psd);
        assert!((&proj - &psd).norm() < 1e-12 * psd.norm());

        // clips negative eigenvalues
        let d = RMat::from_diagonal(&crate::RVec::from_vec(vec![1.0, -1.0]));
        let proj = project_psd(&d);
        assert!((proj[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(proj[(1, 1)].abs() < 1e-12);

        // Frobenius-nearest: no random PSD candidate is closer
        for _ in 0..5 {
            let s = random_symmetric(5, &mut rng);
            let proj = project_psd(&s);
            let base = (&proj - &s).norm();
            for _ in 0..200 {
                let c = random_symmetric(5, &mut rng);
                let cand = &c * c.transpose();
                assert!((cand - &s).norm() >= base - 1e-12);
            }
        }
    }

    #[test]
    fn feasibility_at_convergence() {
        let mut rng = test_rng(2);
        for _ in 0..5 {
            let t = random_psd(9, &mut rng);
            let sol = solve_diag_constrained_sdp(&t, &SdpOptions::default()).unwrap();
            assert!(sol.converged, "did not converge: {} / {}", sol.primal_residual, sol.constraint_residual);
            assert!(sol.primal_residual <= 1e-6);
            assert!(sol.constraint_residual <= 1e-6);
            let eig = SymmetricEigen::new(sol.x.clone());
            assert!(eig.eigenvalues.min() >= -1e-9);
        }
    }

    #[test]
    fn residuals_shrink_with_iteration_budget() {
        let mut rng = test_rng(3);
        let opts_short = SdpOptions { tol: 0.0, max_iter: 30 };
        let opts_long = SdpOptions { tol: 0.0, max_iter: 300 };
        let mut short_total = 0.0;
        let mut long_total = 0.0;
        for _ in 0..10 {
            let t = random_psd(9, &mut rng);
            let a = solve_diag_constrained_sdp(&t, &opts_short).unwrap();
            let b = solve_diag_constrained_sdp(&t, &opts_long).unwrap();
            short_total += a.primal_residual + a.constraint_residual;
            long_total += b.primal_residual + b.constraint_residual;
        }
        assert!(long_total <= short_total, "long {long_total} vs short {short_total}");
    }

    #[test]
    fn scale_covariance() {
        let mut rng = test_rng(4);
        let t = random_psd(11, &mut rng);
        let base = solve_diag_constrained_sdp(&t, &SdpOptions::default()).unwrap();

        // powers of two precondition to the bit-identical problem
        let four = solve_diag_constrained_sdp(&(&t * 4.0), &SdpOptions::default()).unwrap();
        assert_eq!(base.x, four.x);
        assert!((four.objective - 4.0 * base.objective).abs() < 1e-12 * base.objective.abs());

        let third = solve_diag_constrained_sdp(&(&t * 3.0), &SdpOptions::default()).unwrap();
        assert!((&third.x - &base.x).norm() < 1e-6);
        assert!((third.objective - 3.0 * base.objective).abs() < 1e-6 * base.objective.abs().max(1.0));
    }

    /// Projected-gradient reference: gradient step on tr(TX) followed by a
    /// Dykstra projection onto the intersection of the affine set and the
    /// PSD cone.
    fn projected_gradient_reference(t: &RMat, iters: usize) -> f64 {
        let n = t.nrows();
        let scale = t.norm();
        let t_hat = t / scale;
        let mut x = RMat::identity(n, n);
        for k in 0..iters {
            let step = 2.0 / (1.0 + k as f64).sqrt();
            let target = &x - &t_hat * step;
            // Dykstra alternating projections
            let mut y = target.clone();
            let mut p = RMat::zeros(n, n);
            let mut q = RMat::zeros(n, n);
            for _ in 0..400 {
                let a = project_psd(&(&y + &p));
                p = &y + &p - &a;
                let b = project_affine(&(&a + &q));
                q = &a + &q - &b;
                if (&a - &b).norm() < 1e-12 {
                    y = b;
                    break;
                }
                y = b;
            }
            x = y;
        }
        (t * &x).trace()
    }

    #[test]
    fn matches_projected_gradient_reference() {
        let mut rng = test_rng(5);
        for _ in 0..3 {
            // B = 4 instances
            let t = random_psd(9, &mut rng);
            let sol = solve_diag_constrained_sdp(&t, &SdpOptions::default()).unwrap();
            let reference = projected_gradient_reference(&t, 600);
            let denom = reference.abs().max(1.0);
            assert!(
                (sol.objective - reference).abs() / denom < 1e-4,
                "splitting {} vs reference {reference}",
                sol.objective
            );
        }
    }
}

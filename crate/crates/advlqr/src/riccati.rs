//! Discrete algebraic Riccati equations: the nominal LQR equation, its
//! gamma-adversarial modification, and the feasibility boundary `gamma_inf`.
//!
//! The adversarial equation
//!
//! ```text
//!   P = Q + A'PA - A'P [B I] ([B I]'P[B I] + blkdiag(R, -g^2 I))^{-1} [B I]'PA
//! ```
//!
//! is solved through the coupled fixed point
//!
//! ```text
//!   M = P + P (g^2 I - P)^{-1} P
//!   P = Q + A'MA - A'MB (R + B'MB)^{-1} B'MA
//! ```
//!
//! which is algebraically identical by block inversion. The iteration starts
//! at `P_0 = Q` and is monotone nondecreasing, so infeasibility shows up as
//! an iterate crossing `g^2 I` and is detected eagerly at every step. The
//! nominal equation is the same kernel with the `M = P` branch, so both
//! paths share one tested core. A Hamiltonian/Schur solver is deliberately
//! not used: the indefinite block weight breaks standard symplectic-solver
//! assumptions.

use nalgebra::Complex;

use crate::matops::{
    self, check_symmetric, is_psd, max_symmetric_eigenvalue, require_finite, spectral_radius,
    sqrt_psd, symmetrized, Mat,
};
use crate::{Error, Result};

/// Iteration cap for the nominal equation.
pub const NOMINAL_MAX_ITER: usize = 10_000;
/// Iteration cap for the adversarial equation. Near the feasibility boundary
/// the contraction rate degrades like sqrt(gamma - gamma_inf), so this is
/// sized to decide feasibility down to ~1e-9 relative distance.
pub const ADVERSARIAL_MAX_ITER: usize = 500_000;
/// Iteration cap for the closed-loop (B = 0) equation, which is also probed
/// exactly at H-infinity boundaries where convergence turns sublinear.
pub const CLOSED_LOOP_MAX_ITER: usize = 2_000_000;
/// Fixed-point convergence threshold, relative to `1 + ||P||`.
pub const CONVERGENCE_TOL: f64 = 1e-11;
/// Residual bound on returned solutions, relative to `1 + ||P||`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Strict feasibility margin: iterates must keep `lmax(P) < g^2 (1 - MARGIN)`.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;
/// Iterate norms beyond this signal divergence.
const DIVERGENCE_NORM: f64 = 1e12;
/// PBH rank tolerance.
const PBH_RANK_TOL: f64 = 1e-8;

/// A discrete-time LTI plant with quadratic cost weights and disturbance
/// statistics. Construction validates shapes, definiteness, and the PBH
/// stabilizability/detectability conditions, so downstream solvers can
/// assume a well-posed problem.
#[derive(Debug, Clone)]
pub struct LtiSystem {
    a: Mat,
    b: Mat,
    q: Mat,
    r: Mat,
    sigma_w: Mat,
    sigma_0: Mat,
}

impl LtiSystem {
    /// Validate and build a system with zero initial-state covariance.
    pub fn new(a: Mat, b: Mat, q: Mat, r: Mat, sigma_w: Mat) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::DimensionMismatch("A must be square".into()));
        }
        let sigma_0 = Mat::zeros(n, n);
        Self::with_initial_covariance(a, b, q, r, sigma_w, sigma_0)
    }

    /// Validate and build a system with an explicit `Sigma_0`.
    pub fn with_initial_covariance(
        a: Mat,
        b: Mat,
        q: Mat,
        r: Mat,
        sigma_w: Mat,
        sigma_0: Mat,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if !a.is_square() {
            return Err(Error::DimensionMismatch("A must be square".into()));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        require_finite(&a, "A")?;
        require_finite(&b, "B")?;
        let q = check_symmetric(&q, "Q")?;
        let r = check_symmetric(&r, "R")?;
        let sigma_w = check_symmetric(&sigma_w, "Sigma_w")?;
        let sigma_0 = check_symmetric(&sigma_0, "Sigma_0")?;
        if q.nrows() != n {
            return Err(Error::DimensionMismatch("Q must be n x n".into()));
        }
        if r.nrows() != m {
            return Err(Error::DimensionMismatch("R must be m x m".into()));
        }
        if sigma_w.nrows() != n || sigma_0.nrows() != n {
            return Err(Error::DimensionMismatch("Sigma must be n x n".into()));
        }
        if !is_psd(&q) {
            return Err(Error::NotPsd("Q".into()));
        }
        if !matops::is_pd(&r) {
            return Err(Error::NotPd("R".into()));
        }
        if !is_psd(&sigma_w) {
            return Err(Error::NotPsd("Sigma_w".into()));
        }
        if !is_psd(&sigma_0) {
            return Err(Error::NotPsd("Sigma_0".into()));
        }
        if !pbh_full_rank(&a, &b) {
            return Err(Error::NotStabilizable);
        }
        let q_sqrt = sqrt_psd(&q)?;
        if !pbh_full_rank(&a.transpose(), &q_sqrt) {
            return Err(Error::NotDetectable);
        }
        Ok(Self {
            a,
            b,
            q,
            r,
            sigma_w,
            sigma_0,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    pub fn sigma_w(&self) -> &Mat {
        &self.sigma_w
    }

    pub fn sigma_0(&self) -> &Mat {
        &self.sigma_0
    }
}

/// PBH test: rank [A - lambda I, B] = n at every eigenvalue with
/// |lambda| >= 1.
fn pbh_full_rank(a: &Mat, b: &Mat) -> bool {
    let n = a.nrows();
    let eigs = a.complex_eigenvalues();
    for lam in eigs.iter().filter(|z| z.norm() >= 1.0 - 1e-9) {
        let mut pencil = nalgebra::DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= lam;
            for j in 0..b.ncols() {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pencil.singular_values();
        let sv_max = sv.iter().copied().fold(0.0, f64::max);
        let rank = sv
            .iter()
            .filter(|&&s| s > PBH_RANK_TOL * sv_max.max(1.0))
            .count();
        if rank < n {
            return false;
        }
    }
    true
}

/// A fixed point of a (possibly gamma-modified) Riccati equation, with the
/// residual and iteration count that produced it.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Symmetric psd solution.
    pub p: Mat,
    /// Frobenius residual of the literal equation at `p`.
    pub residual: f64,
    /// Penalty level; `None` for the nominal equation.
    pub gamma: Option<f64>,
    /// Fixed-point iterations used.
    pub iterations: usize,
}

/// One step of the coupled recursion: `M` from `P`, then the Riccati map.
/// `bru = None` drops the control minimization (the B = 0 closed-loop case).
fn dare_step(a: &Mat, bru: Option<(&Mat, &Mat)>, q: &Mat, m: &Mat) -> Result<Mat> {
    let ama = a.transpose() * m * a;
    let p_next = match bru {
        None => q + ama,
        Some((b, r)) => {
            let mb = m * b;
            let gram = r + b.transpose() * &mb;
            let gram_inv = gram.clone().try_inverse().ok_or_else(|| {
                Error::Numerical("R + B'MB is singular in the Riccati step".into())
            })?;
            q + ama - a.transpose() * &mb * gram_inv * mb.transpose() * a
        }
    };
    Ok(symmetrized(&p_next))
}

/// `M = P + P (g^2 I - P)^{-1} P`, failing when `P` is not strictly below
/// `g^2 I` by the feasibility margin.
pub(crate) fn soft_penalty_weight(p: &Mat, gamma: f64) -> Result<Mat> {
    let n = p.nrows();
    let g2 = gamma * gamma;
    let shifted = Mat::identity(n, n) * (g2 * (1.0 - FEASIBILITY_MARGIN)) - p;
    if shifted.clone().cholesky().is_none() {
        return Err(Error::Infeasible { gamma });
    }
    let inv = (Mat::identity(n, n) * g2 - p)
        .try_inverse()
        .ok_or(Error::Infeasible { gamma })?;
    Ok(symmetrized(&(p + p * inv * p)))
}

/// Shared fixed-point kernel for every Riccati variant in this module.
fn dare_kernel(
    a: &Mat,
    bru: Option<(&Mat, &Mat)>,
    q: &Mat,
    gamma: Option<f64>,
    max_iter: usize,
) -> Result<(Mat, usize)> {
    let mut p = q.clone();
    for k in 1..=max_iter {
        if p.norm() > DIVERGENCE_NORM {
            return match gamma {
                Some(g) => Err(Error::Infeasible { gamma: g }),
                None => Err(Error::NoConvergence { iterations: k }),
            };
        }
        let m = match gamma {
            Some(g) => soft_penalty_weight(&p, g)?,
            None => p.clone(),
        };
        let p_next = dare_step(a, bru, q, &m)?;
        let delta = (&p_next - &p).norm();
        p = p_next;
        if delta <= CONVERGENCE_TOL * (1.0 + p.norm()) {
            // the feasibility margin must also hold at the returned iterate
            if let Some(g) = gamma {
                soft_penalty_weight(&p, g)?;
            }
            return Ok((p, k));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// Residual of the literal blocked adversarial equation at `p`.
fn adversarial_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, gamma: f64, p: &Mat) -> Result<f64> {
    let n = a.nrows();
    let m = b.ncols();
    // [B I]
    let mut bi = Mat::zeros(n, m + n);
    bi.view_mut((0, 0), (n, m)).copy_from(b);
    bi.view_mut((0, m), (n, n)).copy_from(&Mat::identity(n, n));
    // blkdiag(R, -g^2 I)
    let mut weight = Mat::zeros(m + n, m + n);
    weight.view_mut((0, 0), (m, m)).copy_from(r);
    weight
        .view_mut((m, m), (n, n))
        .copy_from(&(Mat::identity(n, n) * (-gamma * gamma)));
    let inner = bi.transpose() * p * &bi + weight;
    let inner_inv = inner
        .try_inverse()
        .ok_or_else(|| Error::Numerical("blocked Riccati pivot is singular".into()))?;
    let rhs =
        q + a.transpose() * p * a - a.transpose() * p * &bi * inner_inv * bi.transpose() * p * a;
    Ok((p - rhs).norm())
}

/// Feedback and adversary gains determined by an adversarial solution `p`.
/// Returns `(M, K, Delta)`.
pub(crate) fn adversarial_gains(
    a: &Mat,
    b: &Mat,
    r: &Mat,
    p: &Mat,
    gamma: f64,
) -> Result<(Mat, Mat, Mat)> {
    let m = soft_penalty_weight(p, gamma)?;
    let gram = r + b.transpose() * &m * b;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("R + B'MB is singular".into()))?;
    let k = -gram_inv * b.transpose() * &m * a;
    let n = p.nrows();
    let inv = (Mat::identity(n, n) * (gamma * gamma) - p)
        .try_inverse()
        .ok_or(Error::Infeasible { gamma })?;
    let delta = symmetrized(&(inv * p));
    Ok((m, k, delta))
}

/// Solve the nominal equation
/// `P = Q + A'PA - A'PB (R + B'PB)^{-1} B'PA`.
pub fn solve_nominal_dare(sys: &LtiSystem) -> Result<RiccatiSolution> {
    let (p, iterations) = dare_kernel(
        sys.a(),
        Some((sys.b(), sys.r())),
        sys.q(),
        None,
        NOMINAL_MAX_ITER,
    )?;
    let m = p.clone();
    let gram = sys.r() + sys.b().transpose() * &m * sys.b();
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("R + B'PB is singular".into()))?;
    let k = -gram_inv * sys.b().transpose() * &m * sys.a();
    let rho_cl = spectral_radius(&(sys.a() + sys.b() * &k))?;
    if rho_cl >= 1.0 {
        return Err(Error::UnstableController { rho: rho_cl });
    }
    let residual = (&p - dare_step(sys.a(), Some((sys.b(), sys.r())), sys.q(), &p)?).norm();
    if residual > RESIDUAL_TOL * (1.0 + p.norm()) {
        return Err(Error::Numerical(format!(
            "nominal DARE residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(RiccatiSolution {
        p,
        residual,
        gamma: None,
        iterations,
    })
}

/// Solve the gamma-adversarial equation and certify the Lemma-1 conditions:
/// `0 <= P < g^2 I` strictly, small residual of the literal blocked form,
/// and a Schur-stable worst-case closed loop `(I + Delta)(A + BK)`.
pub fn solve_adversarial_dare(sys: &LtiSystem, gamma: f64) -> Result<RiccatiSolution> {
    if gamma <= 0.0 {
        return Err(Error::BadBracket("gamma must be positive".into()));
    }
    let (p, iterations) = dare_kernel(
        sys.a(),
        Some((sys.b(), sys.r())),
        sys.q(),
        Some(gamma),
        ADVERSARIAL_MAX_ITER,
    )?;
    let residual = adversarial_residual(sys.a(), sys.b(), sys.q(), sys.r(), gamma, &p)?;
    if residual > RESIDUAL_TOL * (1.0 + p.norm()) {
        return Err(Error::Numerical(format!(
            "adversarial DARE residual {residual:.3e} exceeds tolerance"
        )));
    }
    let (_, k, delta) = adversarial_gains(sys.a(), sys.b(), sys.r(), &p, gamma)?;
    let closed = sys.a() + sys.b() * &k;
    let rho_cl = spectral_radius(&closed)?;
    if rho_cl >= 1.0 {
        return Err(Error::Infeasible { gamma });
    }
    let n = sys.state_dim();
    let worst = (Mat::identity(n, n) + &delta) * &closed;
    let rho_worst = spectral_radius(&worst)?;
    if rho_worst >= 1.0 {
        return Err(Error::Infeasible { gamma });
    }
    Ok(RiccatiSolution {
        p,
        residual,
        gamma: Some(gamma),
        iterations,
    })
}

/// Solve `P = Qcl + Acl' (P + P (g^2 I - P)^{-1} P) Acl` for a fixed stable
/// closed loop (the B = 0 specialization of the adversarial equation). This
/// is the cost of facing the optimal soft-penalized adversary under a frozen
/// controller, and also produces the `P~` matrices of the tradeoff analysis.
pub fn closed_loop_riccati(acl: &Mat, qcl: &Mat, gamma: f64) -> Result<RiccatiSolution> {
    closed_loop_riccati_with(acl, qcl, gamma, CLOSED_LOOP_MAX_ITER)
}

/// As [`closed_loop_riccati`] with an explicit iteration budget; bisection
/// loops use smaller budgets to classify feasibility near the boundary.
pub fn closed_loop_riccati_with(
    acl: &Mat,
    qcl: &Mat,
    gamma: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if gamma <= 0.0 {
        return Err(Error::BadBracket("gamma must be positive".into()));
    }
    let rho = spectral_radius(acl)?;
    if rho >= 1.0 - matops::STABILITY_MARGIN {
        return Err(Error::UnstableMatrix { rho });
    }
    let qcl = check_symmetric(qcl, "closed-loop weight")?;
    if !is_psd(&qcl) {
        return Err(Error::NotPsd("closed-loop weight".into()));
    }
    let (p, iterations) = dare_kernel(acl, None, &qcl, Some(gamma), max_iter)?;
    let m = soft_penalty_weight(&p, gamma)?;
    let residual = (&p - (&qcl + acl.transpose() * &m * acl)).norm();
    if residual > RESIDUAL_TOL * (1.0 + p.norm()) {
        return Err(Error::Numerical(format!(
            "closed-loop Riccati residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(RiccatiSolution {
        p,
        residual,
        gamma: Some(gamma),
        iterations,
    })
}

/// Smallest `gamma` for which the adversarial equation is feasible (the
/// optimal closed-loop H-infinity gain), located by bisection. Feasibility
/// is monotone in `gamma`, so bisection is valid.
///
/// The returned value satisfies: the solve succeeds at `gamma * (1 + 1e-6)`
/// and fails at `gamma * (1 - 1e-6)`.
pub fn gamma_inf(sys: &LtiSystem) -> Result<f64> {
    let p_star = solve_nominal_dare(sys)?;
    // P_gamma >= P_star forces gamma^2 > lmax(P_star) on the feasible side.
    let mut hi = max_symmetric_eigenvalue(&p_star.p).max(0.0).sqrt() * 1.01;
    if hi < 1e-12 {
        hi = 1e-12;
    }
    let mut lo = 0.0_f64;
    while solve_adversarial_dare(sys, hi).is_err() {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::BracketFailure);
        }
    }
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if solve_adversarial_dare(sys, mid).is_ok() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(a: f64, b: f64, q: f64, r: f64) -> LtiSystem {
        LtiSystem::new(
            Mat::from_element(1, 1, a),
            Mat::from_element(1, 1, b),
            Mat::from_element(1, 1, q),
            Mat::from_element(1, 1, r),
            Mat::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    fn static_system(n: usize) -> LtiSystem {
        LtiSystem::new(
            Mat::zeros(n, n),
            Mat::identity(n, n),
            Mat::identity(n, n),
            Mat::identity(n, n),
            Mat::identity(n, n),
        )
        .unwrap()
    }

    #[test]
    fn nominal_dare_zero_dynamics_gives_q() {
        let sys = static_system(2);
        let sol = solve_nominal_dare(&sys).unwrap();
        assert!((sol.p.clone() - Mat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn nominal_dare_scalar_golden_ratio() {
        let sys = scalar_system(1.0, 1.0, 1.0, 1.0);
        let sol = solve_nominal_dare(&sys).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((sol.p[(0, 0)] - phi).abs() < 1e-10);
        assert!(sol.residual <= RESIDUAL_TOL * (1.0 + sol.p.norm()));
    }

    #[test]
    fn adversarial_dare_large_gamma_recovers_nominal() {
        let sys = scalar_system(0.9, 1.0, 1.0, 1.0);
        let nominal = solve_nominal_dare(&sys).unwrap();
        let adv = solve_adversarial_dare(&sys, 1e6).unwrap();
        let rel = (adv.p.clone() - &nominal.p).norm() / nominal.p.norm();
        assert!(rel <= 1e-4, "relative gap {rel}");
    }

    #[test]
    fn adversarial_dare_static_system_feasible_at_two() {
        let sys = static_system(2);
        let sol = solve_adversarial_dare(&sys, 2.0).unwrap();
        assert!((sol.p.clone() - Mat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn adversarial_dare_static_system_infeasible_at_one() {
        let sys = static_system(2);
        assert!(matches!(
            solve_adversarial_dare(&sys, 0.999),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn gamma_inf_static_system_is_one() {
        let sys = static_system(2);
        let g = gamma_inf(&sys).unwrap();
        assert!((g - 1.0).abs() < 1e-6, "gamma_inf {g}");
        assert!(solve_adversarial_dare(&sys, g * (1.0 + 1e-6)).is_ok());
        assert!(solve_adversarial_dare(&sys, g * (1.0 - 1e-6)).is_err());
    }

    #[test]
    fn closed_loop_riccati_static_map() {
        let acl = Mat::zeros(2, 2);
        let qcl = Mat::identity(2, 2) * 2.0;
        let sol = closed_loop_riccati(&acl, &qcl, 2.0).unwrap();
        assert!((sol.p.clone() - &qcl).norm() < 1e-12);
        // infeasible when lmax(Qcl) >= gamma^2
        assert!(closed_loop_riccati(&acl, &qcl, 1.2).is_err());
    }

    #[test]
    fn closed_loop_riccati_large_gamma_is_dlyap() {
        let acl = Mat::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.4]);
        let qcl = Mat::identity(2, 2);
        let sol = closed_loop_riccati(&acl, &qcl, 1e6).unwrap();
        let lyap = matops::dlyap(&acl.transpose(), &qcl).unwrap();
        assert!((sol.p.clone() - &lyap).norm() / lyap.norm() < 1e-4);
    }

    #[test]
    fn closed_loop_riccati_scalar_boundary_fixed_point() {
        // p = 1 + 0.25 (p + p^2 / (4 - p)) has the double root p = 2; gamma
        // here sits exactly at the closed-loop H-infinity norm.
        let acl = Mat::from_element(1, 1, 0.5);
        let qcl = Mat::from_element(1, 1, 1.0);
        let sol = closed_loop_riccati(&acl, &qcl, 2.0).unwrap();
        assert!((sol.p[(0, 0)] - 2.0).abs() < 1e-4, "p = {}", sol.p[(0, 0)]);
    }

    #[test]
    fn rejects_unstabilizable_pair() {
        // x2 is uncontrolled and unstable
        let a = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.5]);
        let b = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let err = LtiSystem::new(
            a,
            b,
            Mat::identity(2, 2),
            Mat::identity(1, 1),
            Mat::identity(2, 2),
        )
        .unwrap_err();
        assert_eq!(err, Error::NotStabilizable);
    }

    #[test]
    fn rejects_undetectable_pair() {
        // unstable mode invisible to Q
        let a = Mat::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.5]);
        let b = Mat::identity(2, 2);
        let q = Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let err = LtiSystem::new(
            a,
            b,
            q,
            Mat::identity(2, 2),
            Mat::identity(2, 2),
        )
        .unwrap_err();
        assert_eq!(err, Error::NotDetectable);
    }

    #[test]
    fn rejects_indefinite_weights() {
        let a = Mat::zeros(2, 2);
        let b = Mat::identity(2, 2);
        let q_bad = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(
            LtiSystem::new(
                a.clone(),
                b.clone(),
                q_bad,
                Mat::identity(2, 2),
                Mat::identity(2, 2)
            ),
            Err(Error::NotPsd(_))
        ));
        let r_bad = Mat::zeros(2, 2);
        assert!(matches!(
            LtiSystem::new(
                a,
                b,
                Mat::identity(2, 2),
                r_bad,
                Mat::identity(2, 2)
            ),
            Err(Error::NotPd(_))
        ));
    }
}

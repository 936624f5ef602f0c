//! Controller and adversary synthesis: nominal LQR, the soft-penalized
//! gamma-adversarial controller, its worst-case adversary and stationary
//! power, and the hard-budget controller found by bisection on gamma.

use crate::matops::{dlyap, is_psd, spectral_radius, symmetrized, Mat};
use crate::riccati::{
    self, adversarial_gains, gamma_inf, solve_adversarial_dare, solve_nominal_dare,
    RiccatiSolution,
};
use crate::{Error, LtiSystem, Result};

/// Default margin for the central suboptimal H-infinity controller,
/// `gamma = gamma_inf * (1 + margin)`.
pub const DEFAULT_HINF_MARGIN: f64 = 1e-3;
/// Default relative tolerance on the achieved adversary power in
/// [`adv_lqr`], `|power - epsilon| <= POWER_REL_TOL * epsilon`.
pub const POWER_REL_TOL: f64 = 1e-6;

/// Reconstruction tolerance for the gain identities below.
const GAIN_RECONSTRUCTION_TOL: f64 = 1e-9;

/// The soft-penalized adversarially robust controller at level `gamma`:
/// the Riccati solution `P`, the weight `M = P + P(g^2 I - P)^{-1}P`, the
/// feedback gain `K = -(R + B'MB)^{-1} B'MA`, and the adversary gain
/// `Delta = (g^2 I - P)^{-1} P` that maps `(A+BK)x_t + w_t` to the
/// worst-case perturbation.
#[derive(Debug, Clone)]
pub struct AdvController {
    pub gamma: f64,
    pub p: Mat,
    pub m: Mat,
    pub k: Mat,
    pub delta: Mat,
}

impl AdvController {
    /// Assemble the gains from a solved adversarial Riccati equation and
    /// verify the defining identities and both stability conditions.
    pub fn from_solution(sys: &LtiSystem, gamma: f64, sol: &RiccatiSolution) -> Result<Self> {
        let (m, k, delta) = adversarial_gains(sys.a(), sys.b(), sys.r(), &sol.p, gamma)?;
        let n = sys.state_dim();
        let g2 = gamma * gamma;
        let inv = (Mat::identity(n, n) * g2 - &sol.p)
            .try_inverse()
            .ok_or(Error::Infeasible { gamma })?;
        let m_rec = &sol.p + &sol.p * &inv * &sol.p;
        if (&m - m_rec).norm() > GAIN_RECONSTRUCTION_TOL * (1.0 + m.norm()) {
            return Err(Error::Numerical("M reconstruction drifted".into()));
        }
        let delta_rec = inv * &sol.p;
        if (&delta - symmetrized(&delta_rec)).norm()
            > GAIN_RECONSTRUCTION_TOL * (1.0 + delta.norm())
        {
            return Err(Error::Numerical("Delta reconstruction drifted".into()));
        }
        if !is_psd(&delta) {
            return Err(Error::NotPsd("adversary gain Delta".into()));
        }
        let closed = sys.a() + sys.b() * &k;
        let rho_cl = spectral_radius(&closed)?;
        if rho_cl >= 1.0 {
            return Err(Error::UnstableController { rho: rho_cl });
        }
        let rho_worst = spectral_radius(&((Mat::identity(n, n) + &delta) * &closed))?;
        if rho_worst >= 1.0 {
            return Err(Error::Infeasible { gamma });
        }
        Ok(Self {
            gamma,
            p: sol.p.clone(),
            m,
            k,
            delta,
        })
    }

    /// Closed loop `A + BK`.
    pub fn closed_loop(&self, sys: &LtiSystem) -> Mat {
        sys.a() + sys.b() * &self.k
    }

    /// Worst-case closed loop `(I + Delta)(A + BK)`.
    pub fn worst_case_loop(&self, sys: &LtiSystem) -> Mat {
        let n = sys.state_dim();
        (Mat::identity(n, n) + &self.delta) * self.closed_loop(sys)
    }

    /// Value of the soft-constrained objective, `trace(M Sigma_w)`.
    pub fn soft_cost(&self, sys: &LtiSystem) -> f64 {
        (&self.m * sys.sigma_w()).trace()
    }
}

/// Nominal LQR gain `K = -(R + B'PB)^{-1} B'PA` and the DARE solution
/// behind it.
pub fn lqr_gain(sys: &LtiSystem) -> Result<(Mat, RiccatiSolution)> {
    let sol = solve_nominal_dare(sys)?;
    let gram = sys.r() + sys.b().transpose() * &sol.p * sys.b();
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("R + B'PB is singular".into()))?;
    let k = -gram_inv * sys.b().transpose() * &sol.p * sys.a();
    Ok((k, sol))
}

/// Soft-penalized adversarially robust controller at level `gamma`.
/// Fails with [`Error::Infeasible`] for `gamma <= gamma_inf`.
pub fn adv_controller(sys: &LtiSystem, gamma: f64) -> Result<AdvController> {
    let sol = solve_adversarial_dare(sys, gamma)?;
    AdvController::from_solution(sys, gamma, &sol)
}

/// Which expression evaluates the stationary adversary power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerFormula {
    /// From the stationary state covariance of the worst-case loop:
    /// `X = dlyap((I+D)(A+BK), (I+D) Sigma_w (I+D))`,
    /// `power = trace(D(A+BK) X (A+BK)'D) + trace(D Sigma_w D)`.
    /// Follows from `d_t = D((A+BK)x_t + w_t)` and is what Monte Carlo
    /// rollouts estimate; this is the form used everywhere by default.
    StationaryCovariance,
    /// The literal Lyapunov-trace expression
    /// `G = dlyap((A+BK)'D, D Sigma_w D)`,
    /// `power = trace(G (A+BK)'(I+D)^2 (A+BK) + D Sigma_w D)`,
    /// kept for cross-checking against the covariance form.
    LyapunovTrace,
}

/// Stationary adversary power `lim E[d_t' d_t]` using the default
/// covariance-based formula.
pub fn adversary_power(sys: &LtiSystem, ctrl: &AdvController) -> Result<f64> {
    adversary_power_with(sys, ctrl, PowerFormula::StationaryCovariance)
}

/// Stationary adversary power with an explicit formula choice.
pub fn adversary_power_with(
    sys: &LtiSystem,
    ctrl: &AdvController,
    formula: PowerFormula,
) -> Result<f64> {
    let n = sys.state_dim();
    let eye = Mat::identity(n, n);
    let closed = ctrl.closed_loop(sys);
    let amplifier = &eye + &ctrl.delta;
    let worst = &amplifier * &closed;
    let rho = spectral_radius(&worst)?;
    if rho >= 1.0 {
        return Err(Error::UnstableMatrix { rho });
    }
    let d_sig_d = &ctrl.delta * sys.sigma_w() * &ctrl.delta;
    match formula {
        PowerFormula::StationaryCovariance => {
            let noise_in = &amplifier * sys.sigma_w() * &amplifier;
            let state_cov = dlyap(&worst, &noise_in)?;
            let through_state =
                &ctrl.delta * &closed * state_cov * closed.transpose() * &ctrl.delta;
            Ok(through_state.trace() + d_sig_d.trace())
        }
        PowerFormula::LyapunovTrace => {
            let g = dlyap(&(closed.transpose() * &ctrl.delta), &d_sig_d)?;
            let amp_sq = &amplifier * &amplifier;
            Ok((g * closed.transpose() * amp_sq * &closed + d_sig_d).trace())
        }
    }
}

/// Output of the hard-budget synthesis: the controller at the optimal dual
/// level `gamma_star`, the achieved stationary adversary power, and the
/// optimal adversarial cost `trace(M Sigma_w) + gamma_star^2 epsilon`.
#[derive(Debug, Clone)]
pub struct HardBudgetSolution {
    pub controller: AdvController,
    pub epsilon: f64,
    pub gamma_star: f64,
    pub adversary_power: f64,
    pub optimal_cost: f64,
}

/// Adversary power at `gamma`, mapping near-boundary solver failures
/// (infeasible / non-converged / unstable worst-case loop) to infinity:
/// the power diverges as `gamma` approaches `gamma_inf` from above.
fn power_or_infinite(sys: &LtiSystem, gamma: f64) -> Result<(Option<AdvController>, f64)> {
    match adv_controller(sys, gamma) {
        Ok(ctrl) => {
            let power = adversary_power(sys, &ctrl)?;
            Ok((Some(ctrl), power))
        }
        Err(Error::Infeasible { .. })
        | Err(Error::NoConvergence { .. })
        | Err(Error::UnstableMatrix { .. }) => Ok((None, f64::INFINITY)),
        Err(e) => Err(e),
    }
}

/// Hard-budget adversarially robust synthesis: bisect `gamma` in
/// `[gamma_lb, gamma_ub]` until the stationary adversary power meets the
/// budget `epsilon`. Power is strictly decreasing in `gamma`, which makes
/// the bisection well posed; the bracket is validated up front.
pub fn adv_lqr(
    sys: &LtiSystem,
    epsilon: f64,
    gamma_lb: f64,
    gamma_ub: f64,
    tol: f64,
) -> Result<HardBudgetSolution> {
    if epsilon <= 0.0 {
        return Err(Error::BadBracket("epsilon must be positive".into()));
    }
    if !(gamma_lb < gamma_ub) || gamma_lb <= 0.0 {
        return Err(Error::BadBracket(format!(
            "need 0 < gamma_lb < gamma_ub, got [{gamma_lb}, {gamma_ub}]"
        )));
    }
    if tol <= 0.0 {
        return Err(Error::BadBracket("tol must be positive".into()));
    }
    let (_, power_ub) = power_or_infinite(sys, gamma_ub)?;
    if power_ub >= epsilon {
        return Err(Error::BadBracket(format!(
            "adversary power {power_ub} at gamma_ub is not below epsilon {epsilon}"
        )));
    }
    let (_, power_lb) = power_or_infinite(sys, gamma_lb)?;
    if power_lb <= epsilon {
        return Err(Error::BadBracket(format!(
            "adversary power {power_lb} at gamma_lb is not above epsilon {epsilon}"
        )));
    }

    let power_tol = POWER_REL_TOL * epsilon;
    let mut lo = gamma_lb;
    let mut hi = gamma_ub;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let (ctrl, power) = power_or_infinite(sys, mid)?;
        if power > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        let width_done = hi - lo < tol;
        let power_done = (power - epsilon).abs() <= power_tol;
        if width_done && power_done {
            let controller = ctrl.expect("finite power implies a controller");
            let optimal_cost = controller.soft_cost(sys) + mid * mid * epsilon;
            return Ok(HardBudgetSolution {
                controller,
                epsilon,
                gamma_star: mid,
                adversary_power: power,
                optimal_cost,
            });
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Err(Error::NoConvergence { iterations: 300 });
        }
    }
    Err(Error::NoConvergence { iterations: 300 })
}

/// [`adv_lqr`] with the default bracket: `gamma_lb = gamma_inf (1 + 1e-6)`,
/// `gamma_ub` found by doubling until the power drops below `epsilon`, and
/// `tol = 1e-8 gamma_ub`.
pub fn adv_lqr_auto(sys: &LtiSystem, epsilon: f64) -> Result<HardBudgetSolution> {
    if epsilon <= 0.0 {
        return Err(Error::BadBracket("epsilon must be positive".into()));
    }
    let g_inf = gamma_inf(sys)?;
    let gamma_lb = g_inf * (1.0 + 1e-6);
    let mut gamma_ub = gamma_lb * 2.0;
    loop {
        let (_, power) = power_or_infinite(sys, gamma_ub)?;
        if power < epsilon {
            break;
        }
        gamma_ub *= 2.0;
        if gamma_ub > 1e9 {
            return Err(Error::BracketFailure);
        }
    }
    adv_lqr(sys, epsilon, gamma_lb, gamma_ub, 1e-8 * gamma_ub)
}

/// Central suboptimal H-infinity controller at `gamma_inf * (1 + margin)`.
pub fn h_inf_controller(sys: &LtiSystem, margin: f64) -> Result<AdvController> {
    if margin <= 0.0 {
        return Err(Error::BadBracket("margin must be positive".into()));
    }
    let g_inf = riccati::gamma_inf(sys)?;
    adv_controller(sys, g_inf * (1.0 + margin))
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn lqr_zero_dynamics_gives_zero_gain() {
        let sys = static_system(2);
        let (k, _) = lqr_gain(&sys).unwrap();
        assert!(k.norm() < 1e-14);
    }

    #[test]
    fn lqr_scalar_golden_ratio_gain() {
        let sys = scalar_system(1.0, 1.0, 1.0, 1.0);
        let (k, _) = lqr_gain(&sys).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((k[(0, 0)] + phi / (1.0 + phi)).abs() < 1e-10);
    }

    #[test]
    fn lqr_stabilizes_the_integrator() {
        let sys = crate::presets::integrator(1.0).unwrap();
        let (k, _) = lqr_gain(&sys).unwrap();
        let rho = spectral_radius(&(sys.a() + sys.b() * &k)).unwrap();
        assert!(rho < 1.0, "closed-loop spectral radius {rho}");
    }

    #[test]
    fn adv_controller_large_gamma_matches_lqr() {
        let sys = scalar_system(0.9, 1.0, 1.0, 1.0);
        let (k_star, _) = lqr_gain(&sys).unwrap();
        let ctrl = adv_controller(&sys, 1e6).unwrap();
        assert!((ctrl.k.clone() - k_star).norm() <= 1e-4);
    }

    #[test]
    fn adv_controller_static_system_hand_values() {
        // A = 0, B = Q = R = I, gamma = 2: P = I, M = 4/3 I, K = 0, D = I/3
        let sys = static_system(2);
        let ctrl = adv_controller(&sys, 2.0).unwrap();
        assert!((ctrl.p.clone() - Mat::identity(2, 2)).norm() < 1e-10);
        assert!((ctrl.m.clone() - Mat::identity(2, 2) * (4.0 / 3.0)).norm() < 1e-10);
        assert!(ctrl.k.norm() < 1e-10);
        assert!((ctrl.delta.clone() - Mat::identity(2, 2) / 3.0).norm() < 1e-10);
    }

    #[test]
    fn adversary_power_vanishes_at_large_gamma() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0);
        let ctrl = adv_controller(&sys, 1e6).unwrap();
        let power = adversary_power(&sys, &ctrl).unwrap();
        assert!(power < 1e-10, "power {power}");
    }

    #[test]
    fn adversary_power_static_system_is_n_ninths() {
        let sys = static_system(2);
        let ctrl = adv_controller(&sys, 2.0).unwrap();
        let power = adversary_power(&sys, &ctrl).unwrap();
        assert!((power - 2.0 / 9.0).abs() < 1e-12, "power {power}");
    }

    #[test]
    fn adv_lqr_inverts_static_power_curve() {
        // power(gamma) = n / (gamma^2 - 1)^2, so epsilon = n/9 gives
        // gamma_star = 2.
        let sys = static_system(2);
        let sol = adv_lqr_auto(&sys, 2.0 / 9.0).unwrap();
        assert!(
            (sol.gamma_star - 2.0).abs() < 1e-6,
            "gamma {}",
            sol.gamma_star
        );
        assert!((sol.adversary_power - 2.0 / 9.0).abs() <= 1e-6 * (2.0 / 9.0));
        let cost_rec = sol.controller.soft_cost(&sys) + sol.gamma_star.powi(2) * sol.epsilon;
        assert!((sol.optimal_cost - cost_rec).abs() < 1e-9 * (1.0 + cost_rec.abs()));
    }

    #[test]
    fn adv_lqr_vanishing_budget_recovers_lqr() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0);
        let (k_star, p_star) = lqr_gain(&sys).unwrap();
        let sol = adv_lqr_auto(&sys, 1e-8).unwrap();
        assert!((sol.controller.k.clone() - k_star).norm() < 1e-3);
        let expected =
            (&p_star.p * sys.sigma_w()).trace() + sol.gamma_star.powi(2) * sol.epsilon;
        assert!((sol.optimal_cost - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn adv_lqr_rejects_bad_brackets() {
        let sys = static_system(2);
        // power at gamma_lb already below epsilon
        assert!(matches!(
            adv_lqr(&sys, 1e6, 1.5, 3.0, 1e-8),
            Err(Error::BadBracket(_))
        ));
        // power at gamma_ub still above epsilon
        assert!(matches!(
            adv_lqr(&sys, 1e-12, 1.5, 3.0, 1e-8),
            Err(Error::BadBracket(_))
        ));
    }

    #[test]
    fn h_inf_controller_large_margin_matches_lqr() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0);
        let (k_star, _) = lqr_gain(&sys).unwrap();
        let ctrl = h_inf_controller(&sys, 1e6).unwrap();
        assert!((ctrl.k.clone() - k_star).norm() <= 1e-3);
    }

    #[test]
    fn h_inf_controller_tight_margin_is_stable() {
        let sys = crate::presets::boeing747().unwrap();
        let ctrl = h_inf_controller(&sys, 1e-3).unwrap();
        let rho = spectral_radius(&ctrl.closed_loop(&sys)).unwrap();
        assert!(rho < 1.0);
    }
}

//! Cost evaluation and closed-loop simulation for arbitrary stabilizing
//! gains: the nominal cost NC, the worst-case (energy-budgeted) robust cost
//! RC, the mixed stochastic/adversarial cost AC, and seeded trajectory
//! rollouts under the three disturbance models of the experiments.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::matops::{
    dlyap, max_symmetric_eigenvalue, spectral_radius, sqrt_psd, symmetrized, Mat,
};
use crate::riccati::{closed_loop_riccati_with, soft_penalty_weight};
use crate::{Error, LtiSystem, Result};

/// Relative tolerance of the closed-loop H-infinity norm bisection.
pub const HINF_BISECTION_REL_TOL: f64 = 1e-8;
/// Iteration budget per feasibility probe during boundary bisections.
const BOUNDARY_PROBE_MAX_ITER: usize = 300_000;
/// Relative tolerance on the achieved adversary power in [`adversarial_cost`].
const POWER_REL_TOL: f64 = 1e-6;
/// State norms beyond this mark a rollout as diverged.
const DIVERGENCE_NORM: f64 = 1e9;

/// Disturbance processes driving the simulations.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceKind {
    /// i.i.d. zero-mean Gaussian with the model covariance.
    Gaussian,
    /// Gaussian with slowly oscillating mean
    /// `amplitude * sin(frequency * t)` applied to every coordinate.
    VaryingMeanGaussian { amplitude: f64, frequency: f64 },
    /// Gaussian noise plus the worst-case adversary at budget `epsilon`;
    /// the adversary gain itself is passed separately to [`simulate`]
    /// because it depends on the controller under evaluation.
    AdversarialPlusGaussian { epsilon: f64 },
}

/// A seeded disturbance model. Draws are reproducible: the same
/// `(kind, covariance, seed)` produce bit-identical sequences.
#[derive(Debug, Clone)]
pub struct DisturbanceModel {
    pub kind: DisturbanceKind,
    pub covariance: Mat,
    pub seed: u64,
}

impl DisturbanceModel {
    pub fn gaussian(covariance: Mat, seed: u64) -> Self {
        Self {
            kind: DisturbanceKind::Gaussian,
            covariance,
            seed,
        }
    }

    /// Same model with a different stream seed; used for per-trial seeding
    /// `seed = base_seed + trial_index`.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            kind: self.kind.clone(),
            covariance: self.covariance.clone(),
            seed,
        }
    }
}

/// A closed-loop rollout. `states` has `horizon + 1` entries; `inputs`,
/// `disturbances` (the total disturbance `w_t + d_t` entering the state
/// update) and `running_avg_cost` have `horizon` entries, with
/// `running_avg_cost[t] = (1/(t+1)) sum_{k<=t} x_k'Q x_k + u_k'R u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub horizon: usize,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub disturbances: Vec<DVector<f64>>,
    pub running_avg_cost: Vec<f64>,
    /// Set when some `||x_t||` exceeded 1e9; the rollout still completes.
    pub diverged: bool,
}

/// Simulate `x_{t+1} = A x_t + B u_t + w_t + d_t` with `u_t = K x_t`,
/// `x_0 ~ N(0, Sigma_0)`, and, when `adversary` is given, the causal
/// worst-case perturbation `d_t = Delta((A+BK) x_t + w_t)`.
pub fn simulate(
    sys: &LtiSystem,
    k: &Mat,
    model: &DisturbanceModel,
    horizon: usize,
    adversary: Option<&Mat>,
) -> Result<SimulationTrace> {
    let n = sys.state_dim();
    let m = sys.input_dim();
    if horizon < 1 {
        return Err(Error::DimensionMismatch("horizon must be >= 1".into()));
    }
    if k.nrows() != m || k.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "gain must be {m}x{n}, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    if model.covariance.nrows() != n || model.covariance.ncols() != n {
        return Err(Error::DimensionMismatch("covariance must be n x n".into()));
    }
    if let Some(delta) = adversary {
        if delta.nrows() != n || delta.ncols() != n {
            return Err(Error::DimensionMismatch("adversary gain must be n x n".into()));
        }
    }

    let noise_factor = sqrt_psd(&model.covariance)?;
    let init_factor = sqrt_psd(sys.sigma_0())?;
    let closed = sys.a() + sys.b() * k;
    let mut rng = ChaCha12Rng::seed_from_u64(model.seed);

    let mut standard_normal = |rng: &mut ChaCha12Rng| {
        DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
    };

    let mut x = &init_factor * standard_normal(&mut rng);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs = Vec::with_capacity(horizon);
    let mut disturbances = Vec::with_capacity(horizon);
    let mut running_avg_cost = Vec::with_capacity(horizon);
    let mut cost_sum = 0.0;
    let mut diverged = false;

    states.push(x.clone());
    for t in 0..horizon {
        let u = k * &x;
        let mut w = &noise_factor * standard_normal(&mut rng);
        if let DisturbanceKind::VaryingMeanGaussian {
            amplitude,
            frequency,
        } = model.kind
        {
            let mean = amplitude * (frequency * t as f64).sin();
            w.add_scalar_mut(mean);
        }
        let total = match adversary {
            Some(delta) => {
                let driven = &closed * &x + &w;
                &w + delta * driven
            }
            None => w,
        };
        cost_sum += (x.transpose() * sys.q() * &x)[(0, 0)] + (u.transpose() * sys.r() * &u)[(0, 0)];
        running_avg_cost.push(cost_sum / (t + 1) as f64);

        x = sys.a() * &x + sys.b() * &u + &total;
        if x.norm() > DIVERGENCE_NORM {
            diverged = true;
        }
        inputs.push(u);
        disturbances.push(total);
        states.push(x.clone());
    }

    Ok(SimulationTrace {
        horizon,
        states,
        inputs,
        disturbances,
        running_avg_cost,
        diverged,
    })
}

/// Write a trace as RFC-4180 CSV with header
/// `t,x_1..x_n,u_1..u_m,w_1..w_n,running_avg_cost` and floats printed with
/// 17 significant digits.
pub fn write_trace_csv<W: std::io::Write>(trace: &SimulationTrace, out: &mut W) -> std::io::Result<()> {
    let n = trace.states[0].len();
    let m = trace.inputs.first().map_or(0, |u| u.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=n).map(|i| format!("w_{i}")));
    header.push("running_avg_cost".to_string());
    writeln!(out, "{}", header.join(","))?;
    for t in 0..trace.horizon {
        let mut row = vec![t.to_string()];
        row.extend(trace.states[t].iter().map(|v| format!("{v:.16e}")));
        row.extend(trace.inputs[t].iter().map(|v| format!("{v:.16e}")));
        row.extend(trace.disturbances[t].iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", trace.running_avg_cost[t]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Nominal cost `NC(K) = trace(dlyap((A+BK)', Q + K'RK) Sigma_w)`; equals
/// `trace(P_star Sigma_w)` at the LQR gain.
pub fn nominal_cost(sys: &LtiSystem, k: &Mat) -> Result<f64> {
    let closed = sys.a() + sys.b() * k;
    let rho = spectral_radius(&closed)?;
    if rho >= 1.0 {
        return Err(Error::UnstableController { rho });
    }
    let qcl = symmetrized(&(sys.q() + k.transpose() * sys.r() * k));
    let cost_to_go = dlyap(&closed.transpose(), &qcl)?;
    Ok((cost_to_go * sys.sigma_w()).trace())
}

/// Closed-loop H-infinity norm of the map from disturbance to the weighted
/// state `Qcl^{1/2} x`, located as the feasibility boundary of the
/// closed-loop Riccati equation (bounded-real characterization).
pub fn closed_loop_hinf_norm(acl: &Mat, qcl: &Mat) -> Result<f64> {
    let rho = spectral_radius(acl)?;
    if rho >= 1.0 {
        return Err(Error::UnstableController { rho });
    }
    let feasible = |gamma: f64| -> bool {
        closed_loop_riccati_with(acl, qcl, gamma, BOUNDARY_PROBE_MAX_ITER).is_ok()
    };
    // Any feasible gamma^2 exceeds lmax(P) >= lmax(dlyap(Acl', Qcl)).
    let floor = dlyap(&acl.transpose(), qcl)?;
    let mut hi = max_symmetric_eigenvalue(&floor).max(0.0).sqrt() * 1.01;
    if hi < 1e-12 {
        hi = 1e-12;
    }
    let mut lo = 0.0_f64;
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::BracketFailure);
        }
    }
    while hi - lo > HINF_BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Robust cost `RC(K) = epsilon * gamma_cl(K)^2`: the worst case of the
/// time-averaged quadratic cost over disturbances of energy `T epsilon`
/// reduces to the squared closed-loop H-infinity norm scaled by the budget.
pub fn robust_cost(sys: &LtiSystem, k: &Mat, epsilon: f64) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(Error::BadBracket("epsilon must be nonnegative".into()));
    }
    let closed = sys.a() + sys.b() * k;
    let rho = spectral_radius(&closed)?;
    if rho >= 1.0 {
        return Err(Error::UnstableController { rho });
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let qcl = symmetrized(&(sys.q() + k.transpose() * sys.r() * k));
    let gamma_cl = closed_loop_hinf_norm(&closed, &qcl)?;
    Ok(epsilon * gamma_cl * gamma_cl)
}

/// The worst-case adversary against a frozen closed loop at level `gamma`.
struct ClosedLoopAdversary {
    p: Mat,
    m: Mat,
    delta: Mat,
}

fn closed_loop_adversary(acl: &Mat, qcl: &Mat, gamma: f64) -> Result<ClosedLoopAdversary> {
    let sol = closed_loop_riccati_with(acl, qcl, gamma, BOUNDARY_PROBE_MAX_ITER)?;
    let n = acl.nrows();
    let inv = (Mat::identity(n, n) * (gamma * gamma) - &sol.p)
        .try_inverse()
        .ok_or(Error::Infeasible { gamma })?;
    let delta = symmetrized(&(inv * &sol.p));
    let m = soft_penalty_weight(&sol.p, gamma)?;
    Ok(ClosedLoopAdversary { p: sol.p, m, delta })
}

/// Stationary power of the closed-loop adversary, infinite when the
/// worst-case loop is not strictly stable.
fn closed_loop_power(acl: &Mat, sigma_w: &Mat, adv: &ClosedLoopAdversary) -> Result<f64> {
    let n = acl.nrows();
    let amplifier = Mat::identity(n, n) + &adv.delta;
    let worst = &amplifier * acl;
    let rho = spectral_radius(&worst)?;
    if rho >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let state_cov = dlyap(&worst, &(&amplifier * sigma_w * &amplifier))?;
    let through_state = &adv.delta * acl * state_cov * acl.transpose() * &adv.delta;
    Ok(through_state.trace() + (&adv.delta * sigma_w * &adv.delta).trace())
}

/// Adversarial cost `AC(K)` at budget `epsilon` for an arbitrary stabilizing
/// gain, with the dual level `gamma_star` that attains it. Runs the
/// hard-budget bisection on the closed-loop system (input channel removed):
/// `AC = trace(M Sigma_w) + gamma_star^2 epsilon` at the level where the
/// stationary adversary power meets `epsilon`.
pub fn adversarial_cost(sys: &LtiSystem, k: &Mat, epsilon: f64) -> Result<(f64, f64)> {
    if epsilon <= 0.0 {
        return Err(Error::BadBracket("epsilon must be positive".into()));
    }
    let closed = sys.a() + sys.b() * k;
    let rho = spectral_radius(&closed)?;
    if rho >= 1.0 {
        return Err(Error::UnstableController { rho });
    }
    let qcl = symmetrized(&(sys.q() + k.transpose() * sys.r() * k));

    let power_at = |gamma: f64| -> Result<f64> {
        match closed_loop_adversary(&closed, &qcl, gamma) {
            Ok(adv) => closed_loop_power(&closed, sys.sigma_w(), &adv),
            Err(Error::Infeasible { .. })
            | Err(Error::NoConvergence { .. })
            | Err(Error::UnstableMatrix { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let gamma_cl = closed_loop_hinf_norm(&closed, &qcl)?;
    let mut lo = gamma_cl * (1.0 + 1e-6);
    let mut hi = lo.max(1e-12) * 2.0;
    while power_at(hi)? >= epsilon {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::BracketFailure);
        }
    }
    if power_at(lo)? <= epsilon {
        // budget exceeds what the adversary can extract near the boundary
        return Err(Error::BadBracket(format!(
            "adversary power at the feasibility boundary is below epsilon {epsilon}"
        )));
    }

    let tol = 1e-8 * hi;
    let power_tol = POWER_REL_TOL * epsilon;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let power = power_at(mid)?;
        if power > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol && (power - epsilon).abs() <= power_tol {
            let adv = closed_loop_adversary(&closed, &qcl, mid)?;
            let ac = (&adv.m * sys.sigma_w()).trace() + mid * mid * epsilon;
            return Ok((ac, mid));
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Err(Error::NoConvergence { iterations: 300 });
        }
    }
    Err(Error::NoConvergence { iterations: 300 })
}

/// The worst-case adversary gain for a frozen controller at budget
/// `epsilon`, for driving adversarial simulations: returns
/// `(Delta, gamma_star)` from the same bisection as [`adversarial_cost`].
pub fn adversarial_gain_for(sys: &LtiSystem, k: &Mat, epsilon: f64) -> Result<(Mat, f64)> {
    let (_, gamma_star) = adversarial_cost(sys, k, epsilon)?;
    let closed = sys.a() + sys.b() * k;
    let qcl = symmetrized(&(sys.q() + k.transpose() * sys.r() * k));
    let adv = closed_loop_adversary(&closed, &qcl, gamma_star)?;
    Ok((adv.delta, gamma_star))
}

/// Aggregated nominal / robust / adversarial costs of one gain.
#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub nc: f64,
    pub rc: f64,
    pub ac: f64,
    pub gamma_star_ac: f64,
    pub details: CostDetails,
}

/// Solver metadata behind a [`CostReport`].
#[derive(Debug, Clone, Serialize)]
pub struct CostDetails {
    pub epsilon: f64,
    /// Closed-loop H-infinity norm of `(A+BK, Q+K'RK)`.
    pub gamma_cl: f64,
}

/// Evaluate NC, RC, AC at budget `epsilon` for one gain.
pub fn cost_report(sys: &LtiSystem, k: &Mat, epsilon: f64) -> Result<CostReport> {
    let nc = nominal_cost(sys, k)?;
    let closed = sys.a() + sys.b() * k;
    let qcl = symmetrized(&(sys.q() + k.transpose() * sys.r() * k));
    let gamma_cl = closed_loop_hinf_norm(&closed, &qcl)?;
    let rc = epsilon * gamma_cl * gamma_cl;
    let (ac, gamma_star_ac) = adversarial_cost(sys, k, epsilon)?;
    if nc > ac + 1e-9 * (1.0 + ac.abs()) {
        return Err(Error::Numerical(format!(
            "nc = {nc} exceeds ac = {ac}; the adversary can always play zero"
        )));
    }
    Ok(CostReport {
        nc,
        rc,
        ac,
        gamma_star_ac,
        details: CostDetails { epsilon, gamma_cl },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::lqr_gain;

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

    fn scalar_system(a: f64) -> LtiSystem {
        LtiSystem::new(
            Mat::from_element(1, 1, a),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn nominal_cost_zero_noise_is_zero() {
        let sys = LtiSystem::new(
            Mat::from_element(1, 1, 0.5),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let k = Mat::zeros(1, 1);
        assert_eq!(nominal_cost(&sys, &k).unwrap(), 0.0);
    }

    #[test]
    fn nominal_cost_scalar_open_loop() {
        // a = 0.5, K = 0: dlyap gives 4/3
        let sys = scalar_system(0.5);
        let k = Mat::zeros(1, 1);
        assert!((nominal_cost(&sys, &k).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nominal_cost_at_lqr_gain_is_trace_p_sigma() {
        let sys = crate::presets::boeing747().unwrap();
        let (k, sol) = lqr_gain(&sys).unwrap();
        let nc = nominal_cost(&sys, &k).unwrap();
        let expected = (&sol.p * sys.sigma_w()).trace();
        assert!((nc - expected).abs() <= 1e-8 * (1.0 + expected.abs()));
    }

    #[test]
    fn nominal_cost_rejects_unstable_gain() {
        let sys = scalar_system(0.5);
        let k = Mat::from_element(1, 1, 1.0); // a + bk = 1.5
        assert!(matches!(
            nominal_cost(&sys, &k),
            Err(Error::UnstableController { .. })
        ));
    }

    #[test]
    fn robust_cost_static_map_is_epsilon() {
        // A = 0, K = 0: gamma_cl = 1, RC = epsilon
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let rc = robust_cost(&sys, &k, 0.3).unwrap();
        assert!((rc - 0.3).abs() < 1e-6, "rc {rc}");
        assert_eq!(robust_cost(&sys, &k, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hinf_norm_scalar_half() {
        // sup_w |1 / (e^{iw} - 0.5)|^2 = 4 at w = 0
        let acl = Mat::from_element(1, 1, 0.5);
        let qcl = Mat::from_element(1, 1, 1.0);
        let g = closed_loop_hinf_norm(&acl, &qcl).unwrap();
        assert!((g - 2.0).abs() < 1e-6, "gamma_cl {g}");
    }

    #[test]
    fn adversarial_cost_static_closed_form() {
        // A_cl = 0: power = n/(gamma^2-1)^2; at epsilon = n/9 the optimum is
        // gamma = 2 and AC = (4/3) n + 4 n / 9 = 16n/9.
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let n = 2.0;
        let (ac, gamma_star) = adversarial_cost(&sys, &k, n / 9.0).unwrap();
        assert!((gamma_star - 2.0).abs() < 1e-6, "gamma {gamma_star}");
        assert!((ac - 16.0 * n / 9.0).abs() < 1e-6, "ac {ac}");
    }

    #[test]
    fn adversarial_cost_collapses_to_nominal_at_tiny_budget() {
        let sys = scalar_system(0.5);
        let k = Mat::from_element(1, 1, -0.2);
        let nc = nominal_cost(&sys, &k).unwrap();
        let (ac, _) = adversarial_cost(&sys, &k, 1e-10).unwrap();
        assert!((ac - nc).abs() < 1e-4, "ac {ac} vs nc {nc}");
    }

    #[test]
    fn simulate_zero_noise_zero_state_is_identically_zero() {
        let sys = LtiSystem::new(
            Mat::from_element(1, 1, 0.5),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let k = Mat::zeros(1, 1);
        let model = DisturbanceModel::gaussian(Mat::zeros(1, 1), 7);
        let trace = simulate(&sys, &k, &model, 50, None).unwrap();
        assert!(trace.states.iter().all(|x| x.norm() == 0.0));
        assert!(trace.running_avg_cost.iter().all(|&c| c == 0.0));
        assert!(!trace.diverged);
    }

    #[test]
    fn simulate_is_reproducible_and_seed_sensitive() {
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let model = DisturbanceModel::gaussian(Mat::identity(2, 2), 42);
        let t1 = simulate(&sys, &k, &model, 100, None).unwrap();
        let t2 = simulate(&sys, &k, &model, 100, None).unwrap();
        assert_eq!(t1, t2);
        let t3 = simulate(&sys, &k, &model.with_seed(43), 100, None).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn simulate_running_cost_is_recomputable() {
        let sys = crate::presets::integrator(1.0).unwrap();
        let (k, _) = lqr_gain(&sys).unwrap();
        let model = DisturbanceModel::gaussian(Mat::identity(2, 2), 5);
        let trace = simulate(&sys, &k, &model, 200, None).unwrap();
        let mut sum = 0.0;
        for t in 0..trace.horizon {
            let x = &trace.states[t];
            let u = &trace.inputs[t];
            sum += (x.transpose() * sys.q() * x)[(0, 0)] + (u.transpose() * sys.r() * u)[(0, 0)];
            let avg = sum / (t + 1) as f64;
            assert!((avg - trace.running_avg_cost[t]).abs() <= 1e-9 * (1.0 + avg.abs()));
        }
        // states replay from the recorded inputs and disturbances
        for t in 0..trace.horizon {
            let expected =
                sys.a() * &trace.states[t] + sys.b() * &trace.inputs[t] + &trace.disturbances[t];
            assert!((&trace.states[t + 1] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_draws_match_covariance_statistically() {
        let cov = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let model = DisturbanceModel::gaussian(cov.clone(), 1234);
        let n_samples = 100_000;
        let trace = simulate(&sys, &k, &model, n_samples, None).unwrap();
        let mut sample_cov = Mat::zeros(2, 2);
        for w in &trace.disturbances {
            sample_cov += w * w.transpose();
        }
        sample_cov /= n_samples as f64;
        for i in 0..2 {
            for j in 0..2 {
                let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2))
                    / n_samples as f64)
                    .sqrt();
                let err = (sample_cov[(i, j)] - cov[(i, j)]).abs();
                assert!(err <= 3.0 * se, "cov[{i}{j}] off by {err} (3se = {}) ", 3.0 * se);
            }
        }
    }

    #[test]
    fn varying_mean_shifts_every_coordinate() {
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let model = DisturbanceModel {
            kind: DisturbanceKind::VaryingMeanGaussian {
                amplitude: 5.0,
                frequency: 0.01,
            },
            covariance: Mat::zeros(2, 2),
            seed: 0,
        };
        let trace = simulate(&sys, &k, &model, 200, None).unwrap();
        for (t, w) in trace.disturbances.iter().enumerate() {
            let mean = 5.0 * (0.01 * t as f64).sin();
            assert!((w[0] - mean).abs() < 1e-12);
            assert!((w[1] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_report_orders_nc_below_ac() {
        let sys = crate::presets::integrator(1.0).unwrap();
        let (k, _) = lqr_gain(&sys).unwrap();
        let report = cost_report(&sys, &k, 0.1).unwrap();
        assert!(report.nc <= report.ac + 1e-9 * (1.0 + report.ac.abs()));
        assert!(report.rc > 0.0);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let sys = static_system(2);
        let k = Mat::zeros(2, 2);
        let model = DisturbanceModel::gaussian(Mat::identity(2, 2), 9);
        let trace = simulate(&sys, &k, &model, 3, None).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x_1,x_2,u_1,u_2,w_1,w_2,running_avg_cost"
        );
        assert_eq!(lines.count(), 3);
    }
}

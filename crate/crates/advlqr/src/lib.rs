//! Adversarially robust linear-quadratic control.
//!
//! This crate synthesizes and analyzes state-feedback controllers for
//! discrete-time LTI systems driven by a mix of stochastic noise and a
//! causal, power-budgeted adversarial disturbance:
//!
//! ```text
//!     x_{t+1} = A x_t + B u_t + w_t + d_t
//! ```
//!
//! The main entry points are:
//!
//! - [`riccati`]: nominal and gamma-adversarial discrete algebraic Riccati
//!   equations, and the feasibility boundary `gamma_inf`,
//! - [`synthesis`]: LQR, central suboptimal H-infinity, and hard-budget
//!   adversarially robust controllers (bisection on the soft penalty),
//! - [`evaluation`]: exact nominal / robust / adversarial costs and seeded
//!   closed-loop simulation under several disturbance models,
//! - [`bounds`]: the exact nominal-cost gap and the performance-robustness
//!   tradeoff bounds with their precondition thresholds,
//! - [`matops`]: the small dense-matrix kernels (Lyapunov solver, gramians,
//!   spectral quantities) everything else is built on.
//!
//! All operations are pure functions on immutable values and safe to call
//! concurrently. Batch helpers in [`par`] run on rayon when the `parallel`
//! feature (default) is enabled and fall back to sequential iteration
//! otherwise; results are identical either way.

pub mod bounds;
pub mod evaluation;
pub mod matops;
pub mod par;
pub mod presets;
pub mod riccati;
pub mod synthesis;

pub use matops::Mat;
pub use riccati::{LtiSystem, RiccatiSolution};
pub use synthesis::{AdvController, HardBudgetSolution};

/// Errors shared across the solver and analysis modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has non-finite entries ({0})")]
    NonFinite(String),
    #[error("matrix is not symmetric within tolerance ({0})")]
    NotSymmetric(String),
    #[error("matrix is not positive semidefinite ({0})")]
    NotPsd(String),
    #[error("matrix is not positive definite ({0})")]
    NotPd(String),
    #[error("matrix is not Schur stable (spectral radius {rho})")]
    UnstableMatrix { rho: f64 },
    #[error("rho = {rho} must exceed the spectral radius {spectral_radius}")]
    RhoTooSmall { rho: f64, spectral_radius: f64 },
    #[error("(A, B) is not stabilizable")]
    NotStabilizable,
    #[error("(A, B) is not controllable")]
    NotControllable,
    #[error("(Q^1/2, A) is not detectable")]
    NotDetectable,
    #[error("iteration did not converge within {iterations} steps")]
    NoConvergence { iterations: usize },
    #[error("adversarial Riccati equation infeasible at gamma = {gamma}")]
    Infeasible { gamma: f64 },
    #[error("no feasible gamma found while expanding the search bracket")]
    BracketFailure,
    #[error("invalid bisection bracket: {0}")]
    BadBracket(String),
    #[error("closed loop A + BK is not Schur stable (spectral radius {rho})")]
    UnstableController { rho: f64 },
    #[error("matrix ordering M >= P violated (min eigenvalue {min_eig})")]
    OrderingViolated { min_eig: f64 },
    #[error("precondition failed: requires gamma^2 >= {threshold}")]
    PreconditionFailed { threshold: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

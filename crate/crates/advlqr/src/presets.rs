//! Built-in benchmark systems.

use crate::matops::{matrix_from_rows, Mat};
use crate::{LtiSystem, Result};

/// Double integrator with coupling `rho`,
/// `A = [[1, rho], [0, 1]]`, `B = [0, 1]'`, `Q = R = Sigma_w = I`.
///
/// Small `rho` makes the system poorly controllable; sweeping `rho` traces
/// out how controllability drives the performance-robustness tradeoff.
pub fn integrator(rho: f64) -> Result<LtiSystem> {
    let a = matrix_from_rows(&[vec![1.0, rho], vec![0.0, 1.0]])?;
    let b = matrix_from_rows(&[vec![0.0], vec![1.0]])?;
    LtiSystem::new(
        a,
        b,
        Mat::identity(2, 2),
        Mat::identity(1, 1),
        Mat::identity(2, 2),
    )
}

/// Linearized longitudinal dynamics of a Boeing 747, with `Q = R = I` and
/// unit noise covariance.
pub fn boeing747() -> Result<LtiSystem> {
    let a = matrix_from_rows(&[
        vec![0.99, 0.03, -0.02, -0.32],
        vec![0.01, 0.47, 4.7, 0.00],
        vec![0.02, -0.06, 0.40, 0.00],
        vec![0.01, -0.04, 0.72, 0.99],
    ])?;
    let b = matrix_from_rows(&[
        vec![0.01, 0.99],
        vec![-3.44, 1.66],
        vec![-0.83, 0.44],
        vec![-0.47, 0.25],
    ])?;
    LtiSystem::new(
        a,
        b,
        Mat::identity(4, 4),
        Mat::identity(2, 2),
        Mat::identity(4, 4),
    )
}

//! Dense small-matrix primitives shared by the solver modules: the discrete
//! Lyapunov equation, controllability gramians, spectral quantities, and the
//! symmetry/definiteness checks the rest of the crate relies on.
//!
//! Conventions fixed here and used everywhere else:
//!
//! - `dlyap(A, Q)` solves `X = A X A' + Q`,
//! - `W_l(A, B) = sum_{t=0..=l} A^t B B' (A^t)'` (inclusive upper index),
//! - `tau(A, rho) = sup_k ||A^k|| rho^{-k}` for `rho > rho(A)`,
//! - `||.||` on matrices is the spectral norm unless a function name says
//!   Frobenius.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Dense column-major `f64` matrix used throughout the crate.
pub type Mat = DMatrix<f64>;

/// Max entrywise asymmetry tolerated by [`check_symmetric`], relative to
/// `1 + ||X||_F`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative residual bound enforced on every [`dlyap`] return.
pub const DLYAP_RESIDUAL_TOL: f64 = 1e-9;
/// Spectral radii above `1 - STABILITY_MARGIN` are treated as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// Eigenvalue slack for positive-semidefiniteness checks, relative to
/// `1 + ||X||`.
pub const PSD_TOL: f64 = 1e-9;

/// Build a matrix from row slices, rejecting ragged rows and non-finite
/// entries.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    if rows.is_empty() {
        return Err(Error::DimensionMismatch("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::DimensionMismatch("matrix has empty rows".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {}",
                i,
                row.len(),
                ncols
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let m = Mat::from_row_slice(rows.len(), ncols, &flat);
    require_finite(&m, "matrix")?;
    Ok(m)
}

/// Reject NaN/Inf entries.
pub fn require_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// `(X + X') / 2`.
pub fn symmetrized(x: &Mat) -> Mat {
    (x + x.transpose()) * 0.5
}

/// Verify `max |X - X'| <= SYMMETRY_TOL * (1 + ||X||)` and return the
/// symmetrized matrix.
pub fn check_symmetric(x: &Mat, what: &str) -> Result<Mat> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    require_finite(x, what)?;
    let asym = (x - x.transpose()).abs().max();
    if asym > SYMMETRY_TOL * (1.0 + x.norm()) {
        return Err(Error::NotSymmetric(format!(
            "{what}: max |X - X'| = {asym:.3e}"
        )));
    }
    Ok(symmetrized(x))
}

/// Largest eigenvalue modulus, via the real Schur form.
pub fn spectral_radius(a: &Mat) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "spectral radius of a non-square matrix".into(),
        ));
    }
    Ok(a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigenvalues of a symmetric matrix, unordered.
pub fn symmetric_eigenvalues(x: &Mat) -> Vec<f64> {
    x.symmetric_eigenvalues().iter().copied().collect()
}

pub fn min_symmetric_eigenvalue(x: &Mat) -> f64 {
    symmetric_eigenvalues(x).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn max_symmetric_eigenvalue(x: &Mat) -> f64 {
    symmetric_eigenvalues(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Semidefiniteness up to `-PSD_TOL * (1 + ||X||)` on the smallest eigenvalue.
pub fn is_psd(x: &Mat) -> bool {
    min_symmetric_eigenvalue(x) >= -PSD_TOL * (1.0 + x.norm())
}

/// Strict definiteness: smallest eigenvalue above `PSD_TOL`.
pub fn is_pd(x: &Mat) -> bool {
    min_symmetric_eigenvalue(x) > PSD_TOL
}

/// Clip negative eigenvalues to zero and symmetrize, for matrices that are
/// psd up to roundoff.
pub fn clip_psd(x: &Mat) -> Mat {
    let eig = symmetrized(x).symmetric_eigen();
    let clipped = Mat::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    symmetrized(&(&eig.eigenvectors * clipped * eig.eigenvectors.transpose()))
}

/// Symmetric psd square root `X^{1/2}`.
pub fn sqrt_psd(x: &Mat) -> Result<Mat> {
    let sym = check_symmetric(x, "sqrt_psd operand")?;
    let norm = sym.norm();
    let eig = sym.symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig < -PSD_TOL * (1.0 + norm) {
        return Err(Error::NotPsd(format!("min eigenvalue {min_eig:.3e}")));
    }
    let root = Mat::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(symmetrized(&(&eig.eigenvectors * root * eig.eigenvectors.transpose())))
}

/// Solve the discrete Lyapunov equation `X = A X A' + Q` by Smith doubling.
///
/// Doubling squares `A` each step (`X <- X + A_k X A_k'`, `A_{k+1} = A_k^2`),
/// so the partial sum covers `2^k` series terms after `k` iterations with no
/// `n^2 x n^2` Kronecker system. Requires `rho(A) < 1` and symmetric psd `Q`.
pub fn dlyap(a: &Mat, q: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("dlyap: A is not square".into()));
    }
    if q.nrows() != a.nrows() || q.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "dlyap: A is {}x{} but Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableMatrix { rho });
    }
    let q = check_symmetric(q, "dlyap: Q")?;

    let mut x = q.clone();
    let mut a_pow = a.clone();
    const MAX_DOUBLINGS: usize = 100;
    for _ in 0..MAX_DOUBLINGS {
        let update = &a_pow * &x * a_pow.transpose();
        x += &update;
        if update.norm() < 1e-12 * (1.0 + x.norm()) {
            let x = symmetrized(&x);
            let residual = (&x - a * &x * a.transpose() - &q).norm();
            if residual > DLYAP_RESIDUAL_TOL * (1.0 + x.norm()) {
                return Err(Error::Numerical(format!(
                    "dlyap residual {residual:.3e} exceeds tolerance"
                )));
            }
            return Ok(x);
        }
        a_pow = &a_pow * &a_pow;
    }
    Err(Error::NoConvergence {
        iterations: MAX_DOUBLINGS,
    })
}

/// `W_l(A, B) = sum_{t=0..=l} A^t B B' (A^t)'`, the l-step controllability
/// gramian with inclusive upper index.
pub fn controllability_gramian_l(a: &Mat, b: &Mat, l: usize) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("gramian: A is not square".into()));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gramian: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if l < 1 {
        return Err(Error::DimensionMismatch("gramian: l must be >= 1".into()));
    }
    let bbt = b * b.transpose();
    let mut w = bbt.clone();
    let mut a_pow_b = b.clone();
    for _ in 1..=l {
        a_pow_b = a * a_pow_b;
        w += &a_pow_b * a_pow_b.transpose();
    }
    Ok(symmetrized(&w))
}

/// `W_inf(A, B) = dlyap(A, B B')`; requires `rho(A) < 1`.
pub fn controllability_gramian_inf(a: &Mat, b: &Mat) -> Result<Mat> {
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gramian: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    dlyap(a, &(b * b.transpose()))
}

/// `tau(A, rho) = sup_k ||A^k|| rho^{-k}` for `rho > rho(A)`.
///
/// The scaled powers `A^k rho^{-k}` decay geometrically, so the supremum is
/// attained at finite k: the scan stops at the first k whose term drops
/// below 0.5 after the running maximum has been stable for 20 consecutive
/// steps.
pub fn tau(a: &Mat, rho: f64) -> Result<f64> {
    let sr = spectral_radius(a)?;
    if rho <= sr + 1e-9 {
        return Err(Error::RhoTooSmall {
            rho,
            spectral_radius: sr,
        });
    }
    // Track A^k / rho^k instead of A^k so transients of unstable A cannot
    // overflow before the ratio decays.
    let n = a.nrows();
    let scaled = a / rho;
    let mut power = Mat::identity(n, n);
    let mut max_term = 1.0_f64; // k = 0
    let mut stable_steps = 0usize;
    const MAX_SCAN: usize = 1_000_000;
    for _ in 1..=MAX_SCAN {
        power = &power * &scaled;
        let term = spectral_norm(&power);
        if term > max_term {
            max_term = term;
            stable_steps = 0;
        } else {
            stable_steps += 1;
        }
        if term < 0.5 && stable_steps >= 20 {
            return Ok(max_term);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_SCAN,
    })
}

/// Smallest singular value.
pub fn min_singular_value(a: &Mat) -> f64 {
    a.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest singular value (the spectral norm).
pub fn spectral_norm(a: &Mat) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn frobenius_norm(a: &Mat) -> f64 {
    a.norm()
}

//! Small dense linear-algebra helpers shared by the filters.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub(crate) type Chol = Cholesky<f64, Dyn>;

const SYMMETRY_TOL: f64 = 1e-12;

/// Cholesky factorisation, mapping failure to an invalid-parameter error.
pub(crate) fn cholesky(m: &Matrix, what: &str) -> Result<Chol> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::invalid(format!("{what} is not positive definite")))
}

/// `vᵀ P⁻¹ v` from a Cholesky factor of `P`.
pub(crate) fn inv_quad_form(chol: &Chol, v: &Vector) -> f64 {
    match chol.l_dirty().solve_lower_triangular(v) {
        Some(z) => z.norm_squared(),
        None => f64::INFINITY,
    }
}

pub(crate) fn log_det(chol: &Chol) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// `P ← (P + Pᵀ)/2`.
pub fn symmetrise(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn check_symmetric(m: &Matrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// Validates a symmetric positive-definite matrix.
pub(crate) fn check_spd(m: &Matrix, what: &str) -> Result<Chol> {
    check_symmetric(m, what)?;
    cholesky(m, what)
}

/// Validates a symmetric positive-semidefinite matrix (e.g. a rank-deficient
/// process noise).
pub(crate) fn check_psd(m: &Matrix, what: &str) -> Result<()> {
    check_symmetric(m, what)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
        return Err(Error::invalid(format!("{what} is not positive semidefinite")));
    }
    Ok(())
}

pub(crate) fn check_dim(v: &Vector, dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::invalid(format!(
            "{what} has dimension {}, expected {dim}",
            v.len()
        )));
    }
    Ok(())
}

/// Symmetric square root `V Λ^{1/2} Vᵀ` of a PSD matrix, clamping tiny
/// negative eigenvalues to zero.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(m.clone());
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

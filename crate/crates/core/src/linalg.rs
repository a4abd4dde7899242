//! Small dense linear-algebra helpers shared by the possibility algebra and the filter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Eigenvalue ratio below which a covariance receives diagonal jitter.
pub const CONDITION_FLOOR: f64 = 1e-9;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks symmetry within [`SYMMETRY_TOL`] (relative to the largest entry) and
/// returns the exactly symmetrized matrix.
pub fn symmetrized(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::NotPositiveDefinite(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite entry".into()));
    }
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotPositiveDefinite(format!(
                    "asymmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Validates a covariance: symmetric, finite, positive definite after at most
/// one diagonal jitter of `1e-9 * trace / n` when the smallest eigenvalue is
/// below `1e-9` times the largest.
pub fn validated_covariance(m: &Matrix) -> Result<Matrix> {
    let mut sym = symmetrized(m)?;
    let n = sym.nrows();
    if n == 0 {
        return Err(Error::NotPositiveDefinite("empty matrix".into()));
    }
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "largest eigenvalue {max} is not positive"
        )));
    }
    if min < CONDITION_FLOOR * max {
        let jitter = CONDITION_FLOOR * sym.trace() / n as f64;
        if min + jitter <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {min} is negative"
            )));
        }
        for i in 0..n {
            sym[(i, i)] += jitter;
        }
    }
    Ok(sym)
}

/// Validates a symmetric positive-semidefinite matrix (e.g. process noise, which
/// may legitimately be zero).
pub fn validated_psd(m: &Matrix) -> Result<Matrix> {
    let sym = symmetrized(m)?;
    let eig = SymmetricEigen::new(sym.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.min() < -CONDITION_FLOOR * scale {
        return Err(Error::NotPositiveDefinite(format!(
            "matrix has negative eigenvalue {}",
            eig.eigenvalues.min()
        )));
    }
    Ok(sym)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(m: &Matrix) -> Option<Matrix> {
    let inv = m.clone().cholesky()?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

/// Quadratic form `dᵀ A⁻¹ d` for symmetric positive-definite `A`.
pub fn mahalanobis_sq(d: &Vector, a: &Matrix) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let y = chol.solve(d);
    Some(d.dot(&y))
}

pub fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

//! Small dense helpers shared by the projection and application modules.
//!
//! Matrix-valued decision variables travel through the solver as flat
//! column-major vectors so that a single `DVector` type covers both the LP
//! and the SDP settings.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Reshape a flat column-major vector of length `order * order` into a square matrix.
pub fn unflatten(v: &[f64], order: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), order * order);
    DMatrix::from_column_slice(order, order, v)
}

pub fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// `A • B = Tr(Aᵀ B)`.
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix, surfacing non-convergence as an error.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite entry in symmetric matrix".into()));
    }
    let n = m.nrows();
    SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `‖M‖∞`, the maximum absolute row sum.
pub fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigen(symmetrize(m))?;
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(unflatten(flatten(&m).as_slice(), 2), m);
    }

    #[test]
    fn frobenius_dot_identity() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_eq!(frobenius_dot(&i, &i), 3.0);
    }

    #[test]
    fn row_sum_norm() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
        assert_eq!(max_row_sum(&m), 2.0);
    }

    #[test]
    fn eigen_rejects_nan() {
        let m = DMatrix::from_element(2, 2, f64::NAN);
        assert!(symmetric_eigen(m).is_err());
    }
}

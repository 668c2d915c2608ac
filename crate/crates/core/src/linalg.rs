//! Small dense helpers shared by the oracle and analysis paths.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Symmetric eigendecomposition. Only the lower triangle is read.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigensolve of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Eigensolver(format!("{}x{} symmetric matrix", m.nrows(), m.ncols())))
}

/// Eigenvalues of a symmetric matrix in non-decreasing order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = sym_eigen(m)?.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn lambda_min(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

pub fn lambda_max(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.last().copied().unwrap_or(0.0))
}

/// Euclidean operator norm, `sqrt(lambda_max(M M^T))`.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let gram = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.transpose() * m };
    Ok(lambda_max(&gram)?.max(0.0).sqrt())
}

/// Symmetric square root of a positive semidefinite matrix. Eigenvalues that
/// are negative only through roundoff are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// `M ⊗ I_m`.
pub fn kron_identity(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::identity(dim, dim))
}

/// Largest absolute entrywise difference between `m` and its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -3.0, 2.0]));
        assert!((spectral_norm(&m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.3, 2.0, 0.1, 0.0, 0.5, 1.5]);
        let m = &b * b.transpose();
        let s = psd_sqrt(&m).unwrap();
        assert!((&s * &s - &m).amax() < 1e-10);
        assert!(asymmetry(&s) < 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 1.0]);
        let eig = sym_eigen(&m).unwrap();
        let rebuilt = eig.recompose();
        assert!((rebuilt - m).amax() < 1e-10);
    }

    #[test]
    fn non_square_rejected() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_eigen(&m), Err(Error::Dimension(_))));
    }
}

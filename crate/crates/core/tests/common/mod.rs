//! Reference computations written directly against nalgebra, kept apart from
//! the crate's own operator code.
#![allow(dead_code)]

use dsg_core::{DMatrix, DVector};

/// `(A_k, G_k)` from the weight matrix, regressors, energies and diffused
/// energies, built with explicit Kronecker products.
pub fn oracle_operators(
    w: &DMatrix<f64>,
    phi: &[DVector<f64>],
    r: &[f64],
    xq: &[f64],
    nu: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = phi.len();
    let m = phi[0].len();
    let mut a = DMatrix::zeros(n * m, n * m);
    for i in 0..n {
        let block = &phi[i] * phi[i].transpose() / r[i];
        a.view_mut((i * m, i * m), (m, m)).copy_from(&block);
    }
    let eye_m = DMatrix::<f64>::identity(m, m);
    let lap = (DMatrix::<f64>::identity(n, n) - w).kronecker(&eye_m);
    let x = DMatrix::from_diagonal(&DVector::from_column_slice(xq)).kronecker(&eye_m);
    let g = &a + (&lap * x * &lap) * nu;
    (a, g)
}

/// `err' = (I - mu G) err - mu col(phi^i eps^i / r^i)`.
pub fn oracle_step(err: &DVector<f64>, g: &DMatrix<f64>, phi: &[DVector<f64>], r: &[f64], eps: &[f64], mu: f64) -> DVector<f64> {
    let m = phi[0].len();
    let mut forcing = DVector::zeros(err.len());
    for i in 0..phi.len() {
        forcing.rows_mut(i * m, m).copy_from(&(&phi[i] * (eps[i] / r[i])));
    }
    err - g * err * mu - forcing * mu
}

pub fn sym_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn stack(v: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(v.iter().map(|x| x.len()).sum(), v.iter().flat_map(|x| x.iter().copied()))
}

pub fn relative(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

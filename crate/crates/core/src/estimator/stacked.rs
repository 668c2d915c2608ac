use nalgebra::{DMatrix, DVector};

use super::AlgorithmParams;
use crate::error::{Error, Result};
use crate::graph::WeightMatrix;
use crate::linalg;

/// Largest `mn` for which dense operators are built unless a caller asks for
/// more.
pub const DEFAULT_OPERATOR_CAP: usize = 400;

/// Dense block operators of one step.
#[derive(Debug, Clone)]
pub struct StackedOperators {
    pub n: usize,
    pub m: usize,
    /// `Phi_k = diag(phi^1_k, ..., phi^n_k)`, `mn x n`.
    pub phi: DMatrix<f64>,
    /// Diagonal of `R_k`.
    pub r: Vec<f64>,
    /// Diagonal of `X_k(Q)`.
    pub xq: Vec<f64>,
    /// `A_k = Phi_k R_k^{-1} Phi_k^T`.
    pub a: DMatrix<f64>,
    /// `G_k = A_k + nu L (X_k(Q) ⊗ I_m) L` with `L = (I - A) ⊗ I_m`.
    pub g: DMatrix<f64>,
}

impl StackedOperators {
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    /// Per-sensor regressor `phi^i_k`.
    pub fn regressor(&self, i: usize) -> DVector<f64> {
        self.phi.view((i * self.m, i), (self.m, 1)).column(0).into_owned()
    }

    /// `sum_i phi^i (phi^i)^T / r^i`, an `m x m` matrix.
    pub fn summed_local_gains(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for i in 0..self.n {
            let p = self.regressor(i);
            out += &p * p.transpose() / self.r[i];
        }
        out
    }
}

/// `col(v_1, ..., v_n)`.
pub fn stack(vectors: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(vectors.iter().map(|v| v.len()).sum(), vectors.iter().flat_map(|v| v.iter().copied()))
}

pub fn build_stacked_operators(
    w: &WeightMatrix,
    params: &AlgorithmParams,
    phi: &[DVector<f64>],
    r: &[f64],
    xq: &[f64],
) -> Result<StackedOperators> {
    build_stacked_operators_capped(w, params.nu, phi, r, xq, DEFAULT_OPERATOR_CAP)
}

pub fn build_stacked_operators_capped(
    w: &WeightMatrix,
    nu: f64,
    phi: &[DVector<f64>],
    r: &[f64],
    xq: &[f64],
    cap: usize,
) -> Result<StackedOperators> {
    let n = w.n();
    let m = phi.first().map_or(0, |p| p.len());
    if phi.len() != n || r.len() != n || xq.len() != n || m == 0 || phi.iter().any(|p| p.len() != m) {
        return Err(Error::Dimension(format!(
            "stacked operators need {n} regressors of equal positive length, {n} energies and {n} diffused energies"
        )));
    }
    let dim = n * m;
    if dim > cap {
        return Err(Error::OperatorCap { size: dim, cap });
    }

    let mut phi_block = DMatrix::zeros(dim, n);
    for (i, p) in phi.iter().enumerate() {
        phi_block.view_mut((i * m, i), (m, 1)).copy_from(p);
    }
    let r_inv = DMatrix::from_diagonal(&DVector::from_iterator(n, r.iter().map(|v| 1.0 / v)));
    let a = &phi_block * r_inv * phi_block.transpose();

    let lift = linalg::kron_identity(&w.laplacian(), m);
    let x_lift = linalg::kron_identity(&DMatrix::from_diagonal(&DVector::from_column_slice(xq)), m);
    let g = &a + (&lift * x_lift * &lift) * nu;

    Ok(StackedOperators { n, m, phi: phi_block, r: r.to_vec(), xq: xq.to_vec(), a, g })
}

/// `err_{k+1} = (I - mu G_k) err_k - mu Phi_k R_k^{-1} Xi^T`, with `err` the
/// stacked parameter error `Theta - Theta_hat`.
pub fn matrix_form_step(
    err: &DVector<f64>,
    ops: &StackedOperators,
    mu: f64,
    noise: &[f64],
) -> Result<DVector<f64>> {
    if err.len() != ops.dim() || noise.len() != ops.n {
        return Err(Error::Dimension(format!(
            "matrix-form step of dimension {} with error of length {} and {} noises",
            ops.dim(),
            err.len(),
            noise.len()
        )));
    }
    let scaled_noise = DVector::from_iterator(ops.n, noise.iter().zip(&ops.r).map(|(e, r)| e / r));
    let transition = DMatrix::identity(ops.dim(), ops.dim()) - &ops.g * mu;
    Ok(transition * err - (&ops.phi * scaled_noise) * mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_metropolis, Topology};

    fn params(nu: f64) -> AlgorithmParams {
        AlgorithmParams::new(0.1, nu, 2).unwrap()
    }

    #[test]
    fn nu_zero_gives_g_equal_a() {
        let t = Topology::path(3).unwrap();
        let w = build_metropolis(&t);
        let phi: Vec<DVector<f64>> = (0..3).map(|i| DVector::from_vec(vec![1.0, i as f64])).collect();
        let ops = build_stacked_operators_capped(&w, 0.0, &phi, &[3.0, 4.0, 8.0], &[0.2, 0.3, 0.1], 400).unwrap();
        assert_eq!(ops.g, ops.a);
    }

    #[test]
    fn single_node_has_no_consensus_part() {
        let t = Topology::isolated(1).unwrap();
        let w = build_metropolis(&t);
        let phi = vec![DVector::from_vec(vec![1.0, 2.0])];
        let ops = build_stacked_operators(&w, &params(0.9), &phi, &[6.0], &[5.0 / 6.0]).unwrap();
        let expect = &phi[0] * phi[0].transpose() / 6.0;
        assert!((&ops.g - expect).amax() < 1e-16);
    }

    #[test]
    fn cap_refuses_large_operators() {
        let t = Topology::ring(30).unwrap();
        let w = build_metropolis(&t);
        let phi = vec![DVector::zeros(20); 30];
        let err = build_stacked_operators(&w, &params(0.5), &phi, &[1.0; 30], &[0.0; 30]).unwrap_err();
        assert!(matches!(err, Error::OperatorCap { size: 600, cap: 400 }));
    }

    #[test]
    fn scalar_matrix_form_matches_hand_value() {
        let t = Topology::isolated(1).unwrap();
        let w = build_metropolis(&t);
        let phi = vec![DVector::from_element(1, 1.0)];
        let ops = build_stacked_operators(&w, &params(0.5), &phi, &[2.0], &[0.5]).unwrap();
        // theta = 1, theta_hat_0 = 0, zero noise
        let next = matrix_form_step(&DVector::from_element(1, 1.0), &ops, 0.25, &[0.0]).unwrap();
        assert_eq!(next[0], 0.875);
        assert_eq!(1.0 - next[0], 0.125);
    }

    #[test]
    fn zero_error_is_fixed_without_noise() {
        let t = Topology::complete(3).unwrap();
        let w = build_metropolis(&t);
        let phi: Vec<DVector<f64>> = (0..3).map(|i| DVector::from_vec(vec![0.5 * i as f64, 1.0])).collect();
        let ops = build_stacked_operators(&w, &params(0.5), &phi, &[2.0, 3.0, 4.0], &[0.3, 0.3, 0.3]).unwrap();
        let next = matrix_form_step(&DVector::zeros(6), &ops, 0.2, &[0.0; 3]).unwrap();
        assert!(next.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_orders_by_sensor() {
        let v = stack(&[DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![3.0, 4.0])]);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }
}

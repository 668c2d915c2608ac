//! State transition matrices `Psi(k, j) = (I - mu G_{k-1}) ... (I - mu G_j)`
//! and the square roots `B_p` with `B_p^2 = mu G_p`.
//!
//! `operators[p]` holds `G_p`, the operator of update `p + 1`, so that the
//! stacked error after `k` updates of a noiseless run is `Psi(k, 0)` applied
//! to the initial error.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimator::{build_stacked_operators_capped, AlgorithmParams, StackedOperators, TrajectoryRecord, DEFAULT_OPERATOR_CAP};
use crate::graph::WeightMatrix;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct TransitionProbe {
    pub j: usize,
    pub k: usize,
    pub psi: DMatrix<f64>,
    /// `B_p` for `p = j..k`.
    pub b: Vec<DMatrix<f64>>,
}

impl TransitionProbe {
    pub fn norm(&self) -> Result<f64> {
        linalg::spectral_norm(&self.psi)
    }
}

/// `I - mu G`.
pub fn step_factor(ops: &StackedOperators, mu: f64) -> DMatrix<f64> {
    DMatrix::identity(ops.dim(), ops.dim()) - &ops.g * mu
}

pub(crate) fn check_window(operators: &[StackedOperators]) -> Result<usize> {
    let dim = operators.first().map_or(0, StackedOperators::dim);
    if operators.iter().any(|o| o.dim() != dim) {
        return Err(Error::Dimension("operators in a window must share one dimension".into()));
    }
    if dim > DEFAULT_OPERATOR_CAP {
        return Err(Error::OperatorCap { size: dim, cap: DEFAULT_OPERATOR_CAP });
    }
    Ok(dim)
}

pub fn transition_matrix(
    operators: &[StackedOperators],
    params: &AlgorithmParams,
    j: usize,
    k: usize,
) -> Result<TransitionProbe> {
    if j > k || k > operators.len() {
        return Err(Error::Invalid(format!(
            "transition window {j}..{k} outside 0..{}",
            operators.len()
        )));
    }
    let dim = check_window(operators)?;
    let mut psi = DMatrix::identity(dim, dim);
    let mut b = Vec::with_capacity(k - j);
    for ops in &operators[j..k] {
        psi = step_factor(ops, params.mu) * psi;
        b.push(linalg::psd_sqrt(&(&ops.g * params.mu))?);
    }
    Ok(TransitionProbe { j, k, psi, b })
}

/// `|Psi(k, 0)|` for `k = 0, stride, 2 stride, ...` and the last `k`.
pub fn psi_norm_series(
    operators: &[StackedOperators],
    params: &AlgorithmParams,
    stride: usize,
) -> Result<Vec<(usize, f64)>> {
    let dim = check_window(operators)?;
    let stride = stride.max(1);
    let mut psi = DMatrix::identity(dim, dim);
    let mut out = vec![(0, 1.0)];
    for (p, ops) in operators.iter().enumerate() {
        psi = step_factor(ops, params.mu) * psi;
        let k = p + 1;
        if k % stride == 0 || k == operators.len() {
            out.push((k, linalg::spectral_norm(&psi)?));
        }
    }
    Ok(out)
}

/// Rebuilds `G_p` for every recorded step from the stored `phi`, `r` and
/// `x(Q)` columns.
pub fn operators_from_trajectory(
    trajectory: &TrajectoryRecord,
    w: &WeightMatrix,
    nu: f64,
) -> Result<Vec<StackedOperators>> {
    trajectory
        .steps
        .iter()
        .map(|s| build_stacked_operators_capped(w, nu, &s.phi, &s.r, &s.xq, DEFAULT_OPERATOR_CAP))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::build_stacked_operators;
    use crate::graph::{build_metropolis, Topology};
    use nalgebra::DVector;

    #[test]
    fn empty_window_is_identity() {
        let w = build_metropolis(&Topology::path(2).unwrap());
        let p = AlgorithmParams::new(0.2, 0.5, 1).unwrap();
        let ops = vec![build_stacked_operators(&w, &p, &vec![DVector::from_element(1, 1.0); 2], &[2.0, 2.0], &[0.5, 0.5]).unwrap()];
        let probe = transition_matrix(&ops, &p, 1, 1).unwrap();
        assert_eq!(probe.psi, DMatrix::identity(2, 2));
        assert!(probe.b.is_empty());
    }

    #[test]
    fn scalar_factor() {
        let w = build_metropolis(&Topology::isolated(1).unwrap());
        let p = AlgorithmParams::new(0.25, 0.1, 1).unwrap();
        let ops = vec![build_stacked_operators_capped(&w, 0.0, &[DVector::from_element(1, 1.0)], &[2.0], &[0.5], 400).unwrap()];
        let probe = transition_matrix(&ops, &p, 0, 1).unwrap();
        assert_eq!(probe.psi[(0, 0)], 0.875);
        assert!((probe.b[0][(0, 0)].powi(2) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn bad_window_rejected() {
        let p = AlgorithmParams::new(0.25, 0.1, 1).unwrap();
        assert!(transition_matrix(&[], &p, 1, 0).is_err());
        assert!(transition_matrix(&[], &p, 0, 1).is_err());
    }
}

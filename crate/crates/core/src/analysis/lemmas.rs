//! Executable forms of the inequalities behind the convergence argument.
//!
//! Each check returns the raw sides so callers choose the slack.

use nalgebra::DMatrix;

use super::transition::{check_window, step_factor};
use crate::error::{Error, Result};
use crate::estimator::{AlgorithmParams, StackedOperators};
use crate::graph::{LaplacianSpectrum, WeightMatrix};
use crate::linalg;

/// Smallest and largest eigenvalue of `mu G`; both lie in `[0, 1]` when
/// `mu (1 + 4 nu) <= 1`.
pub fn gain_eigen_range(ops: &StackedOperators, mu: f64) -> Result<(f64, f64)> {
    let values = linalg::sym_eigenvalues(&(&ops.g * mu))?;
    Ok((values[0], values[values.len() - 1]))
}

/// `sum_{j<k} |Psi(k, j+1) B_j|^2` over the whole window, accumulated
/// backwards from `Psi(k, k) = I`. Bounded by `mn`.
pub fn lemma4_sum(operators: &[StackedOperators], params: &AlgorithmParams) -> Result<f64> {
    let dim = check_window(operators)?;
    let mut psi = DMatrix::<f64>::identity(dim, dim);
    let mut sum = 0.0;
    for ops in operators.iter().rev() {
        let b = linalg::psd_sqrt(&(&ops.g * params.mu))?;
        sum += linalg::spectral_norm(&(&psi * b))?.powi(2);
        psi = &psi * step_factor(ops, params.mu);
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma6Outcome {
    /// `lambda_min(sum_k G_k)`.
    pub lhs: f64,
    /// `sigma lambda_min(sum_k sum_i phi phi^T / r)`.
    pub rhs: f64,
    pub sigma: f64,
    /// Smallest entry of `A^Q`.
    pub a_min: f64,
}

/// `sigma = l2^2 a nu / (2n + l2^2 a nu n)`.
pub fn lemma6_sigma(l2: f64, a_min: f64, nu: f64, n: usize) -> f64 {
    let num = l2 * l2 * a_min * nu;
    num / (2.0 * n as f64 + num * n as f64)
}

pub fn lemma6_check(
    operators: &[StackedOperators],
    spectrum: &LaplacianSpectrum,
    w: &WeightMatrix,
    params: &AlgorithmParams,
) -> Result<Lemma6Outcome> {
    let dim = check_window(operators)?;
    if operators.is_empty() {
        return Err(Error::Invalid("lemma check needs a nonempty window".into()));
    }
    let n = w.n();
    let m = operators[0].m;
    let a_min = w.power(params.q).iter().copied().fold(f64::INFINITY, f64::min);
    if a_min.is_nan() || a_min <= 0.0 {
        return Err(Error::Invalid(format!(
            "A^Q has a zero entry (min {a_min}); Q = {} is below the diameter or the graph is disconnected",
            params.q
        )));
    }
    let l2 = if n == 1 { 0.0 } else { spectrum.l2 };
    let sigma = lemma6_sigma(l2, a_min, params.nu, n);

    let mut g_sum = DMatrix::zeros(dim, dim);
    let mut gain_sum = DMatrix::zeros(m, m);
    for ops in operators {
        g_sum += &ops.g;
        gain_sum += ops.summed_local_gains();
    }
    Ok(Lemma6Outcome {
        lhs: linalg::lambda_min(&g_sum)?,
        rhs: sigma * linalg::lambda_min(&gain_sum)?,
        sigma,
        a_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantCheck {
    /// `det(I - mu G_k)`.
    pub lhs: f64,
    /// `det(I - A_k)^{mn}`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma89Report {
    pub determinants: Vec<DeterminantCheck>,
    /// `min_k (lhs - rhs)`.
    pub min_determinant_margin: f64,
    /// `max_{j <= k} |Psi(k, j)|` over every pair in the window.
    pub max_psi_norm: f64,
    pub pairs_checked: usize,
}

fn symmetric_det(m: &DMatrix<f64>) -> Result<f64> {
    Ok(linalg::sym_eigenvalues(m)?.iter().product())
}

/// Determinant inequality with exponent `mn` per step and the norm bound for
/// every `Psi(k, j)` in the window. Intended for `mu (1 + 4 nu) < 1`.
pub fn lemma8_lemma9_checks(operators: &[StackedOperators], params: &AlgorithmParams) -> Result<Lemma89Report> {
    let dim = check_window(operators)?;
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut determinants = Vec::with_capacity(operators.len());
    for ops in operators {
        let lhs = symmetric_det(&step_factor(ops, params.mu))?;
        let rhs = symmetric_det(&(&eye - &ops.a))?.powi(dim as i32);
        determinants.push(DeterminantCheck { lhs, rhs });
    }
    let factors: Vec<DMatrix<f64>> = operators.iter().map(|o| step_factor(o, params.mu)).collect();
    let mut max_psi_norm: f64 = if operators.is_empty() { 0.0 } else { 1.0 };
    let mut pairs_checked = 0;
    for j in 0..factors.len() {
        let mut psi = eye.clone();
        for f in &factors[j..] {
            psi = f * psi;
            max_psi_norm = max_psi_norm.max(linalg::spectral_norm(&psi)?);
            pairs_checked += 1;
        }
    }
    let min_determinant_margin = determinants.iter().map(|d| d.lhs - d.rhs).fold(f64::INFINITY, f64::min);
    Ok(Lemma89Report { determinants, min_determinant_margin, max_psi_norm, pairs_checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{build_stacked_operators, build_stacked_operators_capped};
    use crate::graph::{build_metropolis, laplacian_spectrum, Topology};
    use nalgebra::DVector;

    fn scalar_ops(phi: f64, r: f64) -> StackedOperators {
        let w = build_metropolis(&Topology::isolated(1).unwrap());
        build_stacked_operators_capped(&w, 0.1, &[DVector::from_element(1, phi)], &[r], &[phi * phi / r], 400).unwrap()
    }

    #[test]
    fn empty_window_sum_is_zero() {
        let p = AlgorithmParams::new(0.25, 0.1, 1).unwrap();
        assert_eq!(lemma4_sum(&[], &p).unwrap(), 0.0);
    }

    #[test]
    fn scalar_chain_matches_brute_force() {
        let p = AlgorithmParams::new(0.25, 0.1, 1).unwrap();
        let ops: Vec<_> = (1..=30).map(|k| scalar_ops(1.0, 1.0 + k as f64)).collect();
        // sum_j prod_{p>j} (1 - mu/r_p)^2 * mu/r_j
        let gains: Vec<f64> = (1..=30).map(|k| 0.25 / (1.0 + k as f64)).collect();
        let mut brute = 0.0;
        for j in 0..30 {
            let tail: f64 = gains[j + 1..].iter().map(|g| (1.0 - g).powi(2)).product();
            brute += tail * gains[j];
        }
        let sum = lemma4_sum(&ops, &p).unwrap();
        assert!((sum - brute).abs() < 1e-12);
        assert!(sum <= 1.0);
    }

    #[test]
    fn scalar_determinants() {
        let p = AlgorithmParams::new(0.25, 0.1, 1).unwrap();
        let rep = lemma8_lemma9_checks(&[scalar_ops(1.0, 2.0)], &p).unwrap();
        assert!((rep.determinants[0].lhs - 0.875).abs() < 1e-15);
        assert!((rep.determinants[0].rhs - 0.5).abs() < 1e-15);
        assert_eq!(rep.max_psi_norm, 1.0);
    }

    #[test]
    fn zero_regressors_give_unit_determinants() {
        let w = build_metropolis(&Topology::path(3).unwrap());
        let p = AlgorithmParams::new(0.2, 0.5, 2).unwrap();
        let ops = build_stacked_operators(&w, &p, &vec![DVector::zeros(2); 3], &[1.0; 3], &[0.0; 3]).unwrap();
        let rep = lemma8_lemma9_checks(&[ops], &p).unwrap();
        assert_eq!(rep.determinants[0], DeterminantCheck { lhs: 1.0, rhs: 1.0 });
    }

    #[test]
    fn lemma6_zero_regressors_and_single_node() {
        let t = Topology::path(3).unwrap();
        let w = build_metropolis(&t);
        let spec = laplacian_spectrum(&w, &t).unwrap();
        let p = AlgorithmParams::new(0.2, 0.5, 2).unwrap();
        let ops = build_stacked_operators(&w, &p, &vec![DVector::zeros(2); 3], &[1.0; 3], &[0.0; 3]).unwrap();
        let out = lemma6_check(&[ops], &spec, &w, &p).unwrap();
        assert!(out.lhs.abs() < 1e-15 && out.rhs.abs() < 1e-15);

        let t1 = Topology::isolated(1).unwrap();
        let w1 = build_metropolis(&t1);
        let s1 = laplacian_spectrum(&w1, &t1).unwrap();
        let out = lemma6_check(&[scalar_ops(1.0, 2.0)], &s1, &w1, &AlgorithmParams::new(0.2, 0.5, 1).unwrap()).unwrap();
        assert_eq!(out.sigma, 0.0);
        assert!(out.lhs >= 0.0);
    }

    #[test]
    fn lemma6_rejects_shallow_diffusion() {
        let t = Topology::path(3).unwrap();
        let w = build_metropolis(&t);
        let spec = laplacian_spectrum(&w, &t).unwrap();
        let p = AlgorithmParams::new(0.2, 0.5, 1).unwrap();
        let ops = build_stacked_operators(&w, &p, &vec![DVector::zeros(1); 3], &[1.0; 3], &[0.0; 3]).unwrap();
        assert!(lemma6_check(&[ops], &spec, &w, &p).is_err());
    }
}

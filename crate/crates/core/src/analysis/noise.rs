use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimator::TrajectoryRecord;

/// Partial sums `S_k = sum_{j<=k} Phi_j R_j^{-1} Xi_j` of the recorded noise,
/// one `mn`-vector per step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub partial_sums: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    /// `max_{k' >= k} |S_k' - S_k|`.
    pub tail_oscillation: Vec<f64>,
}

impl NoiseTrace {
    /// Tail oscillation after step `k` relative to `|S_k|`.
    pub fn relative_tail(&self, k: usize) -> Option<f64> {
        let idx = k.checked_sub(1)?;
        Some(self.tail_oscillation.get(idx)? / self.norms[idx])
    }
}

pub fn noise_accumulation_trace(trajectory: &TrajectoryRecord) -> Result<NoiseTrace> {
    let (n, m) = (trajectory.n, trajectory.m);
    let mut acc = DVector::zeros(n * m);
    let mut partial_sums = Vec::with_capacity(trajectory.len());
    for step in &trajectory.steps {
        for i in 0..n {
            acc.rows_mut(i * m, m).axpy(step.eps[i] / step.r[i], &step.phi[i], 1.0);
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("noise partial sum at step {}", step.k)));
        }
        partial_sums.push(acc.clone());
    }
    let norms = partial_sums.iter().map(|s| s.norm()).collect();
    let tail_oscillation = (0..partial_sums.len())
        .map(|k| partial_sums[k..].iter().map(|s| (s - &partial_sums[k]).norm()).fold(0.0, f64::max))
        .collect();
    Ok(NoiseTrace { partial_sums, norms, tail_oscillation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::TrajectoryStep;

    #[test]
    fn zero_noise_gives_zero_sums() {
        let mut t = TrajectoryRecord::new(2, 1);
        for k in 1..=5 {
            t.push(TrajectoryStep {
                k,
                phi: vec![DVector::from_element(1, 1.0); 2],
                y: vec![0.0; 2],
                eps: vec![0.0; 2],
                r: vec![1.0 + k as f64; 2],
                xq: vec![0.5; 2],
                theta_hat: vec![DVector::zeros(1); 2],
            })
            .unwrap();
        }
        let tr = noise_accumulation_trace(&t).unwrap();
        assert!(tr.norms.iter().chain(&tr.tail_oscillation).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_sum_and_tail() {
        let mut t = TrajectoryRecord::new(1, 1);
        let eps = [1.0, -1.0, 0.5];
        for (idx, e) in eps.iter().enumerate() {
            let k = idx + 1;
            t.push(TrajectoryStep {
                k,
                phi: vec![DVector::from_element(1, 2.0)],
                y: vec![0.0],
                eps: vec![*e],
                r: vec![1.0 + 4.0 * k as f64],
                xq: vec![0.0],
                theta_hat: vec![DVector::zeros(1)],
            })
            .unwrap();
        }
        let tr = noise_accumulation_trace(&t).unwrap();
        let s: Vec<f64> = tr.partial_sums.iter().map(|v| v[0]).collect();
        assert!((s[0] - 0.4).abs() < 1e-15);
        assert!((s[1] - (0.4 - 2.0 / 9.0)).abs() < 1e-15);
        assert!((s[2] - (0.4 - 2.0 / 9.0 + 1.0 / 13.0)).abs() < 1e-15);
        assert!((tr.tail_oscillation[0] - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(tr.tail_oscillation[2], 0.0);
    }
}

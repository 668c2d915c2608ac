//! Empirical decay exponent: least-squares slope of `log |err_k|` against
//! `log log |R_k|`, with `d1_hat` its negation.
//!
//! The window starts at the first step with `log |R_k| >= 1` (and no earlier
//! than `first_k`), ends at `last_k`, and drops points whose error is at or
//! below `error_floor`, where round-off rather than the algorithm sets the
//! value.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimator::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindow {
    pub first_k: usize,
    pub last_k: Option<usize>,
    pub error_floor: f64,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self { first_k: 1, last_k: None, error_floor: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub k: usize,
    /// `log |R_k|`.
    pub log_r_norm: f64,
    /// `max_i |theta - theta_hat^i_k|`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    pub window: RateWindow,
    /// Number of points inside the window.
    pub used: usize,
    pub d1_hat: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Max-node error series of a trajectory.
pub fn rate_points(trajectory: &TrajectoryRecord, theta: &DVector<f64>) -> Result<Vec<RatePoint>> {
    if theta.len() != trajectory.m {
        return Err(Error::Dimension(format!("true parameter has length {}, expected {}", theta.len(), trajectory.m)));
    }
    Ok(trajectory
        .steps
        .iter()
        .map(|s| RatePoint {
            k: s.k,
            log_r_norm: s.r.iter().copied().fold(f64::MIN, f64::max).ln(),
            error: s.theta_hat.iter().map(|t| (theta - t).norm()).fold(0.0, f64::max),
        })
        .collect())
}

pub fn rate_fit_series(points: Vec<RatePoint>, window: RateWindow) -> Result<RateFit> {
    let mut selected: Vec<&RatePoint> = points
        .iter()
        .filter(|p| p.k >= window.first_k && window.last_k.is_none_or(|l| p.k <= l) && p.log_r_norm >= 1.0)
        .collect();
    if let Some(bad) = selected.iter().find(|p| !(p.error.is_finite() && p.log_r_norm.is_finite())) {
        return Err(Error::NonFinite(format!("error series at step {}", bad.k)));
    }
    if window.error_floor > 0.0 {
        selected.retain(|p| p.error > window.error_floor);
    }
    if selected.iter().any(|p| p.error <= 0.0) {
        return Err(Error::NonFinite("zero error inside the fit window".into()));
    }
    let xs: Vec<f64> = selected.iter().map(|p| p.log_r_norm.ln()).collect();
    let ys: Vec<f64> = selected.iter().map(|p| p.error.ln()).collect();
    let count = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if xs.len() < 2 || sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Invalid(format!(
            "rate fit needs two distinct log log |R_k| values in the window, got {} points",
            xs.len()
        )));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residual =
        (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / count).sqrt();
    Ok(RateFit { used: selected.len(), points, window, d1_hat: -slope, intercept, residual })
}

pub fn rate_fit(trajectory: &TrajectoryRecord, theta: &DVector<f64>, window: RateWindow) -> Result<RateFit> {
    rate_fit_series(rate_points(trajectory, theta)?, window)
}

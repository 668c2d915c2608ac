//! Excitation diagnostics of a recorded trajectory.
//!
//! The network condition compares the eigenvalue ratio of
//! `(n/m) I_m + sum_i sum_{j<=k} phi^i_j (phi^i_j)^T` with
//! `N (log |R_k|)^{1/3}`, where `|R_k| = max_i r^i_k`. The same offset
//! `(n/m) I_m` is applied to every per-sensor Gram matrix so that rank
//! deficient sensors give a finite (but growing) ratio.
//!
//! Without a user-supplied `N`, "bounded" is judged on the sampled series
//! from `K_0` on (the first step with `log |R_k| >= 1`): the series passes when
//! the maximum over its second half is at most [`BOUNDED_GROWTH_FACTOR`]
//! times the maximum over its first half.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimator::TrajectoryRecord;
use crate::linalg;
use crate::numfmt::full_precision;

pub const DEFAULT_STRIDE: usize = 10;
pub const BOUNDED_GROWTH_FACTOR: f64 = 2.0;
/// Fewer samples than this past `K_0` gives an inconclusive verdict.
pub const MIN_VERDICT_SAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationConfig {
    /// Evaluate every `stride`-th step (and always the last one).
    pub stride: usize,
    /// Bound constant `N` to test against; fitted when absent.
    pub n_bound: Option<f64>,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self { stride: DEFAULT_STRIDE, n_bound: None }
    }
}

impl ExcitationConfig {
    /// Every step is evaluated.
    pub fn full() -> Self {
        Self { stride: 1, n_bound: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSample {
    pub k: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub ratio: f64,
    /// `log |R_k|`.
    pub log_r_norm: f64,
    /// `ratio / (log |R_k|)^{1/3}`, defined once `log |R_k| >= 1`.
    pub normalized: Option<f64>,
    /// `max_i r^i_k / min_i r^i_k`.
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorExcitation {
    /// 1-based.
    pub sensor: usize,
    /// Eigenvalue ratio of the offset per-sensor Gram at each sample.
    pub ratios: Vec<f64>,
    /// `ratio / (log r^i_k)^{1/3}` once `log r^i_k >= 1`.
    pub normalized: Vec<Option<f64>>,
    /// Bounded ratio.
    pub pe_verdict: Verdict,
    /// Ratio bounded by `N~ (log r^i_k)^{1/3}`.
    pub excitation_verdict: Verdict,
    /// Smallest `N~` covering every sample seen.
    pub fitted_n: Option<f64>,
    /// `max_k r^i_k / r^i_{k-1}`.
    pub max_energy_growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationReport {
    pub n: usize,
    pub m: usize,
    pub stride: usize,
    pub samples: Vec<ExcitationSample>,
    pub k0: Option<usize>,
    /// Smallest `N` for which the bound holds at every sample from `K_0`.
    pub fitted_n: Option<f64>,
    pub n_bound: Option<f64>,
    pub cooperative_verdict: Verdict,
    pub sensors: Vec<SensorExcitation>,
    pub max_condition_number: f64,
    /// `max_{i,k} r^i_k / r^i_{k-1}`; reported, not asserted.
    pub max_energy_growth: f64,
}

/// Judges whether a sampled series stays bounded; see the module docs.
pub fn bounded_verdict(series: &[f64]) -> Verdict {
    if series.iter().any(|v| !v.is_finite()) {
        return Verdict::Fail;
    }
    if series.len() < MIN_VERDICT_SAMPLES {
        return Verdict::Inconclusive;
    }
    let half = series.len() / 2;
    let early = series[..half].iter().copied().fold(f64::MIN, f64::max);
    let late = series[half..].iter().copied().fold(f64::MIN, f64::max);
    if late <= BOUNDED_GROWTH_FACTOR * early {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn eig_ratio(gram: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    let values = linalg::sym_eigenvalues(gram)?;
    let (lo, hi) = (values[0], values[values.len() - 1]);
    Ok((hi, lo, hi / lo))
}

pub fn excitation_report(trajectory: &TrajectoryRecord, config: ExcitationConfig) -> Result<ExcitationReport> {
    if trajectory.is_empty() {
        return Err(Error::Invalid("excitation report needs a nonempty trajectory".into()));
    }
    if config.stride == 0 {
        return Err(Error::Invalid("sampling stride must be at least 1".into()));
    }
    if let Some(nb) = config.n_bound {
        if !(nb > 0.0 && nb.is_finite()) {
            return Err(Error::Invalid(format!("bound constant N must be positive, got {nb}")));
        }
    }
    let (n, m) = (trajectory.n, trajectory.m);
    let offset = DMatrix::identity(m, m) * (n as f64 / m as f64);
    let mut network = offset.clone();
    let mut local = vec![offset; n];
    let mut prev_r = vec![1.0; n];
    let mut growth = vec![1.0f64; n];

    let mut samples = Vec::new();
    let mut sensor_ratios = vec![Vec::new(); n];
    let mut sensor_norm = vec![Vec::new(); n];
    let last = trajectory.steps.len();
    for step in &trajectory.steps {
        for i in 0..n {
            let p = &step.phi[i];
            network.ger(1.0, p, p, 1.0);
            local[i].ger(1.0, p, p, 1.0);
            growth[i] = growth[i].max(step.r[i] / prev_r[i]);
            prev_r[i] = step.r[i];
        }
        if step.k % config.stride != 0 && step.k != last {
            continue;
        }
        let (lambda_max, lambda_min, ratio) = eig_ratio(&network)?;
        let r_max = step.r.iter().copied().fold(f64::MIN, f64::max);
        let r_min = step.r.iter().copied().fold(f64::MAX, f64::min);
        let log_r_norm = r_max.ln();
        let normalized = (log_r_norm >= 1.0).then(|| ratio / log_r_norm.cbrt());
        samples.push(ExcitationSample {
            k: step.k,
            lambda_max,
            lambda_min,
            ratio,
            log_r_norm,
            normalized,
            condition_number: r_max / r_min,
        });
        for i in 0..n {
            let (_, _, ratio_i) = eig_ratio(&local[i])?;
            let log_ri = step.r[i].ln();
            sensor_ratios[i].push(ratio_i);
            sensor_norm[i].push((log_ri >= 1.0).then(|| ratio_i / log_ri.cbrt()));
        }
    }

    let k0 = samples.iter().find(|s| s.normalized.is_some()).map(|s| s.k);
    let tail: Vec<f64> = samples.iter().filter_map(|s| s.normalized).collect();
    let fitted_n = tail.iter().copied().reduce(f64::max);
    let cooperative_verdict = match config.n_bound {
        _ if tail.is_empty() => Verdict::Inconclusive,
        Some(nb) => {
            if tail.iter().all(|&v| v <= nb) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        None => bounded_verdict(&tail),
    };

    let sensors = (0..n)
        .map(|i| {
            let norm_tail: Vec<f64> = sensor_norm[i].iter().flatten().copied().collect();
            SensorExcitation {
                sensor: i + 1,
                pe_verdict: bounded_verdict(&sensor_ratios[i]),
                excitation_verdict: if norm_tail.is_empty() {
                    Verdict::Inconclusive
                } else {
                    bounded_verdict(&norm_tail)
                },
                fitted_n: norm_tail.iter().copied().reduce(f64::max),
                ratios: std::mem::take(&mut sensor_ratios[i]),
                normalized: std::mem::take(&mut sensor_norm[i]),
                max_energy_growth: growth[i],
            }
        })
        .collect();

    let max_condition_number = samples.iter().map(|s| s.condition_number).fold(1.0, f64::max);
    Ok(ExcitationReport {
        n,
        m,
        stride: config.stride,
        samples,
        k0,
        fitted_n,
        n_bound: config.n_bound,
        cooperative_verdict,
        sensors,
        max_condition_number,
        max_energy_growth: growth.iter().copied().fold(1.0, f64::max),
    })
}

impl ExcitationReport {
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> =
            ["k", "lambda_max", "lambda_min", "ratio", "log_r_norm", "normalized_ratio", "condition_number"]
                .map(String::from)
                .to_vec();
        header.extend((1..=self.n).map(|i| format!("sensor_ratio_{i}")));
        wtr.write_record(&header)?;
        for (idx, s) in self.samples.iter().enumerate() {
            let mut row = vec![
                s.k.to_string(),
                full_precision(s.lambda_max),
                full_precision(s.lambda_min),
                full_precision(s.ratio),
                full_precision(s.log_r_norm),
                s.normalized.map(full_precision).unwrap_or_default(),
                full_precision(s.condition_number),
            ];
            row.extend(self.sensors.iter().map(|se| full_precision(se.ratios[idx])));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn failing_sensors(&self, pick: impl Fn(&SensorExcitation) -> Verdict) -> usize {
        self.sensors.iter().filter(|s| pick(s) == Verdict::Fail).count()
    }
}

impl fmt::Display for ExcitationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"));
        writeln!(f, "excitation report: n = {}, m = {}, stride = {}", self.n, self.m, self.stride)?;
        writeln!(f, "  K0 (first sampled k with log|R_k| >= 1): {}", self.k0.map_or("n/a".into(), |k| k.to_string()))?;
        if let Some(last) = self.samples.last() {
            writeln!(f, "  final ratio lambda_max/lambda_min: {:.6e} at k = {}", last.ratio, last.k)?;
        }
        writeln!(f, "  fitted N: {}", opt(self.fitted_n))?;
        if let Some(nb) = self.n_bound {
            writeln!(f, "  supplied N: {nb}")?;
        }
        writeln!(f, "  cooperative excitation: {}", self.cooperative_verdict)?;
        writeln!(f, "  max condition number of R_k: {:.6e}", self.max_condition_number)?;
        writeln!(f, "  max energy growth r_k/r_(k-1): {:.6e}", self.max_energy_growth)?;
        let pe_fail = self.failing_sensors(|s| s.pe_verdict);
        let ex_fail = self.failing_sensors(|s| s.excitation_verdict);
        writeln!(f, "  per-sensor bounded ratio (PE): {} of {} FAIL", pe_fail, self.n)?;
        writeln!(f, "  per-sensor log-normalized ratio: {} of {} FAIL", ex_fail, self.n)?;
        for s in &self.sensors {
            writeln!(
                f,
                "    sensor {:>3}: PE {} | normalized {} | fitted N~ {}",
                s.sensor,
                s.pe_verdict,
                s.excitation_verdict,
                opt(s.fitted_n)
            )?;
        }
        Ok(())
    }
}

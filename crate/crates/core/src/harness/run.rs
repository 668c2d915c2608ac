//! Monte Carlo comparison of the cooperative and non-cooperative estimators.
//!
//! Every run draws one regressor set and one noise vector per step and feeds
//! the same draws to both estimators. Runs are independent and execute on a
//! rayon pool; their results are collected in run order and summed
//! sequentially, so the worker count never changes the output.

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{ExperimentConfig, RegressorSpec};
use crate::error::{Error, Result};
use crate::estimator::{init_network, noncooperative_step, DistributedSg, TrajectoryRecord, TrajectoryStep};
use crate::graph::{build_metropolis, connectivity_and_diameter};
use crate::signals::{self, seeding, NoiseSource, RegressorStream};

/// Runs processed per parallel batch; bounds memory held before reduction.
const BATCH: usize = 64;

/// Per-step MSEs over runs; row `k - 1` holds step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseSeries {
    pub n: usize,
    pub runs: usize,
    /// `coop[k-1][i]`.
    pub coop: Vec<Vec<f64>>,
    pub nonco: Vec<Vec<f64>>,
}

fn max_of(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::MIN, f64::max)
}

fn min_of(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::MAX, f64::min)
}

impl MseSeries {
    pub fn steps(&self) -> usize {
        self.coop.len()
    }

    pub fn max_coop(&self, k: usize) -> f64 {
        max_of(&self.coop[k - 1])
    }

    pub fn min_coop(&self, k: usize) -> f64 {
        min_of(&self.coop[k - 1])
    }

    pub fn max_nonco(&self, k: usize) -> f64 {
        max_of(&self.nonco[k - 1])
    }

    pub fn min_nonco(&self, k: usize) -> f64 {
        min_of(&self.nonco[k - 1])
    }
}

/// Draw accounting of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawCounts {
    pub steps: usize,
    pub regressor_draws: usize,
    pub noise_draws: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub series: MseSeries,
    /// `(run index, trajectory)` for the retained leading runs.
    pub trajectories: Vec<(usize, TrajectoryRecord)>,
    pub draws: Vec<DrawCounts>,
    pub diameter: usize,
    pub warnings: Vec<String>,
}

struct RunResult {
    coop: Vec<Vec<f64>>,
    nonco: Vec<Vec<f64>>,
    trajectory: Option<TrajectoryRecord>,
    draws: DrawCounts,
}

fn regressor_stream(config: &ExperimentConfig, seed: u64) -> Result<RegressorStream> {
    match &config.regressor {
        RegressorSpec::Example1 { growth, xi_std } => {
            RegressorStream::state_space(signals::example1_model(config.n, config.m, *growth, *xi_std)?, seed)
        }
        RegressorSpec::IidGaussian { std } => RegressorStream::iid_gaussian(config.n, config.m, *std, seed),
        RegressorSpec::Constant(v) => RegressorStream::constant(vec![v.clone(); config.n]),
    }
}

/// Rejects horizons the state-space generator cannot reach without
/// overflowing, before any run starts.
pub fn check_horizon(config: &ExperimentConfig) -> Result<()> {
    if let RegressorSpec::Example1 { growth, xi_std } = config.regressor {
        let models = signals::example1_model(1, config.m, growth, xi_std)?;
        let bound = models[0].log_magnitude_bound(config.steps)?;
        if bound > signals::REGRESSOR_LIMIT.ln() {
            return Err(Error::Invalid(format!(
                "horizon of {} steps overflows the regressor limit {:e} (growth {growth}); shorten `steps`",
                config.steps,
                signals::REGRESSOR_LIMIT
            )));
        }
    }
    Ok(())
}

fn single_run(config: &ExperimentConfig, net: &DistributedSg, run: usize, keep: bool) -> Result<RunResult> {
    let seed = seeding::run_seed(config.seed, run);
    let (n, m) = (config.n, config.m);
    let mut stream = regressor_stream(config, seed)?;
    let mut noise = NoiseSource::new(config.noise, seed);
    let mut coop = init_network(n, m, config.theta_hat_0.clone())?;
    let mut nonco = coop.clone();
    let mut trajectory = keep.then(|| {
        let mut t = TrajectoryRecord::new(n, m);
        t.seed = Some(seed);
        t.config_echo = Some(config.echo());
        t.initial = Some(coop.estimates.clone());
        t
    });
    let sq_err = |est: &[DVector<f64>]| -> Vec<f64> { est.iter().map(|e| (e - &config.theta).norm_squared()).collect() };

    let mut coop_mse = Vec::with_capacity(config.steps);
    let mut nonco_mse = Vec::with_capacity(config.steps);
    for k in 1..=config.steps {
        let phi = stream.step(k)?;
        let eps = noise.sample(k, n);
        let y: Vec<f64> = phi.iter().zip(&eps).map(|(p, e)| p.dot(&config.theta) + e).collect();
        net.step(&mut coop, &phi, &y)?;
        noncooperative_step(&mut nonco, net.params().mu, &phi, &y)?;
        coop_mse.push(sq_err(&coop.estimates));
        nonco_mse.push(sq_err(&nonco.estimates));
        if let Some(t) = trajectory.as_mut() {
            t.push(TrajectoryStep {
                k,
                phi,
                y,
                eps,
                r: coop.energies.clone(),
                xq: coop.diffused.clone(),
                theta_hat: coop.estimates.clone(),
            })?;
        }
    }
    let draws = DrawCounts { steps: config.steps, regressor_draws: stream.draws(), noise_draws: noise.draws() };
    Ok(RunResult { coop: coop_mse, nonco: nonco_mse, trajectory, draws })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let topology = config.topology.build(config.n)?;
    let diameter = connectivity_and_diameter(&topology).diameter.ok_or(Error::Disconnected)?;
    let weights = build_metropolis(&topology);
    let mut warnings = weights.warnings().to_vec();
    let net = DistributedSg::new(&topology, weights, config.params)?;
    if !config.params.is_strict() {
        warnings.push(format!(
            "mu*(1+4*nu) = {} reaches 1; convergence guarantees need a strict inequality",
            config.params.step_product()
        ));
    }
    check_horizon(config)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;

    let (n, steps) = (config.n, config.steps);
    let mut coop = vec![vec![0.0; n]; steps];
    let mut nonco = vec![vec![0.0; n]; steps];
    let mut trajectories = Vec::new();
    let mut draws = Vec::with_capacity(config.runs);
    for start in (0..config.runs).step_by(BATCH) {
        let end = (start + BATCH).min(config.runs);
        let batch: Vec<Result<RunResult>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|run| {
                    single_run(config, &net, run, run < config.keep_trajectories)
                        .map_err(|e| Error::Run { run, source: Box::new(e) })
                })
                .collect()
        });
        for (offset, result) in batch.into_iter().enumerate() {
            let result = result?;
            for (acc, row) in coop.iter_mut().zip(&result.coop) {
                acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            for (acc, row) in nonco.iter_mut().zip(&result.nonco) {
                acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            if let Some(t) = result.trajectory {
                trajectories.push((start + offset, t));
            }
            draws.push(result.draws);
        }
    }
    let scale = 1.0 / config.runs as f64;
    for row in coop.iter_mut().chain(nonco.iter_mut()) {
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(ExperimentOutcome {
        series: MseSeries { n, runs: config.runs, coop, nonco },
        trajectories,
        draws,
        diameter,
        warnings,
    })
}

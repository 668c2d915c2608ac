//! Random small instances for the inequality sweeps.
//!
//! Windows are generated the way a run produces them: every step draws
//! regressors, adds their energy to `r^i`, and diffuses `|phi|^2 / r` over the
//! graph, so the operators satisfy the same structural constraints as in a
//! real run. Regressor scales are log-uniform over four decades with a share
//! of exact zeros.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use super::config::SweepSettings;
use crate::analysis::{gain_eigen_range, lemma4_sum, lemma6_check, lemma8_lemma9_checks};
use crate::error::{Error, Result};
use crate::estimator::{build_stacked_operators, diffuse_energy, AlgorithmParams, StackedOperators};
use crate::graph::{build_metropolis, connectivity_and_diameter, laplacian_spectrum, LaplacianSpectrum, Topology, WeightMatrix};
use crate::signals::seeding::mix;

/// Tolerances the sweep verdicts are judged against.
pub const LEMMA3_TOL: f64 = 1e-12;
pub const LEMMA4_TOL: f64 = 1e-8;
pub const LEMMA6_TOL: f64 = 1e-10;
pub const LEMMA8_TOL: f64 = 1e-12;
pub const LEMMA9_TOL: f64 = 1e-12;

/// Generator for instance `index` of a sweep seeded with `seed`.
pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(index as u64 + 0xA11CE)))
}

/// A random spanning tree plus each remaining pair with probability `extra`.
pub fn random_connected_topology(n: usize, extra: f64, rng: &mut impl Rng) -> Result<Topology> {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    let t = Topology::new(n, edges)?;
    debug_assert!(connectivity_and_diameter(&t).connected);
    Ok(t)
}

/// Step sizes with `mu (1 + 4 nu) <= 1`; the boundary is hit exactly about
/// one time in ten unless `strict`.
pub fn random_step_sizes(q: usize, strict: bool, rng: &mut impl Rng) -> Result<AlgorithmParams> {
    let nu: f64 = rng.random_range(0.01..0.99);
    let cap = 1.0 / (1.0 + 4.0 * nu);
    if !strict && rng.random_bool(0.1) {
        let mut mu = cap;
        while mu * (1.0 + 4.0 * nu) > 1.0 {
            mu = mu.next_down();
        }
        return AlgorithmParams::new(mu, nu, q);
    }
    AlgorithmParams::new(cap * rng.random_range(0.02..0.999), nu, q)
}

#[derive(Debug, Clone)]
pub struct Network {
    pub topology: Topology,
    pub weights: WeightMatrix,
    pub spectrum: LaplacianSpectrum,
    pub diameter: usize,
}

pub fn random_network(n: usize, rng: &mut impl Rng) -> Result<Network> {
    let extra = rng.random_range(0.0..0.6);
    let topology = random_connected_topology(n, extra, rng)?;
    let weights = build_metropolis(&topology);
    let spectrum = laplacian_spectrum(&weights, &topology)?;
    let diameter = spectrum.diameter.ok_or(Error::Disconnected)?;
    Ok(Network { topology, weights, spectrum, diameter })
}

/// Consecutive operators of one simulated window of `len` steps.
pub fn random_window(
    net: &Network,
    params: &AlgorithmParams,
    m: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Result<Vec<StackedOperators>> {
    let n = net.topology.n();
    let mut r: Vec<f64> = (0..n).map(|_| 1.0 + 10f64.powf(rng.random_range(-2.0..3.0))).collect();
    let scales: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
    let mut window = Vec::with_capacity(len);
    for _ in 0..len {
        let phi: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                if rng.random_bool(0.1) {
                    DVector::zeros(m)
                } else {
                    let s = scales[i] * 10f64.powf(rng.random_range(-1.0..1.0));
                    DVector::from_fn(m, |_, _| s * rng.sample::<f64, _>(StandardNormal))
                }
            })
            .collect();
        let mut x0 = vec![0.0; n];
        for i in 0..n {
            let e = phi[i].norm_squared();
            r[i] += e;
            x0[i] = e / r[i];
        }
        let xq = diffuse_energy(&net.weights, &x0, params.q);
        window.push(build_stacked_operators(&net.weights, params, &phi, &r, &xq)?);
    }
    Ok(window)
}

/// One random instance: network, step sizes and a window.
pub struct Instance {
    pub net: Network,
    pub params: AlgorithmParams,
    pub window: Vec<StackedOperators>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizeChoice {
    /// Drawn per instance; `strict` excludes the boundary.
    Random { strict: bool },
    /// Fixed `mu` and `nu`; `q` follows each instance's diameter.
    Fixed { mu: f64, nu: f64 },
}

pub fn random_instance(
    rng: &mut impl Rng,
    max_n: usize,
    max_m: usize,
    len: usize,
    steps: StepSizeChoice,
) -> Result<Instance> {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let net = random_network(n, rng)?;
    let q = net.diameter.max(1) + rng.random_range(0..=1);
    let params = match steps {
        StepSizeChoice::Random { strict } => random_step_sizes(q, strict, rng)?,
        StepSizeChoice::Fixed { mu, nu } => AlgorithmParams::new(mu, nu, q)?,
    };
    let window = random_window(&net, &params, m, len, rng)?;
    Ok(Instance { net, params, window })
}

/// Worst observed value of one sweep against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub description: String,
    /// Largest violation margin seen; `<= 0` means every instance passed.
    pub worst_excess: f64,
    pub passed: bool,
}

impl std::fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} over {} instances, worst excess {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.description,
            self.instances,
            self.worst_excess
        )
    }
}

fn outcome(name: &'static str, instances: usize, description: String, worst_excess: f64) -> SweepOutcome {
    SweepOutcome { name, instances, description, worst_excess, passed: worst_excess <= 0.0 }
}

/// Eigenvalues of `mu G` inside `[0, 1]` on single random operators.
pub fn lemma3_sweep(settings: &SweepSettings, steps: StepSizeChoice, seed: u64) -> Result<SweepOutcome> {
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..settings.instances {
        let mut rng = instance_rng(seed, idx);
        let inst = random_instance(&mut rng, settings.max_n, settings.max_m, 1, steps)?;
        let (lo, hi) = gain_eigen_range(&inst.window[0], inst.params.mu)?;
        worst = worst.max((-LEMMA3_TOL - lo).max(hi - 1.0 - LEMMA3_TOL));
    }
    Ok(outcome("lemma3", settings.instances, format!("spectrum of mu*G_k within [-{LEMMA3_TOL:e}, 1+{LEMMA3_TOL:e}]"), worst))
}

/// `sum_j |Psi(k, j+1) B_j|^2 <= mn` on random windows.
pub fn lemma4_sweep(settings: &SweepSettings, steps: StepSizeChoice, seed: u64) -> Result<SweepOutcome> {
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..settings.instances {
        let mut rng = instance_rng(seed, idx);
        let inst = random_instance(&mut rng, settings.max_n, settings.max_m, settings.window, steps)?;
        let dim = inst.window[0].dim() as f64;
        worst = worst.max(lemma4_sum(&inst.window, &inst.params)? - dim - LEMMA4_TOL);
    }
    Ok(outcome("lemma4", settings.instances, format!("weighted transition sum <= mn + {LEMMA4_TOL:e}"), worst))
}

/// `lambda_min(sum G) >= sigma lambda_min(sum sum A^i)` on random windows.
pub fn lemma6_sweep(settings: &SweepSettings, steps: StepSizeChoice, seed: u64) -> Result<SweepOutcome> {
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..settings.instances {
        let mut rng = instance_rng(seed, idx);
        let inst = random_instance(&mut rng, settings.max_n, settings.max_m, settings.window, steps)?;
        let out = lemma6_check(&inst.window, &inst.net.spectrum, &inst.net.weights, &inst.params)?;
        worst = worst.max(out.rhs - out.lhs - LEMMA6_TOL);
    }
    Ok(outcome("lemma6", settings.instances, format!("lambda_min(sum G) >= sigma*lambda_min(sum A) - {LEMMA6_TOL:e}"), worst))
}

/// Determinant bound and `|Psi(k, j)| <= 1` on random windows.
pub fn lemma8_lemma9_sweep(settings: &SweepSettings, steps: StepSizeChoice, seed: u64) -> Result<(SweepOutcome, SweepOutcome)> {
    let (mut det_worst, mut norm_worst) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for idx in 0..settings.instances {
        let mut rng = instance_rng(seed, idx);
        let inst = random_instance(&mut rng, settings.max_n, settings.max_m, settings.window, steps)?;
        let rep = lemma8_lemma9_checks(&inst.window, &inst.params)?;
        det_worst = det_worst.max(-rep.min_determinant_margin - LEMMA8_TOL);
        norm_worst = norm_worst.max(rep.max_psi_norm - 1.0 - LEMMA9_TOL);
    }
    Ok((
        outcome("lemma8", settings.instances, format!("det(I - mu G_k) >= det(I - A_k)^(mn) - {LEMMA8_TOL:e}"), det_worst),
        outcome("lemma9", settings.instances, format!("|Psi(k, j)| <= 1 + {LEMMA9_TOL:e}"), norm_worst),
    ))
}

/// Every sweep with the given step sizes, in a fixed order.
pub fn run_all_sweeps(settings: &SweepSettings, mu: f64, nu: f64, seed: u64) -> Result<Vec<SweepOutcome>> {
    AlgorithmParams::new(mu, nu, 1)?;
    let fixed = StepSizeChoice::Fixed { mu, nu };
    let single = SweepSettings { window: 1, ..*settings };
    let mut out = vec![
        lemma3_sweep(&single, fixed, seed)?,
        lemma4_sweep(settings, fixed, seed)?,
        lemma6_sweep(settings, fixed, seed)?,
    ];
    let (l8, l9) = lemma8_lemma9_sweep(settings, fixed, seed)?;
    out.push(l8);
    out.push(l9);
    Ok(out)
}

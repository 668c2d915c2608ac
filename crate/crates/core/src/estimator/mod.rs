//! The distributed SG recursion, the non-cooperative baseline and the stacked
//! matrix-form oracle.
//!
//! One call to [`network_step`] consumes the regressors `phi^i_k` and the
//! observations `y^i = theta^T phi^i_k + eps^i` paired with them and performs:
//!
//! 1. `r^i_k = r^i_{k-1} + |phi^i_k|^2`, `x^i(0) = |phi^i_k|^2 / r^i_k`;
//! 2. `Q` rounds of neighbor averaging `x^i(q+1) = sum_j a_ij x^j(q)`;
//! 3. the simultaneous update, for every sensor `i`,
//!    `z^i = x^i(Q) sum_l a_li (th^i - th^l)` and
//!    `th^i <- th^i + mu phi^i/r^i (y^i - phi^i . th^i) - mu nu sum_j a_ij (z^i - z^j)`.
//!
//! All `z^i` and all new estimates are computed from the estimates as they
//! were before the call.

mod stacked;
mod trajectory;

pub use stacked::{
    build_stacked_operators, build_stacked_operators_capped, matrix_form_step, stack, StackedOperators,
    DEFAULT_OPERATOR_CAP,
};
pub use trajectory::{TrajectoryRecord, TrajectoryStep};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{self, Topology, WeightMatrix};

/// Step sizes and diffusion depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    pub mu: f64,
    pub nu: f64,
    /// Number of diffusion rounds `Q`.
    pub q: usize,
}

impl AlgorithmParams {
    /// Requires `mu, nu` in `(0, 1)`, `Q >= 1` and `mu (1 + 4 nu) <= 1`.
    pub fn new(mu: f64, nu: f64, q: usize) -> Result<Self> {
        for (name, v) in [("mu", mu), ("nu", nu)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Invalid(format!("step size {name} must lie in (0, 1), got {v}")));
            }
        }
        if q == 0 {
            return Err(Error::Invalid("diffusion depth Q must be at least 1".into()));
        }
        let product = mu * (1.0 + 4.0 * nu);
        if product > 1.0 {
            return Err(Error::StepSizes { mu, nu, product });
        }
        Ok(Self { mu, nu, q })
    }

    /// `mu (1 + 4 nu)`.
    pub fn step_product(&self) -> f64 {
        self.mu * (1.0 + 4.0 * self.nu)
    }

    /// The convergence theorems need `mu (1 + 4 nu) < 1`; equality is only
    /// enough for `0 <= mu G_k <= I`.
    pub fn is_strict(&self) -> bool {
        self.step_product() < 1.0
    }

    /// Checks `Q >= D(G)` against a connected topology.
    pub fn validate_for(&self, topology: &Topology) -> Result<()> {
        let conn = graph::connectivity_and_diameter(topology);
        let diameter = conn.diameter.ok_or(Error::Disconnected)?;
        if self.q < diameter {
            return Err(Error::DiffusionTooShallow { q: self.q, diameter });
        }
        Ok(())
    }
}

/// `max(1, diameter)`.
pub fn default_q(diameter: usize) -> usize {
    diameter.max(1)
}

/// Per-sensor estimates, regressor energies and diffused energies.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// Number of updates performed so far.
    pub k: usize,
    pub estimates: Vec<DVector<f64>>,
    /// `r^i_k = 1 + sum_{j <= k} |phi^i_j|^2`.
    pub energies: Vec<f64>,
    /// `x^i_k(Q)` of the most recent update (zeros before the first).
    pub diffused: Vec<f64>,
}

impl NetworkState {
    pub fn n(&self) -> usize {
        self.estimates.len()
    }

    pub fn m(&self) -> usize {
        self.estimates.first().map_or(0, |e| e.len())
    }

    /// `col(th^1, ..., th^n)`.
    pub fn stacked(&self) -> DVector<f64> {
        stack(&self.estimates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialEstimate {
    Zero,
    Shared(DVector<f64>),
    PerSensor(Vec<DVector<f64>>),
}

pub fn init_network(n: usize, m: usize, initial: InitialEstimate) -> Result<NetworkState> {
    if n == 0 || m == 0 {
        return Err(Error::Invalid("need n >= 1 and m >= 1".into()));
    }
    let estimates = match initial {
        InitialEstimate::Zero => vec![DVector::zeros(m); n],
        InitialEstimate::Shared(v) => {
            if v.len() != m {
                return Err(Error::Dimension(format!("initial estimate has length {}, expected {m}", v.len())));
            }
            vec![v; n]
        }
        InitialEstimate::PerSensor(vs) => {
            if vs.len() != n || vs.iter().any(|v| v.len() != m) {
                return Err(Error::Dimension(format!("expected {n} initial estimates of length {m}")));
            }
            vs
        }
    };
    if estimates.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial estimate".into()));
    }
    Ok(NetworkState { k: 0, estimates, energies: vec![1.0; n], diffused: vec![0.0; n] })
}

/// `A^Q x0` by `Q` successive neighbor averages.
pub fn diffuse_energy(w: &WeightMatrix, x0: &[f64], q: usize) -> Vec<f64> {
    graph::repeated_average(w, x0, q)
}

#[inline]
fn sg_increment(theta: &DVector<f64>, phi: &DVector<f64>, r: f64, y: f64, mu: f64) -> DVector<f64> {
    phi * (mu * (y - phi.dot(theta)) / r)
}

fn check_inputs(n: usize, m: usize, phi: &[DVector<f64>], y: &[f64]) -> Result<()> {
    if phi.len() != n || y.len() != n || phi.iter().any(|p| p.len() != m) {
        return Err(Error::Dimension(format!(
            "expected {n} regressors of length {m} and {n} observations"
        )));
    }
    if phi.iter().flat_map(|p| p.iter()).chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regressors or observations".into()));
    }
    Ok(())
}

/// One synchronous update of the distributed SG algorithm.
pub fn network_step(
    state: &mut NetworkState,
    w: &WeightMatrix,
    params: &AlgorithmParams,
    phi: &[DVector<f64>],
    y: &[f64],
) -> Result<()> {
    let (n, m) = (state.n(), state.m());
    if w.n() != n {
        return Err(Error::Dimension(format!("weights for {} nodes, state has {n}", w.n())));
    }
    check_inputs(n, m, phi, y)?;

    let mut x0 = vec![0.0; n];
    for i in 0..n {
        let energy = phi[i].norm_squared();
        state.energies[i] += energy;
        x0[i] = energy / state.energies[i];
    }
    let xq = diffuse_energy(w, &x0, params.q);

    let old = &state.estimates;
    let z: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut disagreement = DVector::zeros(m);
            for &(l, _) in w.neighbors(i) {
                disagreement.axpy(w.get(l, i), &(&old[i] - &old[l]), 1.0);
            }
            disagreement * xq[i]
        })
        .collect();

    let next: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut consensus = DVector::zeros(m);
            for &(j, a_ij) in w.neighbors(i) {
                consensus.axpy(a_ij, &(&z[i] - &z[j]), 1.0);
            }
            &old[i] + sg_increment(&old[i], &phi[i], state.energies[i], y[i], params.mu)
                - consensus * (params.mu * params.nu)
        })
        .collect();

    if next.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("estimates after step {}", state.k + 1)));
    }
    state.estimates = next;
    state.diffused = xq;
    state.k += 1;
    Ok(())
}

/// Standard SG update of one sensor: `r' = r + |phi|^2`,
/// `th' = th + mu phi/r' (y - phi . th)`.
pub fn standard_sg_step(
    theta: &DVector<f64>,
    r: f64,
    phi: &DVector<f64>,
    y: f64,
    mu: f64,
) -> Result<(DVector<f64>, f64)> {
    if theta.len() != phi.len() {
        return Err(Error::Dimension(format!(
            "estimate of length {} with regressor of length {}",
            theta.len(),
            phi.len()
        )));
    }
    if r.is_nan() || r < 1.0 {
        return Err(Error::Invalid(format!("regressor energy must be >= 1, got {r}")));
    }
    if !y.is_finite() || !mu.is_finite() || theta.iter().chain(phi.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("standard SG inputs".into()));
    }
    let r_next = r + phi.norm_squared();
    let next = theta + sg_increment(theta, phi, r_next, y, mu);
    Ok((next, r_next))
}

/// Every sensor runs [`standard_sg_step`] on its own data.
pub fn noncooperative_step(state: &mut NetworkState, mu: f64, phi: &[DVector<f64>], y: &[f64]) -> Result<()> {
    let (n, m) = (state.n(), state.m());
    check_inputs(n, m, phi, y)?;
    for i in 0..n {
        let (next, r) = standard_sg_step(&state.estimates[i], state.energies[i], &phi[i], y[i], mu)?;
        state.estimates[i] = next;
        state.energies[i] = r;
    }
    state.k += 1;
    Ok(())
}

/// A validated network: weights, step sizes, and a diffusion depth no
/// smaller than the diameter of the (connected) topology.
#[derive(Debug, Clone)]
pub struct DistributedSg {
    weights: WeightMatrix,
    params: AlgorithmParams,
    diameter: usize,
}

impl DistributedSg {
    pub fn new(topology: &Topology, weights: WeightMatrix, params: AlgorithmParams) -> Result<Self> {
        if weights.n() != topology.n() {
            return Err(Error::Dimension("weights and topology disagree on n".into()));
        }
        params.validate_for(topology)?;
        let diameter = graph::connectivity_and_diameter(topology).diameter.unwrap_or(0);
        Ok(Self { weights, params, diameter })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn step(&self, state: &mut NetworkState, phi: &[DVector<f64>], y: &[f64]) -> Result<()> {
        network_step(state, &self.weights, &self.params, phi, y)
    }
}

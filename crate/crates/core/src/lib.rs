//! Distributed stochastic-gradient parameter estimation over sensor networks.
//!
//! Sensors `i = 1..n` observe `y^i = theta^T phi^i_k + eps^i` and jointly
//! estimate `theta` in `R^m`. Each sensor runs a normalized stochastic-gradient
//! update on its own data and pulls towards its neighbors' estimates with a
//! consensus term scaled by a diffused regressor energy.
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | topologies, Metropolis weights, Laplacian spectra |
//! | [`signals`] | regressor streams and observation noise, counter-based seeding |
//! | [`estimator`] | the per-node recursion, the standard SG baseline, the dense matrix-form twin, trajectories |
//! | [`analysis`] | excitation diagnostics, transition matrices, inequality checks, rate fits |
//! | [`harness`] | experiment configs, Monte Carlo runs, CSV/SVG output, random-instance sweeps |

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod linalg;
mod numfmt;
pub mod signals;

pub use error::{Error, Result};
pub use estimator::{
    build_stacked_operators, diffuse_energy, init_network, matrix_form_step, network_step, standard_sg_step,
    AlgorithmParams, DistributedSg, InitialEstimate, NetworkState, StackedOperators, TrajectoryRecord,
    TrajectoryStep,
};
pub use graph::{build_metropolis, connectivity_and_diameter, laplacian_spectrum, LaplacianSpectrum, Topology, WeightMatrix};
pub use numfmt::full_precision;
pub use signals::{example1_model, sample_noise, NoiseKind, NoiseModel, RegressorStream, StateSpaceRegressorModel};

pub use nalgebra::{DMatrix, DVector};

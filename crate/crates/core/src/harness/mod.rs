//! Experiment configuration, Monte Carlo runs, output files and the
//! random-instance sweeps.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, RegressorSpec, SweepSettings, TopologySource};
pub use output::{emit_outputs, render_svg, write_mse_csv};
pub use run::{run_experiment, DrawCounts, ExperimentOutcome, MseSeries};
pub use sweep::{run_all_sweeps, SweepOutcome};

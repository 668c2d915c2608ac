//! Diagnostics on recorded trajectories: excitation conditions, transition
//! matrices, inequality checks on the stacked operators, noise partial sums
//! and empirical decay rates.

pub mod excitation;
pub mod lemmas;
pub mod noise;
pub mod rate;
pub mod transition;

pub use excitation::{excitation_report, ExcitationConfig, ExcitationReport, Verdict};
pub use lemmas::{gain_eigen_range, lemma4_sum, lemma6_check, lemma8_lemma9_checks, Lemma6Outcome, Lemma89Report};
pub use noise::{noise_accumulation_trace, NoiseTrace};
pub use rate::{rate_fit, rate_fit_series, RateFit, RatePoint, RateWindow};
pub use transition::{operators_from_trajectory, psi_norm_series, transition_matrix, TransitionProbe};

//! Noise-reduction (NR) estimation of the first principal component for
//! high-dimension, low-sample-size data, confidence intervals for the first
//! contribution ratio, and F-based equality tests of two covariance matrices.
//!
//! The entry point for a single data set is [`NrEstimate::fit`]; the tests
//! live in [`inference`] and the Monte Carlo harness in [`simulation`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod dist;
pub mod error;
pub mod inference;
pub mod matrix;
pub mod nr;
pub mod simulation;

pub use dist::{QuantilePair, Seed};
pub use error::{Error, Result};
pub use inference::{
    asymptotic_power, contribution_ci, direction_h, jarque_bera, optimal_ab, test_f1, test_f2,
    test_f3, Alternative, CiResult, JarqueBera, Statistic, TestOutcome,
};
pub use matrix::{center_columns, dual_covariance, sym_eigen, DataMatrix, SpectralDecomposition, SymMatrix};
pub use nr::{contribution_ratio, kappa_tilde, nr_eigenvalues, pc_direction, pc_scores, score_mse, NrEstimate};
pub use simulation::{
    gen_ar1, gen_spiked, gen_two_sample, run_estimation_mc, run_test_mc, EstimationRecord, McSummary,
    Model, Moments, SpikeScenario, TestRecord, TwoSampleScenario, Hypothesis,
};

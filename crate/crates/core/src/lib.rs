//! Estimation of Gaussian graphical models by penalized selection of
//! per-variable regression neighborhoods.
//!
//! Modules, bottom-up:
//! - [`specfun`]: Fisher tails, the `EDkhi` quantile and penalty tables.
//! - [`graphs`]: graphs, directed shapes and the four model collections.
//! - [`fitting`]: samples and least-squares column fits.
//! - [`selector`]: the penalized criterion and the search strategies.
//! - [`genmodel`]: simulated graphs, precision matrices and samples.
//! - [`mb_baseline`]: lasso neighborhood selection.
//! - [`metrics`]: risk, oracle risk, power, FDR and the simulation drivers.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fitting;
pub mod genmodel;
pub mod graphs;
pub mod mb_baseline;
pub mod metrics;
pub mod selector;
pub mod specfun;

pub use error::{Error, Result};
pub use fitting::{fit_column, fit_model, ColumnFit, FitResult, RegressionMatrix, Sample};
pub use genmodel::{build_ground_truth, sample_er_graph, sample_gaussian, GroundTruth, RngSeed};
pub use graphs::{CollectionSpec, DirectedShape, Family, Graph, Shape};
pub use mb_baseline::{mb_estimate, CombineRule, LassoConfig, MbEstimate};
pub use metrics::{
    edge_metrics, msep_loss, oracle_risk, oracle_risk_analytic, run_benchmark,
    run_prop1_experiment, BenchConfig, BenchReport, Density, Method, OracleMode, Prop1Config,
    Prop1Report,
};
pub use selector::{criterion, select, validate_degree_condition, SelectionResult, Strategy};
pub use specfun::{build_penalty_table, dkhi, edkhi, fisher_tail, penalty, PenaltyTable};

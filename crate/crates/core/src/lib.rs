// SPDX-License-Identifier: MIT OR Apache-2.0

//! Self-normalized U-statistic change-point testing and estimation for
//! high-dimensional time series.
//!
//! The statistic of order `q` (an even integer) is an unbiased two-sample
//! estimator of `|Delta|_q^q`, divided by a normalizer built from the same
//! statistic on subsamples, which makes it free of nuisance parameters under
//! the null. Small `q` targets dense mean changes, large `q` sparse ones, and
//! the adaptive test combines several orders.

pub mod adaptive;
pub mod datamodel;
pub mod error;
pub mod estimate;
pub mod evalmetrics;
pub mod experiment;
pub mod kernel;
pub mod nulldist;
pub mod simgen;
pub mod sntest;
pub mod ustat;

pub use adaptive::{adaptive_decision, combine_p_values, AdaptiveResult};
pub use datamodel::{validate_matrix, DataMatrix, EvenOrder, Interval, QSet, Segmentation};
pub use error::{Error, Result};
pub use estimate::{
    draw_intervals, single_cp_estimate, wbs_adaptive, wbs_detect, WbsConfig, WbsResult,
};
pub use evalmetrics::{adjusted_rand_index, count_mse, ContingencyTable};
pub use kernel::Engine;
pub use nulldist::{p_value, simulate_null_samples, wbs_threshold, NullKind, NullSpec, NullTable};
pub use simgen::{CovarianceSpec, MeanShiftSpec, SbmSpec};
pub use sntest::{scan_statistic, sn_statistic, PrepOptions, Preprocessing, SnProfile};
pub use ustat::{distinct_product_sum, u_profile, u_stat, u_stat_naive, PrefixPowerSums};

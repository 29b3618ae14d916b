// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo drivers for size, power, location accuracy and multiple
//! change-point recovery. Replicate `r` uses data seed `derive_seed(seed, r)`,
//! so results do not depend on the number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::adaptive_decision;
use crate::datamodel::{DataMatrix, EvenOrder, QSet, Segmentation};
use crate::error::{Error, Result};
use crate::estimate::{single_cp_estimate, wbs_adaptive, wbs_detect, WbsConfig};
use crate::evalmetrics::{adjusted_rand_index, count_mse, mean};
use crate::nulldist::{default_p_sim, obtain_table, NullSpec, NullTable};
use crate::simgen::{
    apply_mean_shifts, derive_seed, gen_gaussian, gen_sbm_series, CovarianceSpec, MeanShiftSpec,
    SbmSpec,
};
use crate::sntest::sn_value;

/// A data-generating process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Design {
    Gaussian {
        n: usize,
        p: usize,
        cov: CovarianceSpec,
        shifts: MeanShiftSpec,
    },
    Network {
        n: usize,
        sbm: SbmSpec,
        /// Intensity of each time point.
        mu: Vec<f64>,
    },
}

impl Design {
    pub fn n(&self) -> usize {
        match self {
            Design::Gaussian { n, .. } | Design::Network { n, .. } => *n,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            Design::Gaussian { p, .. } => *p,
            Design::Network { sbm, .. } => sbm.m * (sbm.m - 1) / 2,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<DataMatrix> {
        match self {
            Design::Gaussian { n, p, cov, shifts } => {
                apply_mean_shifts(&gen_gaussian(*n, *p, *cov, seed)?, shifts)
            }
            Design::Network { n, sbm, mu } => gen_sbm_series(*n, sbm, mu, seed),
        }
    }
}

/// Single-test null tables for each order, simulated at the design's shape.
pub fn single_test_tables(
    orders: &QSet,
    n: usize,
    p: usize,
    reps: usize,
    seed: u64,
) -> Result<BTreeMap<EvenOrder, NullTable>> {
    orders
        .iter()
        .map(|q| {
            let spec = NullSpec::single_test(q, n, default_p_sim(p), reps, seed);
            Ok((q, obtain_table(&spec)?))
        })
        .collect()
}

/// Empirical rejection rates of the single-order tests and the adaptive test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionRates {
    pub reps: usize,
    pub alpha: f64,
    /// Rejection rate of `stat > quantile(1 - alpha)` per order.
    pub per_q: BTreeMap<EvenOrder, f64>,
    /// Rejection rate of the adaptive test over all orders.
    pub adaptive: f64,
}

/// Statistic and p-value of every order for one dataset.
pub fn per_order_tests(
    x: &DataMatrix,
    tables: &BTreeMap<EvenOrder, NullTable>,
) -> Result<BTreeMap<EvenOrder, (f64, f64)>> {
    tables
        .iter()
        .map(|(&q, table)| {
            let stat = sn_value(x, q)?;
            Ok((q, (stat, table.p_value(stat)?)))
        })
        .collect()
}

pub fn rejection_rates(
    design: &Design,
    tables: &BTreeMap<EvenOrder, NullTable>,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<RejectionRates> {
    if reps == 0 {
        return Err(Error::EmptyList);
    }
    let orders = QSet::new(tables.keys().map(|q| q.get()))?;
    let crit: BTreeMap<EvenOrder, f64> = tables
        .iter()
        .map(|(&q, t)| Ok((q, t.quantile(1.0 - alpha)?)))
        .collect::<Result<_>>()?;
    let outcomes = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let x = design.generate(derive_seed(seed, r))?;
            let tests = per_order_tests(&x, tables)?;
            let single: Vec<bool> = tests.iter().map(|(q, (s, _))| *s > crit[q]).collect();
            let p = tests.iter().map(|(q, (_, pv))| (*q, *pv)).collect();
            let ada = adaptive_decision(&orders, &p, alpha)?.reject;
            Ok((single, ada))
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = |f: &dyn Fn(&(Vec<bool>, bool)) -> bool| {
        outcomes.iter().filter(|o| f(o)).count() as f64 / reps as f64
    };
    let per_q = orders
        .iter()
        .enumerate()
        .map(|(i, q)| (q, rate(&|o| o.0[i])))
        .collect();
    Ok(RejectionRates {
        reps,
        alpha,
        per_q,
        adaptive: rate(&|o| o.1),
    })
}

/// Location accuracy of the argmax estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationSummary {
    pub reps: usize,
    pub rmse: f64,
    pub median_abs_error: f64,
    pub estimates: Vec<usize>,
}

pub fn location_accuracy(
    design: &Design,
    q: EvenOrder,
    true_k: usize,
    reps: usize,
    seed: u64,
) -> Result<LocationSummary> {
    if reps == 0 {
        return Err(Error::EmptyList);
    }
    let n = design.n() as f64;
    let estimates = (0..reps as u64)
        .into_par_iter()
        .map(|r| Ok(single_cp_estimate(&design.generate(derive_seed(seed, r))?, q)?.0))
        .collect::<Result<Vec<usize>>>()?;
    let errors: Vec<f64> = estimates
        .iter()
        .map(|&k| (k as f64 - true_k as f64).abs() / n)
        .collect();
    let rmse = mean(&errors.iter().map(|e| e * e).collect::<Vec<_>>())?.sqrt();
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_abs_error = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    Ok(LocationSummary {
        reps,
        rmse,
        median_abs_error,
        estimates,
    })
}

/// Single-order or adaptive wild binary segmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "orders", rename_all = "kebab-case")]
pub enum WbsMethod {
    Single(EvenOrder),
    Adaptive(QSet),
}

/// Recovery of a known segmentation over replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbsSummary {
    pub reps: usize,
    pub mse: f64,
    pub ari: f64,
    /// Replications by `N_hat - N`.
    pub count_errors: BTreeMap<i64, usize>,
    pub threshold: Option<f64>,
    pub estimates: Vec<Segmentation>,
}

pub fn wbs_recovery(
    design: &Design,
    truth: &Segmentation,
    method: &WbsMethod,
    cfg: &WbsConfig,
    reps: usize,
    seed: u64,
) -> Result<WbsSummary> {
    if reps == 0 {
        return Err(Error::EmptyList);
    }
    let (n, p) = (design.n(), design.p());
    let (threshold, tables) = match method {
        WbsMethod::Single(q) => (Some(cfg.threshold(*q, n, p)?), BTreeMap::new()),
        WbsMethod::Adaptive(orders) => (None, cfg.calibrate(orders, n, p)?),
    };
    let estimates = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let x = design.generate(derive_seed(seed, r))?;
            let result = match method {
                WbsMethod::Single(q) => wbs_detect(&x, *q, cfg, threshold.expect("set above"))?,
                WbsMethod::Adaptive(orders) => wbs_adaptive(&x, orders, cfg, &tables)?,
            };
            Ok(result.breaks)
        })
        .collect::<Result<Vec<Segmentation>>>()?;
    let aris = estimates
        .iter()
        .map(|s| adjusted_rand_index(s, truth))
        .collect::<Result<Vec<_>>>()?;
    let mut count_errors = BTreeMap::new();
    for s in &estimates {
        *count_errors
            .entry(s.num_breaks() as i64 - truth.num_breaks() as i64)
            .or_insert(0) += 1;
    }
    Ok(WbsSummary {
        reps,
        mse: count_mse(&estimates, truth)?,
        ari: mean(&aris)?,
        count_errors,
        threshold,
        estimates,
    })
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Combining per-order p-values into one adaptive test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datamodel::{EvenOrder, QSet};
use crate::error::{Error, Result};

/// Outcome of the adaptive test over a set of orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub orders: QSet,
    /// `q -> (statistic, p-value)`; the statistic is `NaN` when only p-values
    /// were supplied.
    pub per_q: BTreeMap<EvenOrder, (f64, f64)>,
    pub p_ada: f64,
    pub p_adjusted: f64,
    pub alpha: f64,
    pub reject: bool,
}

fn lookup(orders: &QSet, p: &BTreeMap<EvenOrder, f64>) -> Result<Vec<f64>> {
    orders
        .iter()
        .map(|q| {
            let v = *p.get(&q).ok_or(Error::MissingPValue(q.get()))?;
            if v > 0.0 && v <= 1.0 {
                Ok(v)
            } else {
                Err(Error::OutOfRange(format!("p-value {v} for q = {q}")))
            }
        })
        .collect()
}

/// `(p_ada, p_adjusted)` with `p_ada = min_q p_q` and
/// `p_adjusted = 1 - (1 - p_ada)^|I|`.
pub fn combine_p_values(orders: &QSet, p: &BTreeMap<EvenOrder, f64>) -> Result<(f64, f64)> {
    let values = lookup(orders, p)?;
    let p_ada = values.into_iter().fold(f64::INFINITY, f64::min);
    let adjusted = 1.0 - (1.0 - p_ada).powi(orders.len() as i32);
    Ok((p_ada, adjusted.clamp(0.0, 1.0)))
}

/// Level each single-order p-value is compared with: `1 - (1 - alpha)^(1/|I|)`.
pub fn per_q_level(alpha: f64, size: usize) -> f64 {
    1.0 - (1.0 - alpha).powf(1.0 / size as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("alpha {alpha} not in (0, 1)")))
    }
}

/// Rejects when `p_adjusted <= alpha`.
pub fn adaptive_decision(
    orders: &QSet,
    p: &BTreeMap<EvenOrder, f64>,
    alpha: f64,
) -> Result<AdaptiveResult> {
    check_alpha(alpha)?;
    let (p_ada, p_adjusted) = combine_p_values(orders, p)?;
    let per_q = orders.iter().map(|q| (q, (f64::NAN, p[&q]))).collect();
    Ok(AdaptiveResult {
        orders: orders.clone(),
        per_q,
        p_ada,
        p_adjusted,
        alpha,
        reject: p_adjusted <= alpha,
    })
}

/// [`adaptive_decision`] that also records the observed statistics.
pub fn adaptive_decision_with_stats(
    orders: &QSet,
    stats: &BTreeMap<EvenOrder, (f64, f64)>,
    alpha: f64,
) -> Result<AdaptiveResult> {
    let p: BTreeMap<EvenOrder, f64> = stats.iter().map(|(q, (_, pv))| (*q, *pv)).collect();
    let mut result = adaptive_decision(orders, &p, alpha)?;
    for (q, entry) in result.per_q.iter_mut() {
        entry.0 = stats[q].0;
    }
    Ok(result)
}

/// The per-order route: reject when some `p_q` is at most [`per_q_level`].
pub fn per_q_reject(orders: &QSet, p: &BTreeMap<EvenOrder, f64>, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    let level = per_q_level(alpha, orders.len());
    Ok(lookup(orders, p)?.into_iter().any(|v| v <= level))
}

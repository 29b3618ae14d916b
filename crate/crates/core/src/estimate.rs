// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point location estimation: the single-change argmax estimator and
//! wild binary segmentation with one order or adaptively over several.
//!
//! The interval sample is drawn once per run and filtered at each recursion
//! level. Because the maximum over an interval depends only on the interval,
//! every sampled interval is evaluated once up front and the recursion only
//! compares stored maxima.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::per_q_level;
use crate::datamodel::{DataMatrix, EvenOrder, Interval, QSet, Segmentation};
use crate::error::{Error, Result};
use crate::kernel::{interval_maxima, Engine, IntervalMax};
use crate::nulldist::{
    default_p_sim, obtain_table, wbs_threshold, IntervalSampling, NullSpec, NullTable,
    DEFAULT_WBS_REPS,
};
use crate::sntest::{sn_statistic, PrepOptions, Preprocessing};

/// `(k_hat, k_hat / n)`: the maximizing split of the full-sample statistic.
pub fn single_cp_estimate(x: &DataMatrix, q: EvenOrder) -> Result<(usize, f64)> {
    let prof = sn_statistic(x, q, Interval::full(x.n()), PrepOptions::default())?;
    Ok((prof.argmax, prof.argmax as f64 / x.n() as f64))
}

/// `m` intervals inside `within` with `e - s >= min_len`, uniform over all
/// such pairs and drawn with replacement.
pub fn draw_intervals(
    n: usize,
    m: usize,
    min_len: usize,
    seed: u64,
    within: Interval,
) -> Result<Vec<Interval>> {
    within.check_within(n)?;
    let len = within.len();
    if len <= min_len {
        return Err(Error::NoAdmissibleInterval {
            s: within.s,
            e: within.e,
            min_len,
        });
    }
    // pairs with e - s = d number len - d
    let span = len - min_len;
    let total = span * (span + 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m)
        .map(|_| {
            let mut idx = rng.random_range(0..total);
            let mut d = min_len;
            loop {
                let count = len - d;
                if idx < count {
                    let s = within.s + idx;
                    return Interval { s, e: s + d };
                }
                idx -= count;
                d += 1;
            }
        })
        .collect())
}

/// How calibration replicates are turned into a per-order p-value in the
/// adaptive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueOrientation {
    /// `(1 + #{replicates >= Q}) / (R + 1)`; small means significant.
    #[default]
    Standard,
    /// `#{Q > replicate} / R`, compared with the running level as is.
    Literal,
}

/// Starting level of the adaptive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelMode {
    /// Start from `p0`.
    #[default]
    Running,
    /// Start from `1 - (1 - p0)^(1/|I|)`.
    PerQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbsConfig {
    /// Number of random intervals `M`.
    pub intervals: usize,
    /// Minimum `e - s`; `None` means `4 q_max - 1`.
    pub min_len: Option<usize>,
    /// Quantile level of the single-order threshold.
    pub level: f64,
    /// Calibration replications.
    pub reps: usize,
    pub interval_seed: u64,
    pub calibration_seed: u64,
    /// Running level of the adaptive search.
    pub p0: f64,
    pub orientation: PValueOrientation,
    pub level_mode: LevelMode,
    pub engine: Engine,
    pub prep: PrepOptions,
}

impl Default for WbsConfig {
    fn default() -> Self {
        Self {
            intervals: 1000,
            min_len: None,
            level: 0.95,
            reps: DEFAULT_WBS_REPS,
            interval_seed: 1,
            calibration_seed: 2,
            p0: 0.05,
            orientation: PValueOrientation::Standard,
            level_mode: LevelMode::Running,
            engine: Engine::Auto,
            prep: PrepOptions::default(),
        }
    }
}

impl WbsConfig {
    /// Resolved minimum interval length for the largest order in use.
    pub fn min_len_for(&self, q_max: EvenOrder) -> Result<usize> {
        if self.intervals == 0 {
            return Err(Error::InvalidConfig("M must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!("level {} not in (0, 1)", self.level)));
        }
        let floor = 4 * q_max.get() - 1;
        match self.min_len {
            None => Ok(floor),
            Some(v) if v >= floor => Ok(v),
            Some(v) => Err(Error::InvalidConfig(format!(
                "min_len {v} is below 4 q_max - 1 = {floor}"
            ))),
        }
    }

    /// Calibration parameters matching a run on `n x p` data whose largest
    /// order is `q_max`.
    pub fn calibration_spec(&self, q: EvenOrder, q_max: EvenOrder, n: usize, p: usize) -> Result<NullSpec> {
        let sampling = IntervalSampling {
            intervals: self.intervals,
            intervals_seed: self.interval_seed,
            min_len: self.min_len_for(q_max)?,
        };
        Ok(NullSpec::wbs_max(
            q,
            n,
            default_p_sim(p),
            self.reps,
            self.calibration_seed,
            sampling,
        ))
    }

    /// Simulated single-order threshold at [`WbsConfig::level`].
    pub fn threshold(&self, q: EvenOrder, n: usize, p: usize) -> Result<f64> {
        wbs_threshold(&self.calibration_spec(q, q, n, p)?, self.level)
    }

    /// Calibration tables for every order of `orders`.
    pub fn calibrate(&self, orders: &QSet, n: usize, p: usize) -> Result<BTreeMap<EvenOrder, NullTable>> {
        orders
            .iter()
            .map(|q| Ok((q, obtain_table(&self.calibration_spec(q, orders.max(), n, p)?)?)))
            .collect()
    }
}

/// One detected change point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakRecord {
    pub location: usize,
    /// The sampled interval whose maximum produced the break.
    pub interval: Interval,
    pub q: EvenOrder,
    pub value: f64,
    /// Calibration p-value (adaptive search only).
    pub p_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbsResult {
    pub breaks: Segmentation,
    /// Sorted by location.
    pub per_break: Vec<BreakRecord>,
    pub orders: QSet,
    /// Threshold used by the single-order search.
    pub threshold: Option<f64>,
    pub config: WbsConfig,
}

struct Sample {
    intervals: Vec<Interval>,
    min_len: usize,
}

impl Sample {
    fn draw(n: usize, cfg: &WbsConfig, q_max: EvenOrder) -> Result<Self> {
        let min_len = cfg.min_len_for(q_max)?;
        let intervals = match draw_intervals(n, cfg.intervals, min_len, cfg.interval_seed, Interval::full(n)) {
            Ok(v) => v,
            Err(Error::NoAdmissibleInterval { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        Ok(Self { intervals, min_len })
    }

    // Best sampled interval inside [s, e]; the smallest index wins ties.
    fn best(&self, maxima: &[Option<IntervalMax>], s: usize, e: usize) -> Option<(usize, IntervalMax)> {
        let mut best: Option<(usize, IntervalMax)> = None;
        for (i, (iv, m)) in self.intervals.iter().zip(maxima).enumerate() {
            if iv.s < s || iv.e > e {
                continue;
            }
            if let Some(m) = m {
                if best.is_none_or(|(_, b)| m.value > b.value) {
                    best = Some((i, *m));
                }
            }
        }
        best
    }
}

fn finish(
    n: usize,
    mut per_break: Vec<BreakRecord>,
    orders: QSet,
    threshold: Option<f64>,
    config: WbsConfig,
) -> Result<WbsResult> {
    per_break.sort_by_key(|b| b.location);
    Ok(WbsResult {
        breaks: Segmentation::new(n, per_break.iter().map(|b| b.location))?,
        per_break,
        orders,
        threshold,
        config,
    })
}

/// Wild binary segmentation with one order and threshold `xi`.
pub fn wbs_detect(x: &DataMatrix, q: EvenOrder, cfg: &WbsConfig, xi: f64) -> Result<WbsResult> {
    let n = x.n();
    let sample = Sample::draw(n, cfg, q)?;
    let data = Preprocessing::fit(x, cfg.prep).apply(x);
    let maxima = interval_maxima(&data, q, &sample.intervals, cfg.engine);

    let mut found = Vec::new();
    let mut stack = vec![(1, n)];
    while let Some((s, e)) = stack.pop() {
        if e < s + sample.min_len {
            continue;
        }
        let Some((i, best)) = sample.best(&maxima, s, e) else {
            continue;
        };
        if best.value > xi {
            let b0 = best.argmax;
            found.push(BreakRecord {
                location: b0,
                interval: sample.intervals[i],
                q,
                value: best.value,
                p_value: None,
            });
            stack.push((b0 + 1, e));
            stack.push((s, b0));
        }
    }
    finish(n, found, QSet::single(q), Some(xi), *cfg)
}

/// Adaptive wild binary segmentation over `orders`, calibrated by wbs-max
/// tables simulated with the same `n` and interval sample.
pub fn wbs_adaptive(
    x: &DataMatrix,
    orders: &QSet,
    cfg: &WbsConfig,
    calibration: &BTreeMap<EvenOrder, NullTable>,
) -> Result<WbsResult> {
    let n = x.n();
    let sample = Sample::draw(n, cfg, orders.max())?;
    let mut tables = Vec::with_capacity(orders.len());
    for q in orders.iter() {
        let table = calibration.get(&q).ok_or(Error::MissingCalibration(q.get()))?;
        if table.n_sim != n || table.intervals != Some(cfg.intervals) {
            return Err(Error::InvalidConfig(format!(
                "calibration for q = {q} was simulated with n = {}, M = {:?}",
                table.n_sim, table.intervals
            )));
        }
        tables.push(table);
    }
    let data = Preprocessing::fit(x, cfg.prep).apply(x);
    let maxima: Vec<Vec<Option<IntervalMax>>> = orders
        .iter()
        .map(|q| interval_maxima(&data, q, &sample.intervals, cfg.engine))
        .collect();
    let start = match cfg.level_mode {
        LevelMode::Running => cfg.p0,
        LevelMode::PerQ => per_q_level(cfg.p0, orders.len()),
    };

    let mut found = Vec::new();
    let mut stack = vec![(1, n)];
    while let Some((s, e)) = stack.pop() {
        if e < s + sample.min_len {
            continue;
        }
        let mut level = start;
        let mut chosen: Option<BreakRecord> = None;
        for (j, q) in orders.iter().enumerate() {
            let Some((i, best)) = sample.best(&maxima[j], s, e) else {
                continue;
            };
            let p = match cfg.orientation {
                PValueOrientation::Standard => tables[j].p_value(best.value)?,
                PValueOrientation::Literal => tables[j].exceedance_fraction(best.value)?,
            };
            if p < level {
                level = p;
                chosen = Some(BreakRecord {
                    location: best.argmax,
                    interval: sample.intervals[i],
                    q,
                    value: best.value,
                    p_value: Some(p),
                });
            }
        }
        if let Some(rec) = chosen {
            let b0 = rec.location;
            found.push(rec);
            stack.push((b0 + 1, e));
            stack.push((s, b0));
        }
    }
    finish(n, found, orders.clone(), None, *cfg)
}

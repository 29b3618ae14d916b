// SPDX-License-Identifier: MIT OR Apache-2.0

//! Self-normalized statistics.
//!
//! `W(k; s, m)` divides the summed squared profiles of the two sides of a split
//! by the interval length, and the test statistic on `[s, e]` is
//! `max_k U(k; s, e)^2 / W(k; s, e)` over `k` in `s+2q-1 ..= e-2q`. The ratio
//! has matching degree `2q` in the data, so it is invariant under `cX + 1b^T`;
//! that invariance is what makes the default centering and pooled scaling
//! exact.

use serde::{Deserialize, Serialize};

use crate::datamodel::{DataMatrix, EvenOrder, Interval};
use crate::error::{Error, Result};
use crate::kernel::{self, ConstantRuns, IntervalScan};
use crate::ustat::u_profile;

/// Which numerical-stability transforms to apply before forming `U` and `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepOptions {
    pub center: bool,
    pub scale: bool,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            center: true,
            scale: true,
        }
    }
}

impl PrepOptions {
    pub const RAW: PrepOptions = PrepOptions {
        center: false,
        scale: false,
    };
}

/// A fitted centering/scaling transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub center: bool,
    pub scale: bool,
    /// Subtracted column means (zeros when centering is off).
    pub column_means: Vec<f64>,
    /// Pooled standard deviation the data is divided by (1 when scaling is off).
    pub pooled_scale: f64,
}

impl Preprocessing {
    /// Fits column means and the pooled standard deviation around them.
    /// A constant matrix gets scale 1.
    pub fn fit(x: &DataMatrix, opts: PrepOptions) -> Self {
        let means = x.column_means();
        let pooled_scale = if opts.scale {
            let ss: f64 = x
                .rows()
                .map(|row| {
                    row.iter()
                        .zip(&means)
                        .map(|(v, m)| (v - m) * (v - m))
                        .sum::<f64>()
                })
                .sum();
            let sd = (ss / (x.n() * x.p()) as f64).sqrt();
            if sd.is_finite() && sd > 0.0 {
                sd
            } else {
                1.0
            }
        } else {
            1.0
        };
        let column_means = if opts.center {
            means
        } else {
            vec![0.0; x.p()]
        };
        Self {
            center: opts.center,
            scale: opts.scale,
            column_means,
            pooled_scale,
        }
    }

    pub fn apply(&self, x: &DataMatrix) -> DataMatrix {
        if !self.center && !self.scale {
            return x.clone();
        }
        let inv = 1.0 / self.pooled_scale;
        let values = x
            .rows()
            .flat_map(|row| {
                row.iter()
                    .zip(&self.column_means)
                    .map(move |(v, m)| (v - m) * inv)
            })
            .collect();
        DataMatrix::new(x.n(), x.p(), values).expect("affine image of finite data is finite")
    }
}

/// Per-split quantities of the self-normalized statistic on one interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnProfile {
    pub q: EvenOrder,
    pub interval: Interval,
    /// Candidate splits `s+2q-1 ..= e-2q`.
    pub splits: Vec<usize>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// `u^2 / w`; zero at splits where both sides are constant.
    pub ratio: Vec<f64>,
    /// Maximizing split (smallest on ties).
    pub argmax: usize,
    pub value: f64,
    pub preprocessing: Preprocessing,
}

/// `W(k; s, m)` on the raw data.
pub fn self_normalizer(x: &DataMatrix, q: EvenOrder, k: usize, s: usize, m: usize) -> Result<f64> {
    let qv = q.get();
    if s < 1 || m > x.n() || k + 1 < s + 2 * qv || k + 2 * qv > m {
        return Err(Error::InvalidSplit { k, s, m });
    }
    let runs = ConstantRuns::new(x);
    if runs.split_degenerate(s, k, m) {
        return Err(Error::DegenerateNormalizer);
    }
    let left: f64 = u_profile(x, q, Interval { s, e: k })?
        .iter()
        .map(|v| v * v)
        .sum();
    let right: f64 = u_profile(x, q, Interval { s: k + 1, e: m })?
        .iter()
        .map(|v| v * v)
        .sum();
    let w = (left + right) / (m + 1 - s) as f64;
    if w <= 0.0 {
        return Err(Error::DegenerateNormalizer);
    }
    Ok(w)
}

pub(crate) fn check_scan_interval(x: &DataMatrix, q: EvenOrder, iv: Interval) -> Result<()> {
    iv.check_within(x.n())?;
    let required = 4 * q.get();
    if iv.len() < required {
        return Err(Error::IntervalTooShort {
            len: iv.len(),
            required,
        });
    }
    Ok(())
}

/// Self-normalized statistic on `iv` (the full-sample test statistic when
/// `iv = [1, n]`).
pub fn sn_statistic(
    x: &DataMatrix,
    q: EvenOrder,
    iv: Interval,
    opts: PrepOptions,
) -> Result<SnProfile> {
    check_scan_interval(x, q, iv)?;
    let prep = Preprocessing::fit(x, opts);
    let data = prep.apply(x);
    let runs = ConstantRuns::new(&data);
    let scan = IntervalScan::compute(&data, q, iv);
    let (w, ratio, best) = kernel::ratios(&scan, &runs);
    let best = best.ok_or(Error::DegenerateNormalizer)?;
    Ok(SnProfile {
        q,
        interval: iv,
        splits: scan.splits().collect(),
        u: scan.u,
        w,
        ratio,
        argmax: best.argmax,
        value: best.value,
        preprocessing: prep,
    })
}

/// Maximum of the statistic on an already-preprocessed matrix, or `None` if
/// every split is degenerate.
pub(crate) fn interval_max(
    data: &DataMatrix,
    runs: &ConstantRuns,
    q: EvenOrder,
    iv: Interval,
) -> Option<kernel::IntervalMax> {
    let scan = IntervalScan::compute(data, q, iv);
    kernel::ratios(&scan, runs).2
}

/// Full-sample statistic value only; the workhorse of null simulation.
pub fn sn_value(x: &DataMatrix, q: EvenOrder) -> Result<f64> {
    check_scan_interval(x, q, Interval::full(x.n()))?;
    let data = Preprocessing::fit(x, PrepOptions::default()).apply(x);
    let runs = ConstantRuns::new(&data);
    interval_max(&data, &runs, q, Interval::full(x.n()))
        .map(|m| m.value)
        .ok_or(Error::DegenerateNormalizer)
}

/// Endpoint stride used by [`scan_statistic`] when none is given.
pub fn default_scan_stride(n: usize) -> usize {
    (n / 100).max(1)
}

/// The two maximizing sub-statistics of the scan statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanStatistic {
    pub value: f64,
    /// `(l2, l1, ratio)`: best split `l1` of a prefix `[1, l2]`.
    pub prefix: (usize, usize, f64),
    /// `(m1, m2, ratio)`: best split `m2` of a suffix `[m1, n]`.
    pub suffix: (usize, usize, f64),
}

/// Multiple-change scan statistic: best prefix-sample ratio plus best
/// suffix-sample ratio. Prefix ends `l2` and suffix starts `m1` are visited on
/// a grid of the given stride (always including `n` and `1`); `stride = 1` is
/// exhaustive.
pub fn scan_statistic(
    x: &DataMatrix,
    q: EvenOrder,
    stride: usize,
    opts: PrepOptions,
) -> Result<ScanStatistic> {
    let n = x.n();
    check_scan_interval(x, q, Interval::full(n))?;
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    let min_len = 4 * q.get();
    let data = Preprocessing::fit(x, opts).apply(x);
    let runs = ConstantRuns::new(&data);

    let mut ends: Vec<usize> = (min_len..=n).step_by(stride).collect();
    if ends.last() != Some(&n) {
        ends.push(n);
    }
    let mut starts: Vec<usize> = (1..=n + 1 - min_len).step_by(stride).collect();
    if starts.last() != Some(&(n + 1 - min_len)) {
        starts.push(n + 1 - min_len);
    }

    let mut prefix: Option<(usize, usize, f64)> = None;
    for &l2 in &ends {
        if let Some(m) = interval_max(&data, &runs, q, Interval { s: 1, e: l2 }) {
            if prefix.is_none_or(|b| m.value > b.2) {
                prefix = Some((l2, m.argmax, m.value));
            }
        }
    }
    let mut suffix: Option<(usize, usize, f64)> = None;
    for &m1 in &starts {
        if let Some(m) = interval_max(&data, &runs, q, Interval { s: m1, e: n }) {
            if suffix.is_none_or(|b| m.value > b.2) {
                suffix = Some((m1, m.argmax, m.value));
            }
        }
    }
    match (prefix, suffix) {
        (Some(a), Some(b)) => Ok(ScanStatistic {
            value: a.2 + b.2,
            prefix: a,
            suffix: b,
        }),
        _ => Err(Error::DegenerateNormalizer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ustat::u_stat_naive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(v: usize) -> EvenOrder {
        EvenOrder::new(v).unwrap()
    }

    fn random_matrix(seed: u64, n: usize, p: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        DataMatrix::new(n, p, values).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    fn brute_w(x: &DataMatrix, q: EvenOrder, k: usize, s: usize, m: usize) -> f64 {
        let qv = q.get();
        let left: f64 = (s + qv - 1..=k - qv)
            .map(|t| u_stat_naive(x, q, t, s, k).unwrap().powi(2))
            .sum();
        let right: f64 = (k + qv..=m - qv)
            .map(|t| u_stat_naive(x, q, t, k + 1, m).unwrap().powi(2))
            .sum();
        (left + right) / (m + 1 - s) as f64
    }

    fn brute_ratio(x: &DataMatrix, q: EvenOrder, k: usize, s: usize, m: usize) -> f64 {
        u_stat_naive(x, q, k, s, m).unwrap().powi(2) / brute_w(x, q, k, s, m)
    }

    #[test]
    fn normalizer_matches_brute_force() {
        let x = random_matrix(1, 14, 2);
        for k in 4..=10 {
            let w = self_normalizer(&x, q(2), k, 1, 14).unwrap();
            assert!(rel(w, brute_w(&x, q(2), k, 1, 14)) < 1e-9);
        }
        assert!(matches!(
            self_normalizer(&x, q(2), 3, 1, 14),
            Err(Error::InvalidSplit { .. })
        ));
    }

    #[test]
    fn normalizer_homogeneity() {
        let x = random_matrix(2, 14, 2);
        let y = x.map(|v| 3.0 * v);
        let (a, b) = (
            self_normalizer(&x, q(2), 7, 1, 14).unwrap(),
            self_normalizer(&y, q(2), 7, 1, 14).unwrap(),
        );
        assert!(rel(b, 3f64.powi(4) * a) < 1e-9);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let x = DataMatrix::new(20, 3, vec![0.7; 60]).unwrap();
        assert_eq!(
            self_normalizer(&x, q(2), 8, 1, 20),
            Err(Error::DegenerateNormalizer)
        );
        assert_eq!(
            sn_statistic(&x, q(2), Interval::full(20), PrepOptions::default()),
            Err(Error::DegenerateNormalizer)
        );
    }

    #[test]
    fn statistic_matches_brute_force() {
        let x = random_matrix(3, 16, 2);
        let prof = sn_statistic(&x, q(2), Interval::full(16), PrepOptions::RAW).unwrap();
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for k in 4..=12 {
            let r = brute_ratio(&x, q(2), k, 1, 16);
            if r > best {
                best = r;
                arg = k;
            }
        }
        assert_eq!(prof.argmax, arg);
        assert!(rel(prof.value, best) < 1e-9);
        assert_eq!(prof.splits, (4..=12).collect::<Vec<_>>());
        assert!(prof.ratio.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn statistic_affine_invariant() {
        let x = random_matrix(4, 40, 5);
        let y = x.affine(-2.5, &[1.0, -3.0, 10.0, 0.5, 7.0]).unwrap();
        for qv in [2, 4] {
            let a = sn_statistic(&x, q(qv), Interval::full(40), PrepOptions::default()).unwrap();
            let b = sn_statistic(&y, q(qv), Interval::full(40), PrepOptions::default()).unwrap();
            assert_eq!(a.argmax, b.argmax);
            assert!(rel(a.value, b.value) < 1e-8);
            let raw = sn_statistic(&x, q(qv), Interval::full(40), PrepOptions::RAW).unwrap();
            assert!(rel(a.value, raw.value) < 1e-8);
        }
    }

    #[test]
    fn subinterval_has_no_leakage() {
        let x = random_matrix(5, 50, 3);
        let iv = Interval::new(11, 42, 50).unwrap();
        let a = sn_statistic(&x, q(2), iv, PrepOptions::RAW).unwrap();
        let sub = x.submatrix(iv).unwrap();
        let b = sn_statistic(&sub, q(2), Interval::full(32), PrepOptions::RAW).unwrap();
        assert_eq!(a.argmax, b.argmax + 10);
        assert!(rel(a.value, b.value) < 1e-10);
        assert!(matches!(
            sn_statistic(&x, q(4), Interval::new(1, 15, 50).unwrap(), PrepOptions::RAW),
            Err(Error::IntervalTooShort { .. })
        ));
    }

    #[test]
    fn scan_matches_exhaustive_pairs() {
        let x = random_matrix(6, 20, 2);
        let qv = 2;
        let scan = scan_statistic(&x, q(qv), 1, PrepOptions::RAW).unwrap();
        let mut first = f64::NEG_INFINITY;
        for l2 in 4 * qv..=20 {
            for l1 in 2 * qv..=l2 - 2 * qv {
                first = first.max(brute_ratio(&x, q(qv), l1, 1, l2));
            }
        }
        let mut second = f64::NEG_INFINITY;
        for m1 in 1..=20 {
            for m2 in m1 + 2 * qv - 1..=20 - 2 * qv {
                if m2 + 1 >= m1 + 2 * qv {
                    second = second.max(brute_ratio(&x, q(qv), m2, m1, 20));
                }
            }
        }
        assert!(rel(scan.value, first + second) < 1e-9);
        // dominates any single admissible pair
        assert!(scan.value >= brute_ratio(&x, q(qv), 6, 1, 15) - 1e-12);
        let y = x.affine(4.0, &[2.0, -1.0]).unwrap();
        let scan_y = scan_statistic(&y, q(qv), 1, PrepOptions::default()).unwrap();
        assert!(rel(scan.value, scan_y.value) < 1e-8);
    }
}

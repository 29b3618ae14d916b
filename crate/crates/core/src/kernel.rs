// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hot loops shared by the test statistics and the WBS search.
//!
//! The distinct-product sums `D_c` of a growing window are maintained with the
//! one-point update `D_c += c * x * D_(c-1)` (descending `c`), which is exact
//! and `O(q)` per coordinate and appended point. Windows always grow away from
//! the split so nothing is ever removed.

use std::collections::{HashMap, HashSet};

use ndarray::{linalg::general_mat_mul, Array2};
use serde::{Deserialize, Serialize};

use crate::datamodel::{DataMatrix, EvenOrder, Interval};
use crate::ustat::{binomial, falling_factorial};

/// `D_c` for `c = 0..=q` of every coordinate, laid out `[c][l]`.
#[derive(Clone, Debug)]
pub(crate) struct Block {
    q: usize,
    p: usize,
    vals: Vec<f64>,
}

impl Block {
    pub(crate) fn new(q: usize, p: usize) -> Self {
        let mut b = Self {
            q,
            p,
            vals: vec![0.0; (q + 1) * p],
        };
        b.reset();
        b
    }

    pub(crate) fn reset(&mut self) {
        self.vals[..self.p].fill(1.0);
        self.vals[self.p..].fill(0.0);
    }

    #[inline]
    pub(crate) fn order(&self, c: usize) -> &[f64] {
        &self.vals[c * self.p..(c + 1) * self.p]
    }

    /// Adds one observation to the window.
    #[inline]
    pub(crate) fn extend(&mut self, row: &[f64]) {
        let p = self.p;
        for c in (1..=self.q).rev() {
            let cf = c as f64;
            let (lo, hi) = self.vals.split_at_mut(c * p);
            let prev = &lo[(c - 1) * p..];
            let cur = &mut hi[..p];
            for ((d, &x), &pv) in cur.iter_mut().zip(row).zip(prev) {
                *d += cf * x * pv;
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Falling factorials `P(a, b)` for `a <= max_len`, `b <= q`, and the signed
/// binomials of the split expansion.
#[derive(Clone, Debug)]
pub(crate) struct Coefficients {
    q: usize,
    ff: Vec<f64>,
    signed_binom: Vec<f64>,
}

impl Coefficients {
    pub(crate) fn new(q: EvenOrder, max_len: usize) -> Self {
        let q = q.get();
        let mut ff = vec![0.0; (max_len + 1) * (q + 1)];
        for a in 0..=max_len {
            for b in 0..=q {
                ff[a * (q + 1) + b] = falling_factorial(a as i64, b);
            }
        }
        let signed_binom = (0..=q)
            .map(|c| {
                let sign = if (q - c).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * binomial(q, c)
            })
            .collect();
        Self {
            q,
            ff,
            signed_binom,
        }
    }

    #[inline]
    fn ff(&self, a: usize, b: usize) -> f64 {
        self.ff[a * (self.q + 1) + b]
    }

    /// Left factor `(-1)^(q-c) C(q,c) P(L-c, q-c)`; requires `left >= q`.
    #[inline]
    pub(crate) fn left_factor(&self, c: usize, left: usize) -> f64 {
        self.signed_binom[c] * self.ff(left - c, self.q - c)
    }

    /// Right factor `P(R-q+c, c)`; requires `right >= q`.
    #[inline]
    pub(crate) fn right_factor(&self, c: usize, right: usize) -> f64 {
        self.ff(right - self.q + c, c)
    }

    pub(crate) fn fill(&self, left: usize, right: usize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.left_factor(c, left) * self.right_factor(c, right);
        }
    }
}

/// `U` for a split given the windows on each side.
#[inline]
pub(crate) fn cross(left: &Block, right: &Block, coefs: &[f64]) -> f64 {
    let q = left.q;
    coefs
        .iter()
        .enumerate()
        .map(|(c, w)| w * dot(left.order(c), right.order(q - c)))
        .sum()
}

/// For every row `b` (1-based), the smallest `a` such that every column is
/// constant on `[a, b]`.
#[derive(Clone, Debug)]
pub(crate) struct ConstantRuns {
    from: Vec<usize>,
}

impl ConstantRuns {
    pub(crate) fn new(x: &DataMatrix) -> Self {
        let p = x.p();
        let mut col_start = vec![1usize; p];
        let mut from = vec![0usize; x.n() + 1];
        from[1] = 1;
        for b in 2..=x.n() {
            let (prev, cur) = (x.row(b - 2), x.row(b - 1));
            let mut worst = 1;
            for l in 0..p {
                if cur[l] != prev[l] {
                    col_start[l] = b;
                }
                worst = worst.max(col_start[l]);
            }
            from[b] = worst;
        }
        Self { from }
    }

    #[inline]
    pub(crate) fn constant(&self, a: usize, b: usize) -> bool {
        self.from[b] <= a
    }

    #[inline]
    pub(crate) fn split_degenerate(&self, s: usize, k: usize, e: usize) -> bool {
        self.constant(s, k) && self.constant(k + 1, e)
    }
}

/// `U(t; s, m)` for `t` in `s+q-1 ..= m-q`; the caller checks `len >= 2q`.
pub(crate) fn profile(x: &DataMatrix, q: EvenOrder, iv: Interval) -> Vec<f64> {
    let (qv, p) = (q.get(), x.p());
    let (s, m) = (iv.s, iv.e);
    let (tmin, tmax) = (s + qv - 1, m - qv);
    let coefs = Coefficients::new(q, iv.len());
    // suffix windows [t+1, m] for t = tmin..=tmax
    let mut suffix = Vec::with_capacity(tmax + 1 - tmin);
    let mut right = Block::new(qv, p);
    for t in (tmin..m).rev() {
        right.extend(x.row(t));
        if t <= tmax {
            suffix.push(right.clone());
        }
    }
    suffix.reverse();
    let mut left = Block::new(qv, p);
    let mut buf = vec![0.0; qv + 1];
    let mut out = Vec::with_capacity(suffix.len());
    for t in s..=tmax {
        left.extend(x.row(t - 1));
        if t >= tmin {
            coefs.fill(t - s + 1, m - t, &mut buf);
            out.push(cross(&left, &suffix[t - tmin], &buf));
        }
    }
    out
}

/// Everything the self-normalized ratio needs on one interval `[s, e]`:
/// `U(k; s, e)`, `SS(s, k)` and `SS(k+1, e)` for `k` in `s+2q-1 ..= e-2q`,
/// where `SS(a, b)` is the sum of squared profile entries of `[a, b]`.
#[derive(Clone, Debug)]
pub(crate) struct IntervalScan {
    pub(crate) s: usize,
    pub(crate) e: usize,
    pub(crate) kmin: usize,
    pub(crate) u: Vec<f64>,
    pub(crate) ss_left: Vec<f64>,
    pub(crate) ss_right: Vec<f64>,
}

impl IntervalScan {
    /// Requires `iv.len() >= 4q`.
    pub(crate) fn compute(x: &DataMatrix, q: EvenOrder, iv: Interval) -> Self {
        let (qv, p) = (q.get(), x.p());
        let (s, e) = (iv.s, iv.e);
        let (kmin, kmax) = (s + 2 * qv - 1, e - 2 * qv);
        let nk = kmax + 1 - kmin;
        let coefs = Coefficients::new(q, iv.len());
        let mut buf = vec![0.0; qv + 1];
        let mut u = vec![0.0; nk];
        let mut ss_left = vec![0.0; nk];
        let mut ss_right = vec![0.0; nk];
        let mut left = Block::new(qv, p);
        let mut right = Block::new(qv, p);

        // Left windows [s, t] grow with t; for each t the right window
        // [t+1, b] grows with b.
        for t in s..=kmax {
            left.extend(x.row(t - 1));
            if t + 1 < s + qv {
                continue;
            }
            let need_ss = t + qv <= kmax;
            let need_u = t >= kmin;
            if !need_ss && !need_u {
                continue;
            }
            let upper = if need_u { e } else { kmax };
            let lcount = t - s + 1;
            right.reset();
            for b in t + 1..=upper {
                right.extend(x.row(b - 1));
                let rcount = b - t;
                if rcount < qv {
                    continue;
                }
                if need_ss && b <= kmax {
                    coefs.fill(lcount, rcount, &mut buf);
                    let v = cross(&left, &right, &buf);
                    ss_left[b - kmin] += v * v;
                } else if need_u && b == e {
                    coefs.fill(lcount, rcount, &mut buf);
                    u[t - kmin] = cross(&left, &right, &buf);
                }
            }
        }

        // Right windows [t+1, e] grow as t decreases; for each t the left
        // window [a, t] grows as a decreases.
        right.reset();
        for t in (kmin + qv..e).rev() {
            right.extend(x.row(t));
            let rcount = e - t;
            if rcount < qv {
                continue;
            }
            left.reset();
            for a in (kmin + 1..=t).rev() {
                left.extend(x.row(a - 1));
                let lcount = t - a + 1;
                if lcount < qv {
                    continue;
                }
                coefs.fill(lcount, rcount, &mut buf);
                let v = cross(&left, &right, &buf);
                ss_right[a - 1 - kmin] += v * v;
            }
        }

        Self {
            s,
            e,
            kmin,
            u,
            ss_left,
            ss_right,
        }
    }

    pub(crate) fn splits(&self) -> impl Iterator<Item = usize> + '_ {
        self.kmin..self.kmin + self.u.len()
    }

    /// `W(k; s, e)` for each split.
    pub(crate) fn normalizers(&self) -> Vec<f64> {
        let len = (self.e + 1 - self.s) as f64;
        self.ss_left
            .iter()
            .zip(&self.ss_right)
            .map(|(a, b)| (a + b) / len)
            .collect()
    }
}

/// Maximal self-normalized ratio over the splits of one interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct IntervalMax {
    pub(crate) value: f64,
    pub(crate) argmax: usize,
}

/// Ratios `U^2 / W` with degenerate splits set to zero, plus the maximum over
/// the non-degenerate ones (`None` when every split is degenerate).
pub(crate) fn ratios(
    scan: &IntervalScan,
    runs: &ConstantRuns,
) -> (Vec<f64>, Vec<f64>, Option<IntervalMax>) {
    let w = scan.normalizers();
    let mut ratio = vec![0.0; w.len()];
    let mut best: Option<IntervalMax> = None;
    for (i, k) in scan.splits().enumerate() {
        if runs.split_degenerate(scan.s, k, scan.e) || w[i] <= 0.0 {
            continue;
        }
        let r = scan.u[i] * scan.u[i] / w[i];
        ratio[i] = r;
        if best.is_none_or(|b| r > b.value) {
            best = Some(IntervalMax { value: r, argmax: k });
        }
    }
    (w, ratio, best)
}

/// Self-normalized maxima of every interval of a series, built in
/// `O(n^3 p q)` with one matrix product per split.
///
/// `U(t; a, b)` for all `a <= t-q+1` and `b >= t+q` is the product of an
/// `A x (q+1)p` matrix of scaled left windows and the transpose of a
/// `B x (q+1)p` matrix of scaled right windows.
#[derive(Clone, Debug)]
pub(crate) struct SubsampleTable {
    n: usize,
    q: usize,
    best: Vec<Option<IntervalMax>>,
}

impl SubsampleTable {
    pub(crate) fn build(x: &DataMatrix, q: EvenOrder) -> Self {
        let (n, qv) = (x.n(), q.get());
        let stride = n + 2;
        let mut ss = vec![0.0; stride * stride];
        let mut best: Vec<Option<IntervalMax>> = vec![None; stride * stride];
        if n < 4 * qv {
            return Self { n, q: qv, best };
        }
        let runs = ConstantRuns::new(x);
        let coefs = Coefficients::new(q, n);

        // U(t; a, b) for the pass-two pairs (a <= t-2q+1, b >= t+2q).
        let mut kept: Vec<Array2<f64>> = Vec::with_capacity(n);
        for t in qv..=n - qv {
            let u = split_matrix(x, &coefs, qv, t);
            let (a_count, b_count) = u.dim();
            for i in 0..a_count {
                let a = i + 1;
                let row = u.row(i);
                for j in 0..b_count {
                    let b = t + qv + j;
                    let v = row[j];
                    ss[a * stride + b] += v * v;
                }
            }
            if t >= 2 * qv && t + 2 * qv <= n {
                let a2 = t + 1 - 2 * qv;
                kept.push(u.slice(ndarray::s![..a2, qv..]).to_owned());
            } else {
                kept.push(Array2::zeros((0, 0)));
            }
        }

        for t in 2 * qv..=n - 2 * qv {
            let u = &kept[t - qv];
            let (a_count, b_count) = u.dim();
            for i in 0..a_count {
                let a = i + 1;
                let ss_left = ss[a * stride + t];
                for j in 0..b_count {
                    let b = t + 2 * qv + j;
                    if runs.split_degenerate(a, t, b) {
                        continue;
                    }
                    let den = ss_left + ss[(t + 1) * stride + b];
                    if den <= 0.0 {
                        continue;
                    }
                    let v = u[[i, j]];
                    let r = v * v * (b + 1 - a) as f64 / den;
                    let slot = &mut best[a * stride + b];
                    if slot.is_none_or(|cur| r > cur.value) {
                        *slot = Some(IntervalMax { value: r, argmax: t });
                    }
                }
            }
        }
        Self { n, q: qv, best }
    }

    /// Maximal ratio on `[s, e]`, `None` if the interval is shorter than `4q`
    /// or fully degenerate.
    pub(crate) fn get(&self, s: usize, e: usize) -> Option<IntervalMax> {
        if s < 1 || e > self.n || e + 1 < s + 4 * self.q {
            return None;
        }
        self.best[s * (self.n + 2) + e]
    }
}

// U(t; a, b) for a in 1..=t-q+1 (rows) and b in t+q..=n (columns).
fn split_matrix(x: &DataMatrix, coefs: &Coefficients, q: usize, t: usize) -> Array2<f64> {
    let (n, p) = (x.n(), x.p());
    let a_count = t + 1 - q;
    let b_count = n + 1 - t - q;
    let width = (q + 1) * p;
    let mut lm = Array2::<f64>::zeros((a_count, width));
    let mut rm = Array2::<f64>::zeros((b_count, width));

    let mut win = Block::new(q, p);
    for a in (1..=t).rev() {
        win.extend(x.row(a - 1));
        if a > a_count {
            continue;
        }
        let lcount = t - a + 1;
        let mut row = lm.row_mut(a - 1);
        let row = row.as_slice_mut().expect("row-major");
        for c in 0..=q {
            let f = coefs.left_factor(c, lcount);
            for (dst, &v) in row[c * p..(c + 1) * p].iter_mut().zip(win.order(c)) {
                *dst = f * v;
            }
        }
    }
    win.reset();
    for b in t + 1..=n {
        win.extend(x.row(b - 1));
        if b < t + q {
            continue;
        }
        let rcount = b - t;
        let mut row = rm.row_mut(b - t - q);
        let row = row.as_slice_mut().expect("row-major");
        for c in 0..=q {
            let f = coefs.right_factor(c, rcount);
            for (dst, &v) in row[c * p..(c + 1) * p].iter_mut().zip(win.order(q - c)) {
                *dst = f * v;
            }
        }
    }
    let mut u = Array2::<f64>::zeros((a_count, b_count));
    general_mat_mul(1.0, &lm, &rm.t(), 0.0, &mut u);
    u
}

/// How to evaluate the maxima of many intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Pick whichever of the two below has the lower estimated cost.
    #[default]
    Auto,
    /// One sweep per distinct interval, no storage.
    Scan,
    /// One all-interval table for the whole series.
    Table,
}

// The table keeps ~n^3/6 doubles alive.
const TABLE_MAX_N: usize = 640;

/// Rough operation count of scanning one interval of length `len`.
pub(crate) fn scan_cost(len: usize, q: usize, p: usize) -> f64 {
    (len as f64).powi(2) * ((q + 1) * p) as f64
}

/// Rough operation count of building the all-interval table.
pub(crate) fn table_cost(n: usize, q: usize, p: usize) -> f64 {
    (n as f64).powi(3) / 6.0 * ((q + 1) * p) as f64
}

/// Projected operation count of [`interval_maxima`] under `engine`.
pub(crate) fn maxima_cost(n: usize, q: usize, p: usize, intervals: &[Interval], engine: Engine) -> f64 {
    let distinct: HashSet<&Interval> = intervals.iter().collect();
    let scan: f64 = distinct.iter().map(|iv| scan_cost(iv.len(), q, p)).sum();
    match resolve(engine, n, scan, table_cost(n, q, p)) {
        Engine::Table => table_cost(n, q, p),
        _ => scan,
    }
}

fn resolve(engine: Engine, n: usize, scan: f64, table: f64) -> Engine {
    match engine {
        Engine::Auto if n <= TABLE_MAX_N && table < scan => Engine::Table,
        Engine::Auto => Engine::Scan,
        e => e,
    }
}

/// Self-normalized maximum of each interval (`None` for intervals shorter
/// than `4q` or with every split degenerate). `x` is used as given.
pub(crate) fn interval_maxima(
    x: &DataMatrix,
    q: EvenOrder,
    intervals: &[Interval],
    engine: Engine,
) -> Vec<Option<IntervalMax>> {
    let (n, qv, p) = (x.n(), q.get(), x.p());
    let distinct: HashSet<Interval> = intervals.iter().copied().collect();
    let scan: f64 = distinct.iter().map(|iv| scan_cost(iv.len(), qv, p)).sum();
    match resolve(engine, n, scan, table_cost(n, qv, p)) {
        Engine::Table => {
            let table = SubsampleTable::build(x, q);
            intervals.iter().map(|iv| table.get(iv.s, iv.e)).collect()
        }
        _ => {
            let runs = ConstantRuns::new(x);
            let memo: HashMap<Interval, Option<IntervalMax>> = distinct
                .into_iter()
                .map(|iv| {
                    let best = if iv.len() < 4 * qv {
                        None
                    } else {
                        ratios(&IntervalScan::compute(x, q, iv), &runs).2
                    };
                    (iv, best)
                })
                .collect();
            intervals.iter().map(|iv| memo[iv]).collect()
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data containers shared by every statistic.
//!
//! Time indices in the public statistical API are 1-based: a split `k` is the
//! last index of the left segment, and an [`Interval`] `[s, e]` is inclusive.
//! Row storage inside [`DataMatrix`] is 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n x p` matrix of finite observations, stored time-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from time-major values, checking shape and finiteness.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Empty);
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: idx / p + 1,
                col: idx % p + 1,
            });
        }
        Ok(Self { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row at 0-based storage index `i` (time point `i + 1`).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// Entry at 0-based storage position.
    #[inline]
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.values[i * self.p + l]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    /// Applies `f` entrywise. Panics in debug builds if the result is non-finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            n: self.n,
            p: self.p,
            values,
        }
    }

    /// Returns `c * X + 1 b^T`.
    pub fn affine(&self, c: f64, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: shift.len(),
            });
        }
        let values = self
            .values
            .chunks_exact(self.p)
            .flat_map(|row| row.iter().zip(shift).map(move |(&v, &b)| c * v + b))
            .collect();
        Self::new(self.n, self.p, values)
    }

    /// Reorders columns: output column `j` is input column `perm[j]` (0-based).
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: perm.len(),
            });
        }
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.rows() {
            values.extend(perm.iter().map(|&j| row[j]));
        }
        Self::new(self.n, self.p, values)
    }

    /// Rows `s..=e` (1-based, inclusive) as a new matrix.
    pub fn submatrix(&self, iv: Interval) -> Result<Self> {
        iv.check_within(self.n)?;
        let values = self.values[(iv.s - 1) * self.p..iv.e * self.p].to_vec();
        Self::new(iv.len(), self.p, values)
    }

    /// Time-reversed copy.
    pub fn reversed(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks_exact(self.p).rev() {
            values.extend_from_slice(row);
        }
        Self {
            n: self.n,
            p: self.p,
            values,
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.p];
        for row in self.rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

/// Checks a table of reals and turns it into a [`DataMatrix`].
///
/// The values are passed through unchanged.
pub fn validate_matrix<R: AsRef<[f64]>>(raw: &[R]) -> Result<DataMatrix> {
    let first = raw.first().ok_or(Error::Empty)?;
    let p = first.as_ref().len();
    if p == 0 {
        return Err(Error::Empty);
    }
    let mut values = Vec::with_capacity(raw.len() * p);
    for (i, row) in raw.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != p {
            return Err(Error::NonRectangular {
                row: i + 1,
                expected: p,
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: i + 1,
                col: j + 1,
            });
        }
        values.extend_from_slice(row);
    }
    DataMatrix::new(raw.len(), p, values)
}

/// Positive even order `q` of the U-statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct EvenOrder(usize);

impl EvenOrder {
    pub fn new(q: usize) -> Result<Self> {
        if q >= 2 && q.is_multiple_of(2) {
            Ok(Self(q))
        } else {
            Err(Error::InvalidOrder(q))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for EvenOrder {
    type Error = Error;
    fn try_from(q: usize) -> Result<Self> {
        Self::new(q)
    }
}

impl From<EvenOrder> for usize {
    fn from(q: EvenOrder) -> usize {
        q.0
    }
}

impl std::fmt::Display for EvenOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inclusive, 1-based index range `[s, e]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub s: usize,
    pub e: usize,
}

impl Interval {
    /// Checked constructor: `1 <= s <= e <= n`.
    pub fn new(s: usize, e: usize, n: usize) -> Result<Self> {
        let iv = Self { s, e };
        iv.check_within(n)?;
        Ok(iv)
    }

    /// The whole sample `[1, n]`.
    pub fn full(n: usize) -> Self {
        Self { s: 1, e: n }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.e + 1 - self.s
    }

    pub fn is_empty(&self) -> bool {
        self.e < self.s
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.s <= other.s && other.e <= self.e
    }

    pub(crate) fn check_within(&self, n: usize) -> Result<()> {
        if self.s >= 1 && self.s <= self.e && self.e <= n {
            Ok(())
        } else {
            Err(Error::InvalidInterval {
                s: self.s,
                e: self.e,
                n,
            })
        }
    }
}

/// Sorted distinct change points `k` (last index of a segment) of a series of
/// length `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segmentation {
    n: usize,
    breaks: Vec<usize>,
}

impl Segmentation {
    /// Sorts and deduplicates `breaks`; every break must lie in `1..n`.
    pub fn new(n: usize, breaks: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut breaks: Vec<usize> = breaks.into_iter().collect();
        breaks.sort_unstable();
        breaks.dedup();
        if let Some(&k) = breaks.iter().find(|&&k| k == 0 || k >= n) {
            return Err(Error::BadLocation { k, n });
        }
        Ok(Self { n, breaks })
    }

    /// The single-segment partition.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            breaks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    pub fn num_breaks(&self) -> usize {
        self.breaks.len()
    }

    /// Segment lengths in time order.
    pub fn segment_lengths(&self) -> Vec<usize> {
        let mut prev = 0;
        let mut lens: Vec<usize> = self
            .breaks
            .iter()
            .map(|&k| {
                let len = k - prev;
                prev = k;
                len
            })
            .collect();
        lens.push(self.n - prev);
        lens
    }

    /// 0-based segment label of every time point.
    pub fn labels(&self) -> Vec<usize> {
        self.segment_lengths()
            .into_iter()
            .enumerate()
            .flat_map(|(label, len)| std::iter::repeat_n(label, len))
            .collect()
    }
}

/// Nonempty set of distinct even orders, kept in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QSet(Vec<EvenOrder>);

impl QSet {
    pub fn new(orders: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut qs = orders
            .into_iter()
            .map(EvenOrder::new)
            .collect::<Result<Vec<_>>>()?;
        if qs.is_empty() {
            return Err(Error::EmptyList);
        }
        qs.sort_unstable();
        qs.dedup();
        Ok(Self(qs))
    }

    pub fn single(q: EvenOrder) -> Self {
        Self(vec![q])
    }

    pub fn orders(&self) -> &[EvenOrder] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> EvenOrder {
        *self.0.last().expect("QSet is nonempty")
    }

    pub fn iter(&self) -> impl Iterator<Item = EvenOrder> + '_ {
        self.0.iter().copied()
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segmentation accuracy: the adjusted Rand index and the mean squared error
//! of the estimated number of change points.

use serde::{Deserialize, Serialize};

use crate::datamodel::Segmentation;
use crate::error::{Error, Result};

/// Time points shared by segment `i` of one segmentation and segment `j` of
/// another.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub counts: Vec<u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(a: &Segmentation, b: &Segmentation) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::LengthMismatch(a.n(), b.n()));
        }
        let (la, lb) = (a.labels(), b.labels());
        let rows = a.num_breaks() + 1;
        let cols = b.num_breaks() + 1;
        let mut counts = vec![0u64; rows * cols];
        for (i, j) in la.into_iter().zip(lb) {
            counts[i * cols + j] += 1;
        }
        let row_sums = (0..rows)
            .map(|i| counts[i * cols..(i + 1) * cols].iter().sum())
            .collect();
        let col_sums = (0..cols)
            .map(|j| (0..rows).map(|i| counts[i * cols + j]).sum())
            .collect();
        Ok(Self {
            rows,
            cols,
            counts,
            row_sums,
            col_sums,
            n: a.n() as u64,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }
}

fn pairs(v: u64) -> u128 {
    let v = v as u128;
    v * v.saturating_sub(1) / 2
}

/// Hubert-Arabie adjusted Rand index of two segmentations of `1..=n`.
///
/// When both partitions are trivial in the same way the index is 0/0; it is
/// then 1 for identical segmentations and 0 otherwise.
pub fn adjusted_rand_index(a: &Segmentation, b: &Segmentation) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let index: u128 = table.counts.iter().map(|&c| pairs(c)).sum();
    let sa: u128 = table.row_sums.iter().map(|&c| pairs(c)).sum();
    let sb: u128 = table.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(table.n);
    // scaled by total to stay in integers: expected * total = sa * sb
    let num = index as f64 * total as f64 - (sa * sb) as f64;
    let den = (sa + sb) as f64 * total as f64 / 2.0 - (sa * sb) as f64;
    if den == 0.0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok(num / den)
}

/// Mean of `(N_hat - N)^2` over the estimates.
pub fn count_mse(estimates: &[Segmentation], truth: &Segmentation) -> Result<f64> {
    let errors: Vec<f64> = estimates
        .iter()
        .map(|s| (s.num_breaks() as f64 - truth.num_breaks() as f64).powi(2))
        .collect();
    mean(&errors)
}

/// Plain arithmetic mean.
pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyList);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(n: usize, b: &[usize]) -> Segmentation {
        Segmentation::new(n, b.iter().copied()).unwrap()
    }

    // ARI from the four pair-agreement counts.
    fn brute_ari(a: &Segmentation, b: &Segmentation) -> f64 {
        let (la, lb) = (a.labels(), b.labels());
        let n = la.len();
        let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
        for i in 0..n {
            for j in i + 1..n {
                match (la[i] == la[j], lb[i] == lb[j]) {
                    (true, true) => n11 += 1.0,
                    (true, false) => n10 += 1.0,
                    (false, true) => n01 += 1.0,
                    (false, false) => n00 += 1.0,
                }
            }
        }
        let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
        if den == 0.0 {
            return if a == b { 1.0 } else { 0.0 };
        }
        2.0 * (n00 * n11 - n01 * n10) / den
    }

    fn all_segmentations(n: usize) -> Vec<Segmentation> {
        (0u32..1 << (n - 1))
            .map(|mask| Segmentation::new(n, (1..n).filter(|k| mask >> (k - 1) & 1 == 1)).unwrap())
            .collect()
    }

    #[test]
    fn table_marginals() {
        let t = ContingencyTable::new(&seg(10, &[3, 7]), &seg(10, &[5])).unwrap();
        assert_eq!((t.rows, t.cols), (3, 2));
        assert_eq!(t.counts, vec![3, 0, 2, 2, 0, 3]);
        assert_eq!(t.row_sums, vec![3, 4, 3]);
        assert_eq!(t.col_sums, vec![5, 5]);
        assert_eq!(t.row_sums.iter().sum::<u64>(), t.n);
    }

    #[test]
    fn basic_cases() {
        let a = seg(20, &[5, 12]);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&Segmentation::none(20), &a).unwrap(), 0.0);
        let none = Segmentation::none(20);
        assert_eq!(adjusted_rand_index(&none, &none).unwrap(), 1.0);
        assert_eq!(
            adjusted_rand_index(&seg(10, &[5]), &seg(11, &[5])),
            Err(Error::LengthMismatch(10, 11))
        );
        let v = adjusted_rand_index(&seg(10, &[5]), &seg(10, &[4])).unwrap();
        assert!((v - brute_ari(&seg(10, &[5]), &seg(10, &[4]))).abs() < 1e-12);
    }

    #[test]
    fn matches_pair_counting_exhaustively() {
        for n in 2..=8 {
            let all = all_segmentations(n);
            for a in &all {
                for b in &all {
                    let fast = adjusted_rand_index(a, b).unwrap();
                    let slow = brute_ari(a, b);
                    assert!((fast - slow).abs() < 1e-12, "{a:?} {b:?}: {fast} vs {slow}");
                    assert_eq!(fast, adjusted_rand_index(b, a).unwrap());
                    assert!((-1.0..=1.0).contains(&fast));
                }
            }
        }
    }

    #[test]
    fn mse() {
        let truth = seg(12, &[3, 6, 9]);
        assert_eq!(count_mse(&[truth.clone(), seg(12, &[1, 2, 3])], &truth).unwrap(), 0.0);
        assert_eq!(count_mse(&[seg(12, &[2, 4]), seg(12, &[1, 2, 3, 4])], &truth).unwrap(), 1.0);
        assert_eq!(count_mse(&[], &truth), Err(Error::EmptyList));
        assert_eq!(mean(&[1.0, 2.0, 6.0]).unwrap(), 3.0);
    }
}

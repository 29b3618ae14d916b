// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data generators: Gaussian panels with identity, AR(1) or compound-symmetric
//! cross-sectional covariance, mean-shift injection, and stochastic block
//! model network series flattened with [`vech`].
//!
//! Row `t` of every generator draws from ChaCha8 stream `t` of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datamodel::DataMatrix;
use crate::error::{Error, Result};

/// Deterministic child seed `index` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

/// Cross-sectional covariance of the Gaussian panels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rho", rename_all = "kebab-case")]
pub enum CovarianceSpec {
    Identity,
    /// `sigma_ij = rho^|i-j|`.
    Ar(f64),
    /// Unit variances, common correlation `rho`.
    CompoundSymmetric(f64),
}

impl CovarianceSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        match *self {
            Self::Identity => Ok(()),
            Self::Ar(rho) if rho.abs() < 1.0 => Ok(()),
            Self::Ar(rho) => Err(Error::InvalidCovariance(format!("AR rho {rho} needs |rho| < 1"))),
            Self::CompoundSymmetric(rho) => {
                let lower = if p > 1 { -1.0 / (p - 1) as f64 } else { f64::NEG_INFINITY };
                if rho > lower && rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidCovariance(format!(
                        "CS rho {rho} outside ({lower}, 1) for p = {p}"
                    )))
                }
            }
        }
    }

    /// Entry `(i, j)` of the covariance matrix (0-based).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match *self {
            Self::Identity => f64::from(i == j),
            Self::Ar(rho) => rho.powi(i.abs_diff(j) as i32),
            Self::CompoundSymmetric(rho) => {
                if i == j {
                    1.0
                } else {
                    rho
                }
            }
        }
    }

    // Maps i.i.d. N(0,1) draws `z` in place to one N(0, Sigma) row.
    fn color(&self, z: &mut [f64], extra: f64) {
        match *self {
            Self::Identity => {}
            Self::Ar(rho) => {
                let a = (1.0 - rho * rho).sqrt();
                for j in 1..z.len() {
                    z[j] = rho * z[j - 1] + a * z[j];
                }
            }
            Self::CompoundSymmetric(rho) if rho >= 0.0 => {
                let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt() * extra);
                for v in z.iter_mut() {
                    *v = a * *v + b;
                }
            }
            Self::CompoundSymmetric(rho) => {
                // a z + b (sum z) 1 with a^2 = 1 - rho and 2ab + p b^2 = rho
                let p = z.len() as f64;
                let a = (1.0 - rho).sqrt();
                let b = (-a + (a * a + p * rho).sqrt()) / p;
                let shared = b * z.iter().sum::<f64>();
                for v in z.iter_mut() {
                    *v = a * *v + shared;
                }
            }
        }
    }
}

/// `n` i.i.d. rows from `N(0, Sigma)`.
pub fn gen_gaussian(n: usize, p: usize, cov: CovarianceSpec, seed: u64) -> Result<DataMatrix> {
    if n == 0 || p == 0 {
        return Err(Error::Empty);
    }
    cov.validate(p)?;
    let mut values = vec![0.0; n * p];
    for (t, row) in values.chunks_mut(p).enumerate() {
        let mut rng = row_rng(seed, t);
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let extra: f64 = StandardNormal.sample(&mut rng);
        cov.color(row, extra);
    }
    DataMatrix::new(n, p, values)
}

/// Mean shifts: `delta` is added to every row after its location.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftSpec {
    pub shifts: Vec<(usize, Vec<f64>)>,
}

impl MeanShiftSpec {
    pub fn new(shifts: Vec<(usize, Vec<f64>)>) -> Self {
        Self { shifts }
    }

    pub fn locations(&self) -> Vec<usize> {
        self.shifts.iter().map(|(k, _)| *k).collect()
    }

    /// Applies the same coordinate permutation as [`DataMatrix::permute_columns`].
    pub fn permute(&self, perm: &[usize]) -> Self {
        let shifts = self
            .shifts
            .iter()
            .map(|(k, d)| (*k, perm.iter().map(|&j| d[j]).collect()))
            .collect();
        Self { shifts }
    }
}

/// `scale * (1_d, 0_(p-d))`.
pub fn block_vector(p: usize, d: usize, scale: f64) -> Vec<f64> {
    (0..p).map(|j| if j < d { scale } else { 0.0 }).collect()
}

/// One shift `sqrt(delta / d) * (1_d, 0)` after `k`.
pub fn single_shift(p: usize, k: usize, delta: f64, d: usize) -> MeanShiftSpec {
    MeanShiftSpec::new(vec![(k, block_vector(p, d, (delta / d as f64).sqrt()))])
}

/// Three breaks with `theta_1 = -theta_2 = 2 sqrt(k1/d1) (1_d1, 0)` and
/// `theta_3 = 2 sqrt(k2/d2) (1_d2, 0)`, so the third segment returns to the
/// first segment's mean.
pub fn three_break_shift(
    p: usize,
    locations: [usize; 3],
    (k1, d1): (f64, usize),
    (k2, d2): (f64, usize),
) -> MeanShiftSpec {
    let theta1 = block_vector(p, d1, 2.0 * (k1 / d1 as f64).sqrt());
    let theta2 = theta1.iter().map(|v| -v).collect();
    let theta3 = block_vector(p, d2, 2.0 * (k2 / d2 as f64).sqrt());
    MeanShiftSpec::new(vec![
        (locations[0], theta1),
        (locations[1], theta2),
        (locations[2], theta3),
    ])
}

/// Adds the cumulative shift to every row after each location.
pub fn apply_mean_shifts(x: &DataMatrix, shifts: &MeanShiftSpec) -> Result<DataMatrix> {
    let (n, p) = (x.n(), x.p());
    let mut prev = 0;
    for (k, delta) in &shifts.shifts {
        if *k <= prev || *k >= n {
            return Err(Error::BadLocation { k: *k, n });
        }
        if delta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: delta.len(),
            });
        }
        prev = *k;
    }
    let mut values = x.values().to_vec();
    let mut offset = vec![0.0; p];
    let mut next = 0;
    for (t, row) in values.chunks_mut(p).enumerate() {
        while next < shifts.shifts.len() && shifts.shifts[next].0 <= t {
            for (o, d) in offset.iter_mut().zip(&shifts.shifts[next].1) {
                *o += d;
            }
            next += 1;
        }
        for (v, o) in row.iter_mut().zip(&offset) {
            *v += o;
        }
    }
    DataMatrix::new(n, p, values)
}

/// Stochastic block model: `Theta = mu_t Z Q Z^T` with the diagonal removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub m: usize,
    /// Block of each node; `None` rows of `Z` are zero.
    pub membership: Vec<Option<usize>>,
    /// `r x r` connectivity.
    pub connectivity: Vec<Vec<f64>>,
}

impl SbmSpec {
    /// `Z` = the first `r` columns of `I_m`, `Q` = all ones.
    pub fn identity_blocks(m: usize, r: usize) -> Result<Self> {
        if r > m || m < 2 {
            return Err(Error::InvalidConfig(format!("need 2 <= m and r <= m; got m = {m}, r = {r}")));
        }
        Ok(Self {
            m,
            membership: (0..m).map(|i| (i < r).then_some(i)).collect(),
            connectivity: vec![vec![1.0; r]; r],
        })
    }

    /// The setting with `r = c m` blocks (rounded) and intensity `0.1 / c`.
    pub fn sparsity_setting(m: usize, c: f64) -> Result<(Self, f64)> {
        let r = (c * m as f64).round() as usize;
        Ok((Self::identity_blocks(m, r)?, 0.1 / c))
    }

    /// `Theta_ij` at intensity `mu` (0-based nodes).
    pub fn mean(&self, mu: f64, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match (self.membership[i], self.membership[j]) {
            (Some(a), Some(b)) => mu * self.connectivity[a][b],
            _ => 0.0,
        }
    }

    /// `vech(Theta)` at intensity `mu`.
    pub fn mean_vech(&self, mu: f64) -> Vec<f64> {
        lower_pairs(self.m).map(|(i, j)| self.mean(mu, i, j)).collect()
    }
}

/// `mu_t = mu (1 + delta 1{shifted(t)})` for `t = 1..=n`.
pub fn intensity_path(n: usize, mu: f64, delta: f64, shifted: impl Fn(usize) -> bool) -> Vec<f64> {
    (1..=n)
        .map(|t| if shifted(t) { mu * (1.0 + delta) } else { mu })
        .collect()
}

/// `n` adjacency matrices with independent Bernoulli edges, each flattened by
/// [`vech`]; `mu[t]` is the intensity of time `t + 1`.
pub fn gen_sbm_series(n: usize, spec: &SbmSpec, mu: &[f64], seed: u64) -> Result<DataMatrix> {
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    let pairs: Vec<(usize, usize)> = lower_pairs(spec.m).collect();
    for &level in mu {
        for &(i, j) in &pairs {
            let value = spec.mean(level, i, j);
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MeanOutOfRange {
                    i: i + 1,
                    j: j + 1,
                    value,
                });
            }
        }
    }
    let p = pairs.len();
    let mut values = vec![0.0; n * p];
    for (t, row) in values.chunks_mut(p).enumerate() {
        let mut rng = row_rng(seed, t);
        for (v, &(i, j)) in row.iter_mut().zip(&pairs) {
            *v = f64::from(rng.random::<f64>() < spec.mean(mu[t], i, j));
        }
    }
    DataMatrix::new(n, p, values)
}

/// Strict-lower-triangle pairs `(i, j)`, `j < i`, ordered by `(j, i)`.
fn lower_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |j| (j + 1..m).map(move |i| (i, j)))
}

/// `m (m - 1) / 2`.
pub fn vech_len(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Node count whose [`vech`] has length `p`, if any.
pub fn nodes_for_len(p: usize) -> Option<usize> {
    let m = ((1.0 + (1.0 + 8.0 * p as f64).sqrt()) / 2.0).round() as usize;
    (m >= 2 && vech_len(m) == p).then_some(m)
}

/// Strict lower triangle of a symmetric zero-diagonal matrix, column by column.
pub fn vech<R: AsRef<[f64]>>(adjacency: &[R]) -> Result<Vec<f64>> {
    let m = adjacency.len();
    for (i, row) in adjacency.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: row.len(),
            });
        }
        if row[i] != 0.0 {
            return Err(Error::NonZeroDiagonal(i + 1));
        }
    }
    for i in 0..m {
        for j in 0..i {
            if adjacency[i].as_ref()[j] != adjacency[j].as_ref()[i] {
                return Err(Error::NotSymmetric { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(lower_pairs(m).map(|(i, j)| adjacency[i].as_ref()[j]).collect())
}

/// Inverse of [`vech`].
pub fn inverse_vech(v: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = nodes_for_len(v.len()).ok_or(Error::DimensionMismatch {
        expected: vech_len(nodes_for_len(v.len()).unwrap_or(2)),
        found: v.len(),
    })?;
    let mut a = vec![vec![0.0; m]; m];
    for ((i, j), &x) in lower_pairs(m).zip(v) {
        a[i][j] = x;
        a[j][i] = x;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(x: &DataMatrix) -> Vec<Vec<f64>> {
        let (n, p) = (x.n(), x.p());
        let means = x.column_means();
        let mut c = vec![vec![0.0; p]; p];
        for row in x.rows() {
            for i in 0..p {
                for j in 0..p {
                    c[i][j] += (row[i] - means[i]) * (row[j] - means[j]);
                }
            }
        }
        for row in &mut c {
            for v in row.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        c
    }

    fn corr(c: &[Vec<f64>], i: usize, j: usize) -> f64 {
        c[i][j] / (c[i][i] * c[j][j]).sqrt()
    }

    #[test]
    fn deterministic() {
        let a = gen_gaussian(30, 4, CovarianceSpec::Ar(0.5), 9).unwrap();
        assert_eq!(a, gen_gaussian(30, 4, CovarianceSpec::Ar(0.5), 9).unwrap());
        assert_ne!(a, gen_gaussian(30, 4, CovarianceSpec::Ar(0.5), 10).unwrap());
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn covariance_validation() {
        assert!(gen_gaussian(5, 3, CovarianceSpec::Ar(1.0), 0).is_err());
        assert!(gen_gaussian(5, 3, CovarianceSpec::CompoundSymmetric(-0.5), 0).is_err());
        assert!(gen_gaussian(5, 3, CovarianceSpec::CompoundSymmetric(-0.49), 0).is_ok());
        assert!(gen_gaussian(5, 3, CovarianceSpec::CompoundSymmetric(1.0), 0).is_err());
    }

    #[test]
    fn ar_and_cs_correlations() {
        let x = gen_gaussian(5000, 2, CovarianceSpec::Ar(0.5), 1).unwrap();
        let c = sample_cov(&x);
        assert!((corr(&c, 0, 1) - 0.5).abs() < 0.03);

        let x = gen_gaussian(5000, 5, CovarianceSpec::CompoundSymmetric(0.25), 2).unwrap();
        let c = sample_cov(&x);
        let off: Vec<f64> = (0..5)
            .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| corr(&c, i, j))
            .collect();
        let mean = off.iter().sum::<f64>() / off.len() as f64;
        assert!((mean - 0.25).abs() < 0.03);
    }

    #[test]
    fn sample_covariance_converges() {
        let (n, p) = (20_000, 10);
        for (seed, cov) in [
            CovarianceSpec::Identity,
            CovarianceSpec::Ar(0.5),
            CovarianceSpec::Ar(0.8),
            CovarianceSpec::CompoundSymmetric(0.25),
            CovarianceSpec::CompoundSymmetric(-0.1),
        ]
        .into_iter()
        .enumerate()
        {
            let x = gen_gaussian(n, p, cov, seed as u64).unwrap();
            let c = sample_cov(&x);
            let mut dist2 = 0.0;
            let (mut tr, mut tr2) = (0.0, 0.0);
            for i in 0..p {
                tr += cov.entry(i, i);
                for j in 0..p {
                    dist2 += (c[i][j] - cov.entry(i, j)).powi(2);
                    tr2 += cov.entry(i, j).powi(2);
                }
            }
            // E|S - Sigma|_F^2 ~ ((tr Sigma)^2 + tr Sigma^2) / n for Gaussian rows
            let rms = ((tr * tr + tr2) / n as f64).sqrt();
            assert!(dist2.sqrt() < 3.0 * rms, "{cov:?}: {} vs rms {rms}", dist2.sqrt());
        }
    }

    #[test]
    fn mean_shifts() {
        let x = gen_gaussian(10, 3, CovarianceSpec::Identity, 4).unwrap();
        assert_eq!(apply_mean_shifts(&x, &MeanShiftSpec::default()).unwrap(), x);
        let spec = MeanShiftSpec::new(vec![(4, vec![1.0, 0.0, -1.0]), (7, vec![0.5, 0.5, 0.5])]);
        let y = apply_mean_shifts(&x, &spec).unwrap();
        assert_eq!(y.get(3, 0), x.get(3, 0));
        assert_eq!(y.get(4, 0), x.get(4, 0) + 1.0);
        assert_eq!(y.get(7, 2), x.get(7, 2) - 0.5);
        assert!(matches!(
            apply_mean_shifts(&x, &MeanShiftSpec::new(vec![(10, vec![0.0; 3])])),
            Err(Error::BadLocation { .. })
        ));
        assert!(matches!(
            apply_mean_shifts(&x, &MeanShiftSpec::new(vec![(4, vec![0.0; 2])])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(apply_mean_shifts(&x, &MeanShiftSpec::new(vec![(5, vec![0.0; 3]), (5, vec![0.0; 3])])).is_err());
        // commutes with a joint coordinate permutation
        let perm = [2, 0, 1];
        let lhs = apply_mean_shifts(&x.permute_columns(&perm).unwrap(), &spec.permute(&perm)).unwrap();
        assert_eq!(lhs, y.permute_columns(&perm).unwrap());
    }

    #[test]
    fn design_vectors() {
        let s = single_shift(10, 5, 4.0, 4);
        assert_eq!(s.shifts[0].1, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = three_break_shift(50, [30, 60, 90], (2.5, 5), (4.0, 50));
        assert_eq!(d.locations(), vec![30, 60, 90]);
        let x = DataMatrix::new(120, 50, vec![0.0; 6000]).unwrap();
        let y = apply_mean_shifts(&x, &d).unwrap();
        assert_eq!(y.row(70), y.row(0));
        assert!((y.get(40, 0) - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(y.get(40, 5), 0.0);
        assert!((y.get(100, 49) - 2.0 * 0.08f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vech_ordering_and_inverse() {
        let a = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        assert_eq!(vech(&a).unwrap(), vec![1.0, 0.0, 1.0]);
        let back = inverse_vech(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(back, a.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
        assert_eq!(vech(&[[0.0, 1.0], [1.0, 0.0]]).unwrap().len(), 1);
        assert_eq!(vech(&[[0.0, 1.0], [0.0, 0.0]]), Err(Error::NotSymmetric { i: 2, j: 1 }));
        assert_eq!(vech(&[[1.0, 0.0], [0.0, 0.0]]), Err(Error::NonZeroDiagonal(1)));
        assert!(inverse_vech(&[0.0; 4]).is_err());
        let v: Vec<f64> = (0..45).map(f64::from).collect();
        assert_eq!(vech(&inverse_vech(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn sbm_series() {
        let (spec, mu) = SbmSpec::sparsity_setting(10, 1.0).unwrap();
        let n = 5000;
        let x = gen_sbm_series(n, &spec, &vec![mu; n], 3).unwrap();
        assert_eq!(x.p(), 45);
        assert!(x.values().iter().all(|&v| v == 0.0 || v == 1.0));
        let freq = x.values().iter().sum::<f64>() / x.values().len() as f64;
        assert!((freq - 0.1).abs() < 0.01);
        let (sparse, mu) = SbmSpec::sparsity_setting(10, 0.2).unwrap();
        assert_eq!(mu, 0.5);
        assert_eq!(sparse.mean(mu, 1, 0), 0.5);
        assert_eq!(sparse.mean(mu, 2, 0), 0.0);
        assert_eq!(sparse.mean(mu, 1, 1), 0.0);
        assert!(matches!(
            gen_sbm_series(3, &spec, &[0.5, 2.0, 0.5], 0),
            Err(Error::MeanOutOfRange { .. })
        ));
        let path = intensity_path(6, 0.1, 0.5, |t| t > 3);
        assert_eq!(path[2], 0.1);
        assert!((path[3] - 0.15).abs() < 1e-15);
    }
}

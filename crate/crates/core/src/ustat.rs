// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-sample U-statistic of order `(q, q)`.
//!
//! For a split `k` of `[s, m]` with `L = k - s + 1` left and `R = m - k` right
//! points,
//!
//! ```text
//! U(k; s, m) = sum_l sum*_{i_1..i_q in [s,k]} sum*_{j_1..j_q in [k+1,m]} prod_t (X[i_t,l] - X[j_t,l])
//! ```
//!
//! where `sum*` runs over ordered tuples of pairwise-distinct indices. Expanding
//! the product over which factors contribute their left value gives, for any
//! data,
//!
//! ```text
//! U = sum_c (-1)^(q-c) C(q,c) P(L-c, q-c) P(R-q+c, c) sum_l D_c(left, l) D_(q-c)(right, l)
//! ```
//!
//! with `P(a, b)` the falling factorial and `D_c = c! e_c` the sum of products
//! over ordered distinct `c`-tuples. `e_c` is recovered from interval power
//! sums with Newton's identities, so a single evaluation costs `O(p q^2)` once
//! the prefix power sums exist.

use crate::datamodel::{DataMatrix, EvenOrder, Interval};
use crate::error::{Error, Result};
use crate::kernel;

/// Default budget for [`u_stat_naive`], counted in (left tuple, right tuple,
/// coordinate) triples.
pub const DEFAULT_TUPLE_BUDGET: f64 = 1e8;

/// Falling factorial `P(a, b) = a (a-1) ... (a-b+1)`, zero when `a < b`.
pub fn falling_factorial(a: i64, b: usize) -> f64 {
    if a < b as i64 {
        return 0.0;
    }
    (0..b as i64).map(|i| (a - i) as f64).product()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weights of the `c`-th cross term in the expansion of `U` for a split with
/// `left` and `right` points; index `c` in `0..=q`.
pub fn split_coefficients(q: EvenOrder, left: usize, right: usize) -> Vec<f64> {
    let q = q.get();
    (0..=q)
        .map(|c| {
            let sign = if (q - c).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(q, c)
                * falling_factorial(left as i64 - c as i64, q - c)
                * falling_factorial(right as i64 - (q - c) as i64, c)
        })
        .collect()
}

/// Per-coordinate cumulative sums of `X^r` for `r = 1..=q`.
#[derive(Clone, Debug)]
pub struct PrefixPowerSums {
    q: EvenOrder,
    n: usize,
    p: usize,
    // index ((r - 1) * (n + 1) + t) * p + l
    sums: Vec<f64>,
}

impl PrefixPowerSums {
    pub fn new(x: &DataMatrix, q: EvenOrder) -> Self {
        let (n, p, qv) = (x.n(), x.p(), q.get());
        let mut sums = vec![0.0; qv * (n + 1) * p];
        for r in 1..=qv {
            let base = (r - 1) * (n + 1) * p;
            for t in 1..=n {
                let row = x.row(t - 1);
                let (prev, cur) = sums[base + (t - 1) * p..base + (t + 1) * p].split_at_mut(p);
                for l in 0..p {
                    cur[l] = prev[l] + row[l].powi(r as i32);
                }
            }
        }
        Self { q, n, p, sums }
    }

    pub fn q(&self) -> EvenOrder {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `S_r[l][t]`, with `t` in `0..=n` and `l` 0-based.
    #[inline]
    pub fn prefix(&self, r: usize, t: usize, l: usize) -> f64 {
        self.sums[((r - 1) * (self.n + 1) + t) * self.p + l]
    }

    /// Power sum of degree `r` over `[iv.s, iv.e]` in 0-based coordinate `l`.
    #[inline]
    pub fn interval_power_sum(&self, r: usize, iv: Interval, l: usize) -> f64 {
        self.prefix(r, iv.e, l) - self.prefix(r, iv.s - 1, l)
    }
}

/// Sums of products over ordered distinct tuples, `D_c = c! e_c`, for
/// `c = 0..=order` of one coordinate over one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct DistinctProductSums {
    values: Vec<f64>,
}

impl DistinctProductSums {
    /// Newton's identities from the power sums `p_1..p_order` of `len` values.
    pub fn from_power_sums(power_sums: &[f64], len: usize) -> Self {
        let order = power_sums.len();
        let mut e = vec![0.0; order + 1];
        e[0] = 1.0;
        for c in 1..=order {
            let mut acc = 0.0;
            for r in 1..=c {
                let term = e[c - r] * power_sums[r - 1];
                if r % 2 == 1 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            e[c] = acc / c as f64;
        }
        let mut fact = 1.0;
        let values = e
            .iter()
            .enumerate()
            .map(|(c, &ec)| {
                if c > 0 {
                    fact *= c as f64;
                }
                if c > len {
                    0.0
                } else {
                    fact * ec
                }
            })
            .collect();
        Self { values }
    }

    /// `D_c` for `c` up to the constructed order.
    pub fn get(&self, c: usize) -> f64 {
        self.values[c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `c! e_c` of the values of coordinate `l` (1-based) on `iv`, via Newton's
/// identities on the interval power sums. Zero when `c` exceeds the interval
/// length.
pub fn distinct_product_sum(
    pps: &PrefixPowerSums,
    iv: Interval,
    c: usize,
    l: usize,
) -> Result<f64> {
    let q = pps.q().get();
    if c > q {
        return Err(Error::OrderExceedsQ { c, q });
    }
    iv.check_within(pps.n())?;
    if l == 0 || l > pps.p() {
        return Err(Error::InvalidCoordinate { l, p: pps.p() });
    }
    if c == 0 {
        return Ok(1.0);
    }
    if c > iv.len() {
        return Ok(0.0);
    }
    let power_sums: Vec<f64> = (1..=c)
        .map(|r| pps.interval_power_sum(r, iv, l - 1))
        .collect();
    Ok(DistinctProductSums::from_power_sums(&power_sums, iv.len()).get(c))
}

fn check_split(n: usize, k: usize, s: usize, m: usize) -> Result<()> {
    if s >= 1 && s <= k && k < m && m <= n {
        Ok(())
    } else {
        Err(Error::InvalidSplit { k, s, m })
    }
}

/// `U(k; s, m)` from precomputed prefix power sums.
pub fn u_stat_with(pps: &PrefixPowerSums, k: usize, s: usize, m: usize) -> Result<f64> {
    check_split(pps.n(), k, s, m)?;
    let q = pps.q();
    let qv = q.get();
    let (left, right) = (k - s + 1, m - k);
    if left < qv || right < qv {
        return Ok(0.0);
    }
    let coefs = split_coefficients(q, left, right);
    let (liv, riv) = (Interval { s, e: k }, Interval { s: k + 1, e: m });
    let mut lps = vec![0.0; qv];
    let mut rps = vec![0.0; qv];
    let mut total = 0.0;
    for l in 0..pps.p() {
        for r in 1..=qv {
            lps[r - 1] = pps.interval_power_sum(r, liv, l);
            rps[r - 1] = pps.interval_power_sum(r, riv, l);
        }
        let dl = DistinctProductSums::from_power_sums(&lps, left);
        let dr = DistinctProductSums::from_power_sums(&rps, right);
        total += coefs
            .iter()
            .enumerate()
            .map(|(c, w)| w * dl.get(c) * dr.get(qv - c))
            .sum::<f64>();
    }
    Ok(total)
}

/// `U(k; s, m)`; zero when either side has fewer than `q` points.
pub fn u_stat(x: &DataMatrix, q: EvenOrder, k: usize, s: usize, m: usize) -> Result<f64> {
    check_split(x.n(), k, s, m)?;
    let pps = PrefixPowerSums::new(x, q);
    u_stat_with(&pps, k, s, m)
}

/// Literal enumeration of the defining sum. Test oracle only.
pub fn u_stat_naive(x: &DataMatrix, q: EvenOrder, k: usize, s: usize, m: usize) -> Result<f64> {
    u_stat_naive_with_budget(x, q, k, s, m, DEFAULT_TUPLE_BUDGET)
}

pub fn u_stat_naive_with_budget(
    x: &DataMatrix,
    q: EvenOrder,
    k: usize,
    s: usize,
    m: usize,
    budget: f64,
) -> Result<f64> {
    check_split(x.n(), k, s, m)?;
    let qv = q.get();
    let (left, right) = (k - s + 1, m - k);
    let tuples = falling_factorial(left as i64, qv)
        * falling_factorial(right as i64, qv)
        * x.p() as f64;
    if tuples > budget {
        return Err(Error::SizeGuard { tuples, budget });
    }
    let left_tuples = distinct_tuples(s - 1..k, qv);
    let right_tuples = distinct_tuples(k..m, qv);
    let mut total = 0.0;
    for l in 0..x.p() {
        for it in &left_tuples {
            for jt in &right_tuples {
                let mut prod = 1.0;
                for (&i, &j) in it.iter().zip(jt) {
                    prod *= x.get(i, l) - x.get(j, l);
                }
                total += prod;
            }
        }
    }
    Ok(total)
}

// All ordered tuples of `len` distinct elements drawn from `range`.
fn distinct_tuples(range: std::ops::Range<usize>, len: usize) -> Vec<Vec<usize>> {
    fn rec(pool: &[usize], len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for &v in pool {
            if !cur.contains(&v) {
                cur.push(v);
                rec(pool, len, cur, out);
                cur.pop();
            }
        }
    }
    let pool: Vec<usize> = range.collect();
    let mut out = Vec::new();
    rec(&pool, len, &mut Vec::with_capacity(len), &mut out);
    out
}

/// `U(t; s, m)` for every `t` in `s+q-1 ..= m-q`.
pub fn u_profile(x: &DataMatrix, q: EvenOrder, iv: Interval) -> Result<Vec<f64>> {
    iv.check_within(x.n())?;
    let qv = q.get();
    if iv.len() < 2 * qv {
        return Err(Error::IntervalTooShort {
            len: iv.len(),
            required: 2 * qv,
        });
    }
    Ok(kernel::profile(x, q, iv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::validate_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(v: usize) -> EvenOrder {
        EvenOrder::new(v).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DataMatrix {
        let values = (0..n * p).map(|_| rng.random_range(-2.0..2.0)).collect();
        DataMatrix::new(n, p, values).unwrap()
    }

    fn column(vals: &[f64]) -> DataMatrix {
        DataMatrix::new(vals.len(), 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn prefix_squares() {
        let x = column(&[1.0, 2.0, 3.0]);
        let pps = PrefixPowerSums::new(&x, q(2));
        let s2: Vec<f64> = (0..=3).map(|t| pps.prefix(2, t, 0)).collect();
        assert_eq!(s2, vec![0.0, 1.0, 5.0, 14.0]);
        assert_eq!(pps.interval_power_sum(2, Interval { s: 2, e: 3 }, 0), 13.0);
        assert_eq!(pps.interval_power_sum(1, Interval::full(3), 0), 6.0);
    }

    #[test]
    fn distinct_products_small() {
        let x = column(&[1.0, 2.0, 3.0]);
        let pps = PrefixPowerSums::new(&x, q(2));
        let full = Interval::full(3);
        // ordered distinct pairs: 2 * (1*2 + 1*3 + 2*3)
        assert!((distinct_product_sum(&pps, full, 2, 1).unwrap() - 22.0).abs() < 1e-12);
        assert_eq!(distinct_product_sum(&pps, full, 0, 1).unwrap(), 1.0);
        let single = column(&[5.0]);
        let pps1 = PrefixPowerSums::new(&single, q(2));
        assert_eq!(
            distinct_product_sum(&pps1, Interval::full(1), 2, 1).unwrap(),
            0.0
        );
        assert_eq!(
            distinct_product_sum(&pps, full, 3, 1),
            Err(Error::OrderExceedsQ { c: 3, q: 2 })
        );
    }

    #[test]
    fn distinct_products_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..7).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x = column(&vals);
        let pps = PrefixPowerSums::new(&x, q(6));
        for c in 0..=6 {
            let brute: f64 = distinct_tuples(0..7, c)
                .iter()
                .map(|t| t.iter().map(|&i| vals[i]).product::<f64>())
                .sum();
            let fast = distinct_product_sum(&pps, Interval::full(7), c, 1).unwrap();
            assert!(
                (fast - brute).abs() <= 1e-9 * (1.0 + brute.abs()),
                "c={c}: {fast} vs {brute}"
            );
        }
    }

    #[test]
    fn step_example() {
        let x = column(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(u_stat(&x, q(2), 2, 1, 4).unwrap(), 4.0);
        assert_eq!(u_stat_naive(&x, q(2), 2, 1, 4).unwrap(), 4.0);
    }

    #[test]
    fn constant_series_vanishes() {
        let x = validate_matrix(&vec![vec![3.5, -1.0]; 10]).unwrap();
        for k in 1..10 {
            assert_eq!(u_stat(&x, q(2), k, 1, 10).unwrap().abs(), 0.0);
        }
        assert!(u_profile(&x, q(2), Interval::full(10))
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn short_sides_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 8, 2);
        assert_eq!(u_stat(&x, q(4), 3, 1, 8).unwrap(), 0.0);
        assert_eq!(u_stat(&x, q(4), 5, 1, 8).unwrap(), 0.0);
        assert!(matches!(
            u_stat(&x, q(2), 8, 1, 8),
            Err(Error::InvalidSplit { .. })
        ));
        assert!(matches!(
            u_stat(&x, q(2), 0, 1, 8),
            Err(Error::InvalidSplit { .. })
        ));
    }

    #[test]
    fn matches_naive_n8_q4() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 8, 3);
        for s in 1..=8 {
            for m in s + 1..=8 {
                for k in s..m {
                    let fast = u_stat(&x, q(4), k, s, m).unwrap();
                    let slow = u_stat_naive(&x, q(4), k, s, m).unwrap();
                    assert!(
                        (fast - slow).abs() <= 1e-9 * (1.0 + slow.abs()),
                        "({k},{s},{m}): {fast} vs {slow}"
                    );
                }
            }
        }
    }

    // q = 2 closed form: sum over ordered distinct pairs, assembled by hand.
    #[test]
    fn naive_matches_hand_assembled_q2() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = random_matrix(&mut rng, 6, 2);
        for k in 2..=4 {
            let mut hand = 0.0;
            for l in 0..2 {
                for j2 in (k..6).rev() {
                    for j1 in (k..6).rev() {
                        if j1 == j2 {
                            continue;
                        }
                        for i2 in 0..k {
                            for i1 in 0..k {
                                if i1 != i2 {
                                    hand += (x.get(i1, l) - x.get(j1, l))
                                        * (x.get(i2, l) - x.get(j2, l));
                                }
                            }
                        }
                    }
                }
            }
            let naive = u_stat_naive(&x, q(2), k, 1, 6).unwrap();
            assert!((hand - naive).abs() <= 1e-10 * (1.0 + hand.abs()));
        }
    }

    #[test]
    fn naive_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_matrix(&mut rng, 7, 2);
        let y = x.affine(1.0, &[3.0, -2.0]).unwrap();
        let a = u_stat_naive(&x, q(2), 3, 1, 7).unwrap();
        let b = u_stat_naive(&y, q(2), 3, 1, 7).unwrap();
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn naive_budget_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 40, 2);
        assert!(matches!(
            u_stat_naive(&x, q(4), 20, 1, 40),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn profile_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x = random_matrix(&mut rng, 10, 2);
        let iv = Interval::full(10);
        let prof = u_profile(&x, q(2), iv).unwrap();
        assert_eq!(prof.len(), 10 - 4 + 1);
        for (i, t) in (2..=8).enumerate() {
            let slow = u_stat_naive(&x, q(2), t, 1, 10).unwrap();
            assert!((prof[i] - slow).abs() <= 1e-9 * (1.0 + slow.abs()));
        }
        let short = Interval::new(3, 6, 10).unwrap();
        assert_eq!(u_profile(&x, q(2), short).unwrap().len(), 1);
        assert!(matches!(
            u_profile(&x, q(2), Interval::new(3, 5, 10).unwrap()),
            Err(Error::IntervalTooShort { .. })
        ));
    }

    #[test]
    fn time_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = random_matrix(&mut rng, 12, 3);
        let xr = x.reversed();
        let n = 12;
        for k in 4..=8 {
            let a = u_stat(&x, q(4), k, 1, n).unwrap();
            // reversing [1, n] maps split k to n - k
            let b = u_stat(&xr, q(4), n - k, 1, n).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo null distributions.
//!
//! The self-normalized statistic is asymptotically pivotal, so its null law is
//! simulated on i.i.d. standard Gaussian data of the same length (and, by
//! default, the same dimension capped at [`MAX_P_SIM`]). Replicate `r` draws
//! from ChaCha8 stream `r` of the table seed, so tables are reproducible for
//! any thread count.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{DataMatrix, EvenOrder, Interval};
use crate::error::{Error, Result};
use crate::estimate::draw_intervals;
use crate::kernel::{self, ConstantRuns, Engine};
use crate::sntest::{interval_max, scan_statistic, PrepOptions, Preprocessing};

/// Largest simulated dimension used by default.
pub const MAX_P_SIM: usize = 200;
/// Default replications for single-test tables.
pub const DEFAULT_TEST_REPS: usize = 2000;
/// Default replications for WBS threshold tables.
pub const DEFAULT_WBS_REPS: usize = 200;
/// Default cap on projected work (rough multiply-add count).
pub const DEFAULT_WORK_BUDGET: f64 = 1e12;
/// Environment variable naming the on-disk table cache.
pub const CACHE_ENV: &str = "LQCP_CACHE_DIR";

/// Simulated dimension for data of dimension `p`.
pub fn default_p_sim(p: usize) -> usize {
    p.min(MAX_P_SIM)
}

/// Which statistic a table holds draws of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullKind {
    /// The full-sample self-normalized statistic.
    SingleTest,
    /// The maximum of the statistic over a fixed sample of random intervals.
    WbsMax,
    /// The scan statistic on an endpoint grid of stride `stride`.
    Scan,
}

/// The random-interval sample behind a [`NullKind::WbsMax`] table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalSampling {
    /// Number of intervals `M`.
    pub intervals: usize,
    pub intervals_seed: u64,
    /// Minimum `e - s`.
    pub min_len: usize,
}

/// Parameters of a null simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NullSpec {
    pub kind: NullKind,
    pub q: EvenOrder,
    pub n_sim: usize,
    pub p_sim: usize,
    pub reps: usize,
    pub seed: u64,
    pub sampling: Option<IntervalSampling>,
    /// Endpoint stride of a [`NullKind::Scan`] table.
    pub stride: Option<usize>,
}

impl NullSpec {
    pub fn single_test(q: EvenOrder, n_sim: usize, p_sim: usize, reps: usize, seed: u64) -> Self {
        Self {
            kind: NullKind::SingleTest,
            q,
            n_sim,
            p_sim,
            reps,
            seed,
            sampling: None,
            stride: None,
        }
    }

    pub fn scan(q: EvenOrder, n_sim: usize, p_sim: usize, reps: usize, seed: u64, stride: usize) -> Self {
        Self {
            kind: NullKind::Scan,
            q,
            n_sim,
            p_sim,
            reps,
            seed,
            sampling: None,
            stride: Some(stride),
        }
    }

    pub fn wbs_max(
        q: EvenOrder,
        n_sim: usize,
        p_sim: usize,
        reps: usize,
        seed: u64,
        sampling: IntervalSampling,
    ) -> Self {
        Self {
            kind: NullKind::WbsMax,
            q,
            n_sim,
            p_sim,
            reps,
            seed,
            sampling: Some(sampling),
            stride: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be >= 1".into()));
        }
        if self.p_sim == 0 {
            return Err(Error::InvalidConfig("p_sim must be >= 1".into()));
        }
        let required = 4 * self.q.get();
        if self.n_sim < required {
            return Err(Error::IntervalTooShort {
                len: self.n_sim,
                required,
            });
        }
        match (self.kind, self.sampling, self.stride) {
            (NullKind::SingleTest, None, None) => Ok(()),
            (NullKind::WbsMax, Some(s), None) if s.intervals >= 1 => Ok(()),
            (NullKind::Scan, None, Some(stride)) if stride >= 1 => Ok(()),
            (NullKind::WbsMax, _, _) => Err(Error::InvalidConfig(
                "wbs-max tables need at least one interval and no stride".into(),
            )),
            (NullKind::Scan, _, _) => Err(Error::InvalidConfig(
                "scan tables need a stride >= 1 and no interval sample".into(),
            )),
            (NullKind::SingleTest, _, _) => Err(Error::InvalidConfig(
                "single-test tables take no interval sample or stride".into(),
            )),
        }
    }
}

/// Sorted Monte-Carlo draws of a null statistic plus the parameters that
/// produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullTable {
    pub kind: NullKind,
    pub q: EvenOrder,
    pub n_sim: usize,
    pub p_sim: usize,
    #[serde(rename = "R")]
    pub reps: usize,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    pub draws: Vec<f64>,
}

impl NullTable {
    /// Wraps externally produced draws; they are sorted here.
    pub fn from_draws(spec: &NullSpec, mut draws: Vec<f64>) -> Result<Self> {
        draws.sort_by(f64::total_cmp);
        let table = Self {
            kind: spec.kind,
            q: spec.q,
            n_sim: spec.n_sim,
            p_sim: spec.p_sim,
            reps: draws.len(),
            intervals: spec.sampling.map(|s| s.intervals),
            seed: spec.seed,
            intervals_seed: spec.sampling.map(|s| s.intervals_seed),
            min_len: spec.sampling.map(|s| s.min_len),
            stride: spec.stride,
            draws,
        };
        table.validate()?;
        Ok(table)
    }

    /// The parameters this table was simulated with.
    pub fn spec(&self) -> NullSpec {
        let sampling = match (self.intervals, self.intervals_seed, self.min_len) {
            (Some(intervals), Some(intervals_seed), Some(min_len)) => Some(IntervalSampling {
                intervals,
                intervals_seed,
                min_len,
            }),
            _ => None,
        };
        NullSpec {
            kind: self.kind,
            q: self.q,
            n_sim: self.n_sim,
            p_sim: self.p_sim,
            reps: self.reps,
            seed: self.seed,
            sampling,
            stride: self.stride,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws.is_empty() {
            return Err(Error::EmptyTable);
        }
        if self.draws.len() != self.reps {
            return Err(Error::Format(format!(
                "R = {} but {} draws",
                self.reps,
                self.draws.len()
            )));
        }
        if let Some(d) = self.draws.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::Format(format!("invalid draw {d}")));
        }
        if self.draws.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("draws are not sorted".into()));
        }
        if self.kind == NullKind::WbsMax && self.intervals.is_none() {
            return Err(Error::Format("wbs-max table without M".into()));
        }
        if self.kind == NullKind::Scan && self.stride.is_none() {
            return Err(Error::Format("scan table without stride".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn count_at_least(&self, stat: f64) -> usize {
        self.draws.len() - self.draws.partition_point(|&d| d < stat)
    }

    /// `(1 + #{draws >= stat}) / (R + 1)`.
    pub fn p_value(&self, stat: f64) -> Result<f64> {
        if self.draws.is_empty() {
            return Err(Error::EmptyTable);
        }
        if stat.is_nan() {
            return Err(Error::OutOfRange("statistic is NaN".into()));
        }
        Ok(add_one(self.count_at_least(stat), self.draws.len()))
    }

    /// `#{draws < stat} / R`: the share of replicates the statistic exceeds.
    pub fn exceedance_fraction(&self, stat: f64) -> Result<f64> {
        if self.draws.is_empty() {
            return Err(Error::EmptyTable);
        }
        let below = self.draws.partition_point(|&d| d < stat);
        Ok(below as f64 / self.draws.len() as f64)
    }

    /// The `ceil(level * R)`-th smallest draw.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        if self.draws.is_empty() {
            return Err(Error::EmptyTable);
        }
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::OutOfRange(format!("level {level} not in (0, 1]")));
        }
        let r = self.draws.len();
        let rank = ((level * r as f64) - 1e-9).ceil().clamp(1.0, r as f64) as usize;
        Ok(self.draws[rank - 1])
    }

    /// Critical value `c` with `stat > c` exactly when `p_value(stat) < p0`.
    pub fn pvalue_threshold(&self, p0: f64) -> Result<f64> {
        let r = self.draws.len();
        if r == 0 {
            return Err(Error::EmptyTable);
        }
        // largest exceedance count still significant
        let allowed = (0..=r).rev().find(|&k| add_one(k, r) < p0);
        Ok(match allowed {
            None => f64::INFINITY,
            Some(k) if k == r => f64::NEG_INFINITY,
            Some(k) => self.draws[r - k - 1],
        })
    }
}

fn add_one(count: usize, reps: usize) -> f64 {
    (1 + count) as f64 / (reps + 1) as f64
}

/// `(1 + #{draws >= stat}) / (R + 1)`.
pub fn p_value(stat: f64, table: &NullTable) -> Result<f64> {
    table.p_value(stat)
}

/// Standard Gaussian `n x p` data of replicate `rep`.
pub fn null_replicate(seed: u64, rep: u64, n: usize, p: usize) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    let values = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    DataMatrix::new(n, p, values).expect("gaussian draws are finite")
}

fn spec_intervals(spec: &NullSpec) -> Result<Vec<Interval>> {
    let s = spec.sampling.expect("validated");
    draw_intervals(
        spec.n_sim,
        s.intervals,
        s.min_len,
        s.intervals_seed,
        Interval::full(spec.n_sim),
    )
}

/// Rough multiply-add count of simulating `spec`.
pub fn projected_work(spec: &NullSpec) -> Result<f64> {
    spec.validate()?;
    let (n, q, p) = (spec.n_sim, spec.q.get(), spec.p_sim);
    let per_rep = match spec.kind {
        NullKind::SingleTest => kernel::scan_cost(n, q, p),
        NullKind::WbsMax => kernel::maxima_cost(n, q, p, &spec_intervals(spec)?, Engine::Auto),
        NullKind::Scan => {
            let stride = spec.stride.expect("validated");
            let grid = (n + 1 - 4 * q) / stride + 2;
            2.0 * grid as f64 * kernel::scan_cost(n, q, p)
        }
    };
    Ok(per_rep * spec.reps as f64)
}

/// Simulates a null table under [`DEFAULT_WORK_BUDGET`].
pub fn simulate_null_samples(spec: &NullSpec) -> Result<NullTable> {
    simulate_with_budget(spec, DEFAULT_WORK_BUDGET)
}

pub fn simulate_with_budget(spec: &NullSpec, budget: f64) -> Result<NullTable> {
    let projected = projected_work(spec)?;
    if projected > budget {
        return Err(Error::BudgetExceeded { projected, budget });
    }
    let intervals = match spec.kind {
        NullKind::SingleTest | NullKind::Scan => vec![Interval::full(spec.n_sim)],
        NullKind::WbsMax => spec_intervals(spec)?,
    };
    let draws = (0..spec.reps as u64)
        .into_par_iter()
        .map(|r| {
            let x = null_replicate(spec.seed, r, spec.n_sim, spec.p_sim);
            null_statistic(&x, spec, &intervals)
        })
        .collect::<Result<Vec<f64>>>()?;
    NullTable::from_draws(spec, draws)
}

fn null_statistic(x: &DataMatrix, spec: &NullSpec, intervals: &[Interval]) -> Result<f64> {
    let q = spec.q;
    if let Some(stride) = spec.stride {
        return Ok(scan_statistic(x, q, stride, PrepOptions::default())?.value);
    }
    let data = Preprocessing::fit(x, PrepOptions::default()).apply(x);
    let best = match spec.kind {
        NullKind::SingleTest => {
            let runs = ConstantRuns::new(&data);
            interval_max(&data, &runs, q, intervals[0]).map(|m| m.value)
        }
        NullKind::WbsMax => kernel::interval_maxima(&data, q, intervals, Engine::Auto)
            .into_iter()
            .flatten()
            .map(|m| m.value)
            .reduce(f64::max),
        NullKind::Scan => unreachable!("handled above"),
    };
    best.ok_or(Error::DegenerateNormalizer)
}

/// Empirical `level` quantile of a simulated wbs-max table.
pub fn wbs_threshold(spec: &NullSpec, level: f64) -> Result<f64> {
    if spec.kind != NullKind::WbsMax {
        return Err(Error::InvalidConfig("threshold needs a wbs-max spec".into()));
    }
    obtain_table(spec)?.quantile(level)
}

/// A directory of simulated tables keyed by their parameters.
#[derive(Clone, Debug)]
pub struct NullCache {
    dir: PathBuf,
}

impl NullCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The cache named by [`CACHE_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }

    pub fn path_for(&self, spec: &NullSpec) -> PathBuf {
        let kind = match spec.kind {
            NullKind::SingleTest => "single-test",
            NullKind::WbsMax => "wbs-max",
            NullKind::Scan => "scan",
        };
        let mut name = format!(
            "{kind}-q{}-n{}-p{}-R{}-seed{}",
            spec.q, spec.n_sim, spec.p_sim, spec.reps, spec.seed
        );
        if let Some(s) = spec.sampling {
            name += &format!("-M{}-iseed{}-min{}", s.intervals, s.intervals_seed, s.min_len);
        }
        if let Some(stride) = spec.stride {
            name += &format!("-stride{stride}");
        }
        self.dir.join(name + ".json")
    }

    /// Loads a cached table, or simulates and stores it.
    pub fn get_or_simulate(&self, spec: &NullSpec, budget: f64) -> Result<NullTable> {
        let path = self.path_for(spec);
        if path.exists() {
            let table = NullTable::load(&path)?;
            if table.spec() == *spec {
                return Ok(table);
            }
        }
        let table = simulate_with_budget(spec, budget)?;
        std::fs::create_dir_all(&self.dir)?;
        table.save(&path)?;
        Ok(table)
    }
}

/// Simulates a table, going through the environment cache when one is set.
pub fn obtain_table(spec: &NullSpec) -> Result<NullTable> {
    match NullCache::from_env() {
        Some(cache) => cache.get_or_simulate(spec, DEFAULT_WORK_BUDGET),
        None => simulate_null_samples(spec),
    }
}

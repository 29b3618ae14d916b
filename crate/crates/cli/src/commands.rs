// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command runners. Each returns its configuration, full results and the
//! flat rows used for CSV output.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lqcp_core::estimate::wbs_adaptive;
use lqcp_core::nulldist::{
    default_p_sim, obtain_table, NullCache, DEFAULT_TEST_REPS, DEFAULT_WBS_REPS,
};
use lqcp_core::sntest::{default_scan_stride, sn_value};
use lqcp_core::{
    adaptive_decision, scan_statistic, single_cp_estimate, sn_statistic, wbs_detect, Engine,
    EvenOrder, Interval, NullSpec, PrepOptions, QSet, WbsConfig,
};
use serde_json::{json, Value};

use crate::report::{Row, Seeds};
use crate::CliError;

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub config: Value,
    pub results: Value,
    pub rows: Vec<Row>,
    /// The null hypothesis was rejected (exit code 2).
    pub reject: bool,
}

fn row(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> Row {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

#[derive(Clone, Debug, Args)]
pub struct TestArgs {
    /// CSV file, one row per time point.
    pub input: PathBuf,
    /// The first row holds coordinate names.
    #[arg(long)]
    pub header: bool,
    /// Even orders; more than one gives the adaptive test.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub q: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Replications of the simulated null table.
    #[arg(long, default_value_t = DEFAULT_TEST_REPS)]
    pub null_reps: usize,
    #[arg(long)]
    pub null_seed: Option<u64>,
    /// Use the scan statistic instead of the single change-point statistic.
    #[arg(long, conflicts_with = "single")]
    pub scan: bool,
    /// Use the single change-point statistic (default).
    #[arg(long)]
    pub single: bool,
    /// Endpoint stride of the scan statistic; defaults to max(1, n/100).
    #[arg(long, requires = "scan")]
    pub stride: Option<usize>,
}

pub fn run_test(
    args: &TestArgs,
    x: &lqcp_core::DataMatrix,
    names: Option<&[String]>,
    seeds: &mut Seeds,
) -> Result<Output, CliError> {
    let (n, p) = (x.n(), x.p());
    let orders = QSet::new(args.q.iter().copied())?;
    let null_seed = seeds.resolve("null", args.null_seed);
    let stride = args.scan.then(|| args.stride.unwrap_or_else(|| default_scan_stride(n)));
    let mut per_q = Vec::new();
    let mut p_values = BTreeMap::new();
    let mut rows = Vec::new();
    for q in orders.iter() {
        let (stat, location, spec) = match stride {
            Some(stride) => {
                let s = scan_statistic(x, q, stride, PrepOptions::default())?;
                let spec = NullSpec::scan(q, n, default_p_sim(p), args.null_reps, null_seed, stride);
                (s.value, json!({ "prefix": s.prefix, "suffix": s.suffix }), spec)
            }
            None => {
                let s = sn_statistic(x, q, Interval::full(n), PrepOptions::default())?;
                let spec = NullSpec::single_test(q, n, default_p_sim(p), args.null_reps, null_seed);
                (s.value, json!(s.argmax), spec)
            }
        };
        let table = obtain_table(&spec)?;
        let pv = table.p_value(stat)?;
        p_values.insert(q, pv);
        per_q.push(json!({ "q": q, "statistic": stat, "p_value": pv, "location": location }));
        rows.push(row([
            ("q", json!(q.to_string())),
            ("statistic", json!(stat)),
            ("p_value", json!(pv)),
            ("location", if stride.is_some() { Value::Null } else { location }),
        ]));
    }
    let decision = adaptive_decision(&orders, &p_values, args.alpha)?;
    if orders.len() > 1 {
        rows.push(row([
            ("q", json!("adaptive")),
            ("p_value", json!(decision.p_adjusted)),
        ]));
    }
    for r in &mut rows {
        r.insert("reject".into(), json!(decision.reject));
    }
    let config = json!({
        "input": args.input, "n": n, "p": p, "q": orders, "alpha": args.alpha,
        "statistic": if args.scan { "scan" } else { "single" },
        "stride": stride, "null_reps": args.null_reps, "p_sim": default_p_sim(p),
        "coordinates": names,
    });
    let results = json!({
        "per_q": per_q,
        "p_ada": decision.p_ada,
        "p_adjusted": decision.p_adjusted,
        "reject": decision.reject,
    });
    Ok(Output {
        config,
        results,
        rows,
        reject: decision.reject,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Single,
    Wbs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Auto,
    Scan,
    Table,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Scan => Engine::Scan,
            EngineArg::Table => Engine::Table,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct EstimateArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value = "wbs")]
    pub method: Method,
    /// Even orders; more than one gives the adaptive search.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub q: Vec<usize>,
    /// Number of random intervals M.
    #[arg(long, default_value_t = 1000)]
    pub intervals: usize,
    /// Minimum e - s of a sampled interval; defaults to 4 q_max - 1.
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Quantile level of the single-order threshold.
    #[arg(long, default_value_t = 0.95)]
    pub threshold_level: f64,
    /// Running level of the adaptive search.
    #[arg(long, default_value_t = 0.05)]
    pub p0: f64,
    #[arg(long, default_value_t = DEFAULT_WBS_REPS)]
    pub calib_reps: usize,
    #[arg(long)]
    pub interval_seed: Option<u64>,
    #[arg(long)]
    pub calib_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub engine: EngineArg,
}

pub fn run_estimate(
    args: &EstimateArgs,
    x: &lqcp_core::DataMatrix,
    names: Option<&[String]>,
    seeds: &mut Seeds,
) -> Result<Output, CliError> {
    let (n, p) = (x.n(), x.p());
    let orders = QSet::new(args.q.iter().copied())?;
    let mut config = json!({
        "input": args.input, "n": n, "p": p, "q": orders, "coordinates": names,
        "method": match args.method { Method::Single => "single", Method::Wbs => "wbs" },
    });
    if args.method == Method::Single {
        let mut per_q = Vec::new();
        let mut rows = Vec::new();
        for q in orders.iter() {
            let (k, fraction) = single_cp_estimate(x, q)?;
            let stat = sn_value(x, q)?;
            per_q.push(json!({ "q": q, "location": k, "fraction": fraction, "statistic": stat }));
            rows.push(row([
                ("q", json!(q.to_string())),
                ("location", json!(k)),
                ("fraction", json!(fraction)),
                ("statistic", json!(stat)),
            ]));
        }
        return Ok(Output {
            config,
            results: json!({ "per_q": per_q }),
            rows,
            reject: false,
        });
    }
    let cfg = WbsConfig {
        intervals: args.intervals,
        min_len: args.min_len,
        level: args.threshold_level,
        reps: args.calib_reps,
        interval_seed: seeds.resolve("interval", args.interval_seed),
        calibration_seed: seeds.resolve("calibration", args.calib_seed),
        p0: args.p0,
        engine: args.engine.into(),
        ..WbsConfig::default()
    };
    let result = if orders.len() == 1 {
        let q = orders.max();
        wbs_detect(x, q, &cfg, cfg.threshold(q, n, p)?)?
    } else {
        let tables = cfg.calibrate(&orders, n, p)?;
        wbs_adaptive(x, &orders, &cfg, &tables)?
    };
    config["wbs"] = serde_json::to_value(cfg)?;
    let rows = result
        .per_break
        .iter()
        .map(|b| {
            row([
                ("location", json!(b.location)),
                ("s", json!(b.interval.s)),
                ("e", json!(b.interval.e)),
                ("q", json!(b.q.to_string())),
                ("statistic", json!(b.value)),
                ("p_value", json!(b.p_value)),
            ])
        })
        .collect();
    let results = json!({
        "breaks": result.breaks.breaks(),
        "per_break": result.per_break,
        "threshold": result.threshold,
    });
    Ok(Output {
        config,
        results,
        rows,
        reject: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    SingleTest,
    WbsMax,
    Scan,
}

#[derive(Clone, Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum, default_value = "single-test")]
    pub kind: KindArg,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub q: Vec<usize>,
    /// Sample size of the data the table is for.
    #[arg(long)]
    pub n: usize,
    /// Dimension of the data; simulation uses min(p, 200).
    #[arg(long)]
    pub p: usize,
    /// Replications; defaults to 2000 (single-test, scan) or 200 (wbs-max).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random intervals M of a wbs-max table.
    #[arg(long, default_value_t = 1000)]
    pub intervals: usize,
    #[arg(long)]
    pub interval_seed: Option<u64>,
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Endpoint stride of a scan table; defaults to max(1, n/100).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Directory the tables are written to, named as in the table cache.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_calibrate(args: &CalibrateArgs, seeds: &mut Seeds) -> Result<Output, CliError> {
    let orders = QSet::new(args.q.iter().copied())?;
    let seed = seeds.resolve("null", args.seed);
    let specs: Vec<(EvenOrder, NullSpec)> = match args.kind {
        KindArg::SingleTest | KindArg::Scan => {
            let reps = args.reps.unwrap_or(DEFAULT_TEST_REPS);
            let p_sim = default_p_sim(args.p);
            orders
                .iter()
                .map(|q| {
                    let spec = match args.kind {
                        KindArg::Scan => {
                            let stride = args.stride.unwrap_or_else(|| default_scan_stride(args.n));
                            NullSpec::scan(q, args.n, p_sim, reps, seed, stride)
                        }
                        _ => NullSpec::single_test(q, args.n, p_sim, reps, seed),
                    };
                    (q, spec)
                })
                .collect()
        }
        KindArg::WbsMax => {
            let cfg = WbsConfig {
                intervals: args.intervals,
                min_len: args.min_len,
                reps: args.reps.unwrap_or(DEFAULT_WBS_REPS),
                interval_seed: seeds.resolve("interval", args.interval_seed),
                calibration_seed: seed,
                ..WbsConfig::default()
            };
            orders
                .iter()
                .map(|q| Ok((q, cfg.calibration_spec(q, orders.max(), args.n, args.p)?)))
                .collect::<Result<_, CliError>>()?
        }
    };
    let cache = NullCache::new(&args.out);
    let mut tables = Vec::new();
    let mut rows = Vec::new();
    for (q, spec) in specs {
        let table = cache.get_or_simulate(&spec, f64::INFINITY)?;
        let path = cache.path_for(&spec);
        let quantiles: Vec<f64> = [0.9, 0.95, 0.99]
            .iter()
            .map(|&l| table.quantile(l))
            .collect::<Result<_, _>>()?;
        tables.push(json!({ "q": q, "spec": spec, "path": path, "quantiles_90_95_99": quantiles }));
        rows.push(row([
            ("q", json!(q.to_string())),
            ("path", json!(path)),
            ("q90", json!(quantiles[0])),
            ("q95", json!(quantiles[1])),
            ("q99", json!(quantiles[2])),
        ]));
    }
    let config = json!({
        "kind": args.kind.to_possible_value().map(|v| v.get_name().to_owned()), "q": orders, "n": args.n, "p": args.p,
        "out": args.out,
    });
    Ok(Output {
        config,
        results: json!({ "tables": tables }),
        rows,
        reject: false,
    })
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Registry of the simulation scenarios. Every scenario has desk-scale
//! defaults that the overrides can change.

use std::collections::BTreeMap;
use std::str::FromStr;

use lqcp_core::experiment::{
    location_accuracy, rejection_rates, single_test_tables, wbs_recovery, Design, WbsMethod,
};
use lqcp_core::nulldist::{DEFAULT_TEST_REPS, DEFAULT_WBS_REPS};
use lqcp_core::simgen::{intensity_path, single_shift, three_break_shift};
use lqcp_core::{CovarianceSpec, EvenOrder, MeanShiftSpec, QSet, SbmSpec, Segmentation, WbsConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::{Row, Seeds};
use crate::CliError;

pub const NAMES: [&str; 7] = [
    "table1-size",
    "table2-power",
    "table3-rmse",
    "table4-wbs",
    "network-size",
    "network-power",
    "network-wbs",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Table1Size,
    Table2Power,
    Table3Rmse,
    Table4Wbs,
    NetworkSize,
    NetworkPower,
    NetworkWbs,
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "table1-size" => Scenario::Table1Size,
            "table2-power" => Scenario::Table2Power,
            "table3-rmse" => Scenario::Table3Rmse,
            "table4-wbs" => Scenario::Table4Wbs,
            "network-size" => Scenario::NetworkSize,
            "network-power" => Scenario::NetworkPower,
            "network-wbs" => Scenario::NetworkWbs,
            other => return Err(CliError::UnknownScenario(other.to_owned())),
        })
    }
}

impl Scenario {
    pub fn name(self) -> &'static str {
        NAMES[self as usize]
    }
}

/// Mean-shift pattern of the three-break Gaussian design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WbsDesign {
    Sparse,
    Dense,
    Mixed,
}

impl FromStr for WbsDesign {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "sparse" => Ok(WbsDesign::Sparse),
            "dense" => Ok(WbsDesign::Dense),
            "mixed" => Ok(WbsDesign::Mixed),
            other => Err(CliError::InvalidArgument(format!(
                "design {other:?} is not one of sparse, dense, mixed"
            ))),
        }
    }
}

/// `id`, `ar:RHO` or `cs:RHO`.
pub fn parse_cov(s: &str) -> Result<CovarianceSpec, CliError> {
    let bad = || CliError::InvalidArgument(format!("covariance {s:?} is not id, ar:RHO or cs:RHO"));
    let (kind, rho) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r.parse::<f64>().map_err(|_| bad())?)),
        None => (s, None),
    };
    match (kind, rho) {
        ("id", None) => Ok(CovarianceSpec::Identity),
        ("ar", Some(r)) => Ok(CovarianceSpec::Ar(r)),
        ("cs", Some(r)) => Ok(CovarianceSpec::CompoundSymmetric(r)),
        _ => Err(bad()),
    }
}

/// Optional changes to a scenario's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub reps: Option<usize>,
    pub null_reps: Option<usize>,
    pub calib_reps: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub cov: Option<CovarianceSpec>,
    /// Signal size of the single-shift designs.
    pub delta: Option<f64>,
    /// Number of shifted coordinates.
    pub d: Option<usize>,
    pub design: Option<WbsDesign>,
    /// Magnitude of the three-break design (dense part for `mixed`).
    pub k: Option<f64>,
    /// Magnitude of the sparse part of the `mixed` design.
    pub k_sparse: Option<f64>,
    pub intervals: Option<usize>,
    pub m: Option<usize>,
    pub c: Option<f64>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    pub null_seed: Option<u64>,
    pub interval_seed: Option<u64>,
    pub calib_seed: Option<u64>,
}

fn orders(o: &Overrides, default: &[usize]) -> Result<QSet, CliError> {
    Ok(QSet::new(o.q.clone().unwrap_or_else(|| default.to_vec()))?)
}

fn order_label(orders: &QSet) -> String {
    orders.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
}

fn row(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> Row {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

/// Runs a scenario; returns the resolved configuration and the table rows.
pub fn run_scenario(name: &str, o: &Overrides, seeds: &mut Seeds) -> Result<(Value, Vec<Row>), CliError> {
    let scenario: Scenario = name.parse()?;
    match scenario {
        Scenario::Table1Size | Scenario::Table2Power => {
            let (n, p) = (o.n.unwrap_or(200), o.p.unwrap_or(100));
            let cov = o.cov.unwrap_or(CovarianceSpec::Identity);
            cov.validate(p)?;
            let (shifts, signal) = if scenario == Scenario::Table2Power {
                let (delta, d) = (o.delta.unwrap_or(1.0), o.d.unwrap_or(3).min(p));
                (single_shift(p, n / 2, delta, d), json!({ "delta": delta, "d": d, "location": n / 2 }))
            } else {
                (MeanShiftSpec::new(vec![]), Value::Null)
            };
            let design = Design::Gaussian { n, p, cov, shifts };
            let (orders, alpha) = (orders(o, &[2, 6])?, o.alpha.unwrap_or(0.05));
            let mut config = rejection_config(scenario, o, &design, &orders, alpha);
            config["cov"] = serde_json::to_value(cov)?;
            config["signal"] = signal;
            let rows = rejection_rows(scenario, o, &design, &orders, alpha, seeds)?;
            Ok((config, rows))
        }
        Scenario::NetworkSize | Scenario::NetworkPower => {
            let n = o.n.unwrap_or(200);
            let (sbm, mu) = network_setting(o, None)?;
            let delta = o.delta.unwrap_or(0.5);
            let path = if scenario == Scenario::NetworkPower {
                intensity_path(n, mu, delta, |t| t > n / 2)
            } else {
                vec![mu; n]
            };
            let design = Design::Network { n, sbm, mu: path };
            let (orders, alpha) = (orders(o, &[2, 6])?, o.alpha.unwrap_or(0.05));
            let mut config = rejection_config(scenario, o, &design, &orders, alpha);
            config["m"] = json!(o.m.unwrap_or(10));
            config["c"] = json!(o.c.unwrap_or(1.0));
            config["mu"] = json!(mu);
            if scenario == Scenario::NetworkPower {
                config["delta"] = json!(delta);
            }
            let rows = rejection_rows(scenario, o, &design, &orders, alpha, seeds)?;
            Ok((config, rows))
        }
        Scenario::Table3Rmse => {
            let (n, p) = (o.n.unwrap_or(200), o.p.unwrap_or(100));
            let cov = o.cov.unwrap_or(CovarianceSpec::Identity);
            let (delta, d) = (o.delta.unwrap_or(2.0), o.d.unwrap_or(p).min(p));
            let reps = o.reps.unwrap_or(1000);
            let orders = orders(o, &[2, 4, 6])?;
            let design = Design::Gaussian {
                n,
                p,
                cov,
                shifts: single_shift(p, n / 2, delta, d),
            };
            let seed = seeds.resolve("data", o.seed);
            let mut rows = Vec::new();
            for q in orders.iter() {
                let s = location_accuracy(&design, q, n / 2, reps, seed)?;
                rows.push(row([
                    ("scenario", json!(scenario.name())),
                    ("q", json!(q.to_string())),
                    ("rmse_x1000", json!(s.rmse * 1e3)),
                    ("median_abs_error", json!(s.median_abs_error)),
                ]));
            }
            let config = json!({
                "scenario": scenario.name(), "n": n, "p": p, "cov": cov, "delta": delta, "d": d,
                "location": n / 2, "q": order_label(&orders), "reps": reps,
            });
            Ok((config, rows))
        }
        Scenario::Table4Wbs | Scenario::NetworkWbs => {
            let n = o.n.unwrap_or(120);
            let locations = [n / 4, n / 2, 3 * n / 4];
            let truth = Segmentation::new(n, locations)?;
            let (design, mut config) = if scenario == Scenario::Table4Wbs {
                let p = o.p.unwrap_or(50);
                let cov = o.cov.unwrap_or(CovarianceSpec::Identity);
                let kind = o.design.unwrap_or(WbsDesign::Sparse);
                let k = o.k.unwrap_or(4.0);
                let sparse_d = o.d.unwrap_or(5).min(p);
                let shifts = match kind {
                    WbsDesign::Sparse => three_break_shift(p, locations, (k, sparse_d), (k, sparse_d)),
                    WbsDesign::Dense => three_break_shift(p, locations, (k, p), (k, p)),
                    WbsDesign::Mixed => {
                        three_break_shift(p, locations, (o.k_sparse.unwrap_or(2.5), sparse_d), (k, p))
                    }
                };
                let config = json!({
                    "p": p, "cov": cov, "design": kind, "k": k, "sparse_d": sparse_d,
                    "k_sparse": if kind == WbsDesign::Mixed { json!(o.k_sparse.unwrap_or(2.5)) } else { Value::Null },
                });
                (Design::Gaussian { n, p, cov, shifts }, config)
            } else {
                let (sbm, mu) = network_setting(o, Some(0.2))?;
                let delta = o.delta.unwrap_or(1.0);
                let path = intensity_path(n, mu, delta, |t| {
                    (locations[0] < t && t <= locations[1]) || t > locations[2]
                });
                let config = json!({
                    "m": sbm.m, "c": o.c.unwrap_or(1.0), "mu": mu, "delta": delta,
                });
                (Design::Network { n, sbm, mu: path }, config)
            };
            let orders = orders(o, &[2])?;
            let reps = o.reps.unwrap_or(100);
            let cfg = WbsConfig {
                intervals: o.intervals.unwrap_or(1000),
                reps: o.calib_reps.unwrap_or(DEFAULT_WBS_REPS),
                interval_seed: seeds.resolve("interval", o.interval_seed),
                calibration_seed: seeds.resolve("calibration", o.calib_seed),
                ..WbsConfig::default()
            };
            let seed = seeds.resolve("data", o.seed);
            let method = if orders.len() == 1 {
                WbsMethod::Single(orders.max())
            } else {
                WbsMethod::Adaptive(orders.clone())
            };
            let s = wbs_recovery(&design, &truth, &method, &cfg, reps, seed)?;
            let mut r = row([
                ("scenario", json!(scenario.name())),
                ("method", json!(format!("WBS-SN({})", order_label(&orders)))),
                ("mse", json!(s.mse)),
                ("ari", json!(s.ari)),
                ("threshold", json!(s.threshold)),
            ]);
            let mut counts: BTreeMap<i64, usize> = (-3..=3).map(|e| (e, 0)).collect();
            counts.extend(s.count_errors.iter().map(|(&e, &c)| (e, c)));
            for (e, c) in counts {
                r.insert(format!("n_hat_minus_n={e:+}"), json!(c));
            }
            config["scenario"] = json!(scenario.name());
            config["n"] = json!(n);
            config["breaks"] = json!(locations);
            config["q"] = json!(order_label(&orders));
            config["reps"] = json!(reps);
            config["wbs"] = serde_json::to_value(cfg)?;
            Ok((config, vec![r]))
        }
    }
}

fn network_setting(o: &Overrides, mu_default: Option<f64>) -> Result<(SbmSpec, f64), CliError> {
    let (sbm, mu) = SbmSpec::sparsity_setting(o.m.unwrap_or(10), o.c.unwrap_or(1.0))?;
    Ok((sbm, o.mu.or(mu_default).unwrap_or(mu)))
}

fn rejection_config(scenario: Scenario, o: &Overrides, design: &Design, orders: &QSet, alpha: f64) -> Value {
    json!({
        "scenario": scenario.name(),
        "n": design.n(),
        "p": design.p(),
        "q": order_label(orders),
        "alpha": alpha,
        "reps": o.reps.unwrap_or(1000),
        "null_reps": o.null_reps.unwrap_or(DEFAULT_TEST_REPS),
    })
}

fn rejection_rows(
    scenario: Scenario,
    o: &Overrides,
    design: &Design,
    orders: &QSet,
    alpha: f64,
    seeds: &mut Seeds,
) -> Result<Vec<Row>, CliError> {
    let reps = o.reps.unwrap_or(1000);
    let null_seed = seeds.resolve("null", o.null_seed);
    let seed = seeds.resolve("data", o.seed);
    let tables = single_test_tables(
        orders,
        design.n(),
        design.p(),
        o.null_reps.unwrap_or(DEFAULT_TEST_REPS),
        null_seed,
    )?;
    let rates = rejection_rates(design, &tables, alpha, reps, seed)?;
    let mut rows: Vec<Row> = rates
        .per_q
        .iter()
        .map(|(q, r): (&EvenOrder, &f64)| {
            row([
                ("scenario", json!(scenario.name())),
                ("q", json!(q.to_string())),
                ("rate", json!(r)),
            ])
        })
        .collect();
    if orders.len() > 1 {
        rows.push(row([
            ("scenario", json!(scenario.name())),
            ("q", json!(order_label(orders))),
            ("rate", json!(rates.adaptive)),
        ]));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in NAMES {
            assert_eq!(name.parse::<Scenario>().unwrap().name(), name);
        }
        assert!(matches!("table9".parse::<Scenario>(), Err(CliError::UnknownScenario(_))));
    }

    #[test]
    fn covariance_strings() {
        assert_eq!(parse_cov("id").unwrap(), CovarianceSpec::Identity);
        assert_eq!(parse_cov("ar:0.5").unwrap(), CovarianceSpec::Ar(0.5));
        assert_eq!(parse_cov("cs:0.2").unwrap(), CovarianceSpec::CompoundSymmetric(0.2));
        assert!(parse_cov("ar").is_err());
        assert!(parse_cov("id:1").is_err());
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use lqcp_cli::{load_adjacency_series, load_csv_matrix, CliError, RunReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

fn lqcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqcp"))
        .args(args)
        .env_remove("LQCP_CACHE_DIR")
        .output()
        .unwrap()
}

fn write_matrix(path: &Path, n: usize, p: usize, shift_after: Option<usize>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for t in 0..n {
        let shift = match shift_after {
            Some(k) if t >= k => 2.0,
            _ => 0.0,
        };
        let row: Vec<String> = (0..p)
            .map(|_| format!("{}", rng.sample::<f64, _>(StandardNormal) + shift))
            .collect();
        writeln!(text, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

fn report(out: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

#[test]
fn loads_wide_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("acgh.csv");
    write_matrix(&path, 43, 200, None, 1);
    let loaded = load_csv_matrix(&path, false).unwrap();
    assert_eq!((loaded.matrix.n(), loaded.matrix.p()), (43, 200));
    assert_eq!(loaded.names, None);
}

#[test]
fn header_names_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "a, b\n1,2\n3,4\n").unwrap();
    let loaded = load_csv_matrix(&path, true).unwrap();
    assert_eq!(loaded.names, Some(vec!["a".to_owned(), "b".to_owned()]));
    assert_eq!(loaded.matrix.row(1), &[3.0, 4.0]);

    std::fs::write(&path, "").unwrap();
    assert!(matches!(
        load_csv_matrix(&path, false),
        Err(CliError::Core(lqcp_core::Error::Empty))
    ));
    std::fs::write(&path, "1,2\n3,x\n").unwrap();
    assert!(matches!(
        load_csv_matrix(&path, false),
        Err(CliError::Parse { row: 2, col: 2, .. })
    ));
    std::fs::write(&path, "1,2\nNaN,4\n").unwrap();
    assert!(matches!(
        load_csv_matrix(&path, false),
        Err(CliError::Core(lqcp_core::Error::NonFiniteEntry { row: 2, col: 1 }))
    ));
    std::fs::write(&path, "1,2\n3\n").unwrap();
    assert!(matches!(
        load_csv_matrix(&path, false),
        Err(CliError::Core(lqcp_core::Error::NonRectangular { row: 2, .. }))
    ));
    assert!(matches!(
        load_csv_matrix(dir.path().join("missing.csv"), false),
        Err(CliError::Io(_))
    ));
}

#[test]
fn adjacency_series_is_vectorized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.csv");
    // two 3-node networks
    std::fs::write(&path, "0,1,0,1,0,1,0,1,0\n0,0,1,0,0,0,1,0,0\n").unwrap();
    let (loaded, m) = load_adjacency_series(&path, false).unwrap();
    assert_eq!(m, 3);
    assert_eq!(loaded.matrix.row(0), &[1.0, 0.0, 1.0]);
    assert_eq!(loaded.matrix.row(1), &[0.0, 1.0, 0.0]);
    assert_eq!(
        loaded.names.unwrap(),
        vec!["2-1".to_owned(), "3-1".to_owned(), "3-2".to_owned()]
    );
    std::fs::write(&path, "0,1,0,0,0,1,0,1,0\n").unwrap();
    assert!(matches!(
        load_adjacency_series(&path, false),
        Err(CliError::Core(lqcp_core::Error::NotSymmetric { .. }))
    ));
    std::fs::write(&path, "0,1,1\n").unwrap();
    assert!(matches!(load_adjacency_series(&path, false), Err(CliError::InvalidArgument(_))));
}

#[test]
fn test_command_exit_codes_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let shifted = dir.path().join("shifted.csv");
    write_matrix(&shifted, 60, 6, Some(30), 2);
    let args = ["test", shifted.to_str().unwrap(), "--q", "2,4", "--null-reps", "100", "--null-seed", "7"];
    let first = lqcp(&args);
    assert_eq!(first.status.code(), Some(2), "{}", String::from_utf8_lossy(&first.stderr));
    let a = report(&first);
    assert_eq!(a.results["reject"], Value::Bool(true));
    assert_eq!(a.seeds["null"], 7);
    assert_eq!(a.results["per_q"][0]["location"], 30);

    // same seeds, same report apart from timing
    let b = report(&lqcp(&args));
    assert_eq!((&a.config, &a.results, &a.seeds), (&b.config, &b.results, &b.seeds));

    // the report round-trips byte for byte
    let text = std::str::from_utf8(&first.stdout).unwrap().trim_end();
    assert_eq!(a.to_json().unwrap(), text);

    let flat = dir.path().join("flat.csv");
    write_matrix(&flat, 60, 6, None, 3);
    let out = lqcp(&["test", flat.to_str().unwrap(), "--null-reps", "100", "--null-seed", "7", "--alpha", "0.001"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).results["reject"], Value::Bool(false));

    let missing = lqcp(&["test", "does-not-exist.csv"]);
    assert_eq!(missing.status.code(), Some(3));
    let usage = lqcp(&["test", flat.to_str().unwrap(), "--scan", "--single"]);
    assert!(usage.status.code().unwrap() > 2);
}

#[test]
fn omitted_seed_is_sampled_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    write_matrix(&path, 40, 3, None, 4);
    let out = lqcp(&["test", path.to_str().unwrap(), "--null-reps", "50"]);
    let seed = report(&out).seeds["null"];
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(&format!("sampled null seed {seed}")), "{stderr}");
}

#[test]
fn scan_test_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    write_matrix(&path, 40, 3, Some(20), 5);
    let out = lqcp(&[
        "--csv", "test", path.to_str().unwrap(), "--scan", "--stride", "4", "--null-reps", "40", "--null-seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("location,p_value,q,reject,statistic"));
    assert!(lines.next().unwrap().starts_with(",0.024390243902439025,2,true,"));
}

#[test]
fn estimate_finds_the_break() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    write_matrix(&path, 60, 5, Some(30), 6);
    let p = path.to_str().unwrap();
    let single = report(&lqcp(&["estimate", p, "--method", "single", "--q", "2,4"]));
    assert_eq!(single.results["per_q"][0]["location"], 30);
    let wbs = lqcp(&[
        "estimate", p, "--intervals", "200", "--calib-reps", "50", "--interval-seed", "1", "--calib-seed", "2",
    ]);
    assert_eq!(wbs.status.code(), Some(0));
    let r = report(&wbs);
    let breaks = r.results["breaks"].as_array().unwrap();
    assert_eq!(breaks.len(), 1);
    assert!(breaks[0].as_i64().unwrap().abs_diff(30) <= 2);
    assert_eq!(r.config["wbs"]["intervals"], 200);
    let adaptive = report(&lqcp(&[
        "estimate", p, "--q", "2,4", "--intervals", "200", "--calib-reps", "50", "--interval-seed", "1",
        "--calib-seed", "2",
    ]));
    let breaks = adaptive.results["breaks"].as_array().unwrap();
    assert_eq!(breaks.len(), 1);
    assert!(breaks[0].as_i64().unwrap().abs_diff(30) <= 2);
    assert!(adaptive.results["per_break"][0]["p_value"].as_f64().unwrap() < 0.05);
}

#[test]
fn calibrated_tables_feed_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    write_matrix(&data, 40, 4, Some(20), 7);
    let cache = dir.path().join("tables");
    let out = lqcp(&[
        "calibrate", "--n", "40", "--p", "4", "--q", "2", "--reps", "60", "--seed", "3", "--out",
        cache.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let path = r.results["tables"][0]["path"].as_str().unwrap().to_owned();
    let table = lqcp_core::NullTable::load(&path).unwrap();
    assert_eq!(table.reps, 60);

    let args = ["test", data.to_str().unwrap(), "--null-reps", "60", "--null-seed", "3"];
    let fresh = report(&lqcp(&args));
    let cached = Command::new(env!("CARGO_BIN_EXE_lqcp"))
        .args(args)
        .env("LQCP_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert_eq!(report(&cached).results, fresh.results);
}

#[test]
fn scenario_reports_are_deterministic() {
    let args = [
        "simulate", "table1-size", "--reps", "1", "--q", "2", "--n", "40", "--p", "5", "--null-reps", "50",
        "--seed", "1", "--null-seed", "2",
    ];
    let a = report(&lqcp(&args));
    let b = report(&lqcp(&args));
    assert_eq!(a.results["rows"].as_array().unwrap().len(), 1);
    assert_eq!((&a.config, &a.results, &a.seeds), (&b.config, &b.results, &b.seeds));

    // worker count does not change results
    let mut threaded = vec!["--threads", "2"];
    threaded.extend(args);
    assert_eq!(report(&lqcp(&threaded)).results, a.results);

    let bad = lqcp(&["simulate", "table5"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown scenario"));
}

#[test]
fn every_scenario_runs_at_tiny_scale() {
    for (name, extra) in [
        ("table2-power", vec!["--n", "40", "--p", "5", "--d", "2"]),
        ("table3-rmse", vec!["--n", "40", "--p", "5"]),
        ("table4-wbs", vec!["--n", "48", "--p", "6", "--design", "mixed", "--intervals", "50", "--calib-reps", "20"]),
        ("network-size", vec!["--n", "40", "--m", "5"]),
        ("network-power", vec!["--n", "40", "--m", "5"]),
        ("network-wbs", vec!["--n", "48", "--m", "5", "--intervals", "50", "--calib-reps", "20"]),
    ] {
        let mut args = vec![
            "--csv", "simulate", name, "--reps", "2", "--q", "2", "--null-reps", "30", "--seed", "1", "--null-seed", "2",
            "--interval-seed", "3", "--calib-seed", "4",
        ];
        args.extend(extra);
        let out = lqcp(&args);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().count(), 2, "{name}: {text}");
    }
}

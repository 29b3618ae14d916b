// SPDX-License-Identifier: MIT OR Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqcp_bench::shifted;
use lqcp_core::sntest::{default_scan_stride, sn_value};
use lqcp_core::{
    scan_statistic, u_profile, u_stat, u_stat_naive, wbs_detect, EvenOrder, Interval, PrepOptions, WbsConfig,
};
use std::hint::black_box;

fn q(v: usize) -> EvenOrder {
    EvenOrder::new(v).unwrap()
}

fn u_statistic(c: &mut Criterion) {
    let x = shifted(12, 10, 1);
    let mut group = c.benchmark_group("u_stat");
    group.bench_function("fast", |b| b.iter(|| u_stat(black_box(&x), q(4), 6, 1, 12).unwrap()));
    group.bench_function("enumeration", |b| b.iter(|| u_stat_naive(black_box(&x), q(4), 6, 1, 12).unwrap()));
    group.finish();

    let mut group = c.benchmark_group("u_profile");
    for n in [100, 200, 400] {
        let x = shifted(n, 100, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| u_profile(x, q(6), Interval::full(n)).unwrap())
        });
    }
    group.finish();
}

fn statistics(c: &mut Criterion) {
    let mut group = c.benchmark_group("sn_value");
    group.sample_size(10);
    for n in [100, 200, 400] {
        let x = shifted(n, 100, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| sn_value(x, q(2)).unwrap()));
    }
    group.finish();

    let x = shifted(200, 100, 4);
    c.bench_function("scan_statistic/200", |b| {
        b.iter(|| scan_statistic(&x, q(2), default_scan_stride(200), PrepOptions::default()).unwrap())
    });
}

fn wbs(c: &mut Criterion) {
    let x = shifted(120, 50, 5);
    let cfg = WbsConfig { intervals: 200, ..WbsConfig::default() };
    let mut group = c.benchmark_group("wbs_detect");
    group.sample_size(10);
    for order in [2, 6] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &o| {
            b.iter(|| wbs_detect(&x, q(o), &cfg, 1e4).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, u_statistic, statistics, wbs);
criterion_main!(benches);

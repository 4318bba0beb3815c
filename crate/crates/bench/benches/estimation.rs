use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tcoint_bench::threshold_panel;
use tcoint_core::linctr::static_regression;
use tcoint_core::tvecm::{grid_search_tvecm, GridConfig};
use tcoint_core::{engle_granger, fit_linear_vecm, build_regressors, LagSelection};

fn bench_grid_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_search");
    for (label, t, grid_points) in [("t250_g50", 250, 50), ("t250_g300", 250, 300)] {
        let panel = threshold_panel(11, t);
        let coint = static_regression(&panel, Default::default(), Default::default()).unwrap();
        let cfg = GridConfig { grid_points, ..GridConfig::default() };
        group.bench_function(label, |b| {
            b.iter(|| grid_search_tvecm(black_box(&panel), 1, &coint, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_linear_fit(c: &mut Criterion) {
    let panel = threshold_panel(13, 500);
    let coint = static_regression(&panel, Default::default(), Default::default()).unwrap();
    c.bench_function("linear_vecm_t500_q1", |b| {
        b.iter(|| {
            let data = build_regressors(black_box(&panel), 1, coint.beta).unwrap();
            fit_linear_vecm(&data).unwrap()
        })
    });
}

fn bench_engle_granger(c: &mut Criterion) {
    let panel = threshold_panel(17, 500);
    c.bench_function("engle_granger_t500", |b| {
        b.iter(|| engle_granger(black_box(&panel), LagSelection::auto()).unwrap())
    });
}

criterion_group!(benches, bench_grid_search, bench_linear_fit, bench_engle_granger);
criterion_main!(benches);

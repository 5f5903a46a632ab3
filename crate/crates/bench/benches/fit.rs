use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pbcox_bench::grouped_replicate;
use pbcox_core::estimation::{fit_breslow, fit_efron, fit_pb_pipeline};
use pbcox_core::{build_risk_structure, InitBeta, InitLambda};

fn fits(c: &mut Criterion) {
    let data = grouped_replicate(200);
    let risk = build_risk_structure(&data).unwrap();
    let mut group = c.benchmark_group("fit_n200_tau0.2");
    group.bench_function("breslow", |b| b.iter(|| fit_breslow(black_box(&data), &risk).unwrap()));
    group.bench_function("efron", |b| b.iter(|| fit_efron(black_box(&data), &risk).unwrap()));
    group.bench_function("pb_pipeline", |b| {
        b.iter(|| fit_pb_pipeline(black_box(&data), &risk, InitBeta::Efron, InitLambda::Efron).unwrap())
    });
    group.finish();
}

criterion_group!(benches, fits);
criterion_main!(benches);

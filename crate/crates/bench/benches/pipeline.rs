use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use prpoint_bench::{curve_37a, plus_symbol};
use prpoint_core::archlfun::anlist;
use prpoint_core::crystalline::kedlaya_frobenius;
use prpoint_core::padiclfun::moments;

fn bench_anlist(c: &mut Criterion) {
    let (e, _) = curve_37a();
    let mut g = c.benchmark_group("anlist");
    for bound in [1_000usize, 10_000] {
        g.bench_with_input(BenchmarkId::from_parameter(bound), &bound, |b, &n| b.iter(|| anlist(&e, black_box(n))));
    }
    g.finish();
}

fn bench_modsym(c: &mut Criterion) {
    let (e, _) = curve_37a();
    c.bench_function("plus_symbol/37", |b| b.iter(|| plus_symbol(black_box(&e))));
    let phi = plus_symbol(&e);
    c.bench_function("eval_scaled/17^4", |b| {
        b.iter(|| (1..2000i64).map(|a| phi.eval_scaled(black_box(a), 83_521)).sum::<i64>())
    });
}

fn bench_moments(c: &mut Criterion) {
    let (e, _) = curve_37a();
    let phi = plus_symbol(&e);
    let mut g = c.benchmark_group("moments/p17");
    g.sample_size(10);
    for depth in [2u32, 3] {
        g.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &n| {
            b.iter(|| moments(&phi, 17, n, 3).expect("moments"))
        });
    }
    g.finish();
}

fn bench_kedlaya(c: &mut Criterion) {
    let (e, _) = curve_37a();
    let mut g = c.benchmark_group("kedlaya/p17");
    g.sample_size(10);
    for m in [6i64, 10] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| kedlaya_frobenius(&e, 17, m).expect("frobenius"))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_anlist, bench_modsym, bench_moments, bench_kedlaya);
criterion_main!(benches);

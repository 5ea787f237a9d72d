use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use zonalnls::evolution::Evolver;
use zonalnls::EquationSpec;
use zonalnls_bench::{probes, transform};

fn synthesize_analyze(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for p in [16usize, 32, 64, 128] {
        let tr = transform(p);
        let f = probes(&[p as f64 / 4.0], 1)[0].resized(p);
        let g = tr.synthesize(&f).unwrap();
        group.bench_with_input(BenchmarkId::new("synthesize", p), &p, |b, _| {
            b.iter(|| tr.synthesize(black_box(&f)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("analyze", p), &p, |b, &p| {
            b.iter(|| tr.analyze(black_box(&g), p).unwrap())
        });
    }
    group.finish();
}

fn strang_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("strang_step");
    for p in [16usize, 32, 64] {
        let ev = Evolver::new(EquationSpec::hartree(1.0), p).unwrap();
        let f = probes(&[4.0], 2)[0].resized(p);
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter(|| ev.strang_step(black_box(&f), 1e-3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, synthesize_analyze, strang_step);
criterion_main!(benches);

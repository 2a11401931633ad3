use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fhnet_bench::fixture;
use fhnet_core::diagnostics::sample_diagnostics;

fn diagnostics(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_diagnostics");
    for (n, m) in [(33, 2), (33, 8), (65, 4)] {
        let f = fixture(n, m, 1.0);
        group.bench_function(BenchmarkId::from_parameter(format!("{n}x{n}/m={m}")), |b| {
            b.iter(|| sample_diagnostics(&f.state, &f.mesh, 5.3e-3))
        });
    }
    group.finish();
}

criterion_group!(benches, diagnostics);
criterion_main!(benches);

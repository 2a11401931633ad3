use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fhnet_bench::fixture;
use fhnet_core::{CouplingMode, RunParams, TimeScheme};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (n, m, mode) in [(33, 2, CouplingMode::Monolithic), (33, 8, CouplingMode::Monolithic), (33, 8, CouplingMode::Lagged)] {
        for scheme in [TimeScheme::ImexEuler, TimeScheme::ImexBdf2] {
            let f = fixture(n, m, 1.0);
            let mut stepper = f.stepper(RunParams::new(0.01, 1.0).with_mode(mode).with_scheme(scheme));
            let mut state = f.state.clone();
            let id = BenchmarkId::new(format!("{mode:?}/{scheme:?}"), format!("{n}x{n}/m={m}"));
            group.bench_function(id, |b| b.iter(|| stepper.step(&mut state).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, step);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fhnet_bench::fixture;
use fhnet_core::operators::NetworkOperator;
use fhnet_core::solver::solve_spd;
use fhnet_core::CouplingMode;

fn cg(c: &mut Criterion) {
    let mut group = c.benchmark_group("cg");
    for n in [17, 33, 65] {
        let f = fixture(n, 2, 10.0);
        let net = NetworkOperator::assemble(&f.mesh, &f.partition, 1.0, 10.0, CouplingMode::Monolithic).unwrap();
        let a = net.monolithic_system(1.0, 0.01);
        let b: Vec<f64> = f.state.u.iter().flatten().zip(f.mesh.mass().iter().cycle()).map(|(u, m)| u * m).collect();
        group.bench_function(BenchmarkId::new("cold", format!("{n}x{n}")), |bench| {
            bench.iter(|| solve_spd(&a, &b, None, 1e-10, 5000).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cg);
criterion_main!(benches);

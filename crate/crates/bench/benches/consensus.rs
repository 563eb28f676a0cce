use criterion::{criterion_group, criterion_main, Criterion};
use paca_core::{
    metropolis_weights, random_connected_graph, rng, run_paca, NoiseKind, NoiseSchedule,
};

fn consensus(c: &mut Criterion) {
    let graph = random_connected_graph(20, 0.2, &mut rng::stream(7, 0)).unwrap();
    let weights = metropolis_weights(&graph);
    let schedule = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, 20).unwrap();
    let x0: Vec<f64> = (0..20).map(|i| i as f64).collect();
    c.bench_function("run_paca/n=20,T=520", |b| {
        b.iter(|| run_paca(&graph, &weights, &x0, &schedule, 520, &mut rng::stream(1, 2)).unwrap())
    });
}

criterion_group!(benches, consensus);
criterion_main!(benches);

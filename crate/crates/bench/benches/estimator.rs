use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dsg_core::signals::seeding;
use dsg_core::{
    build_metropolis, build_stacked_operators, diffuse_energy, example1_model, init_network, network_step,
    AlgorithmParams, InitialEstimate, RegressorStream, Topology,
};
use std::hint::black_box;

fn bench_network_step(c: &mut Criterion) {
    let topology = Topology::ring28plus();
    let w = build_metropolis(&topology);
    let params = AlgorithmParams::new(0.25, 0.7, 4).unwrap();
    let mut stream = RegressorStream::state_space(example1_model(28, 10, 1.2, 0.3).unwrap(), seeding::run_seed(1, 0)).unwrap();
    let rows: Vec<_> = (1..=50).map(|k| stream.step(k).unwrap()).collect();
    let y = vec![0.5; 28];
    c.bench_function("network_step n=28 m=10", |b| {
        b.iter_batched(
            || init_network(28, 10, InitialEstimate::Zero).unwrap(),
            |mut state| {
                for phi in &rows {
                    network_step(&mut state, &w, &params, phi, &y).unwrap();
                }
                state
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn bench_diffuse(c: &mut Criterion) {
    let mut group = c.benchmark_group("diffuse_energy");
    for n in [28usize, 200] {
        let w = build_metropolis(&Topology::ring_with_chords(n, &[7]).unwrap());
        let x0: Vec<f64> = (0..n).map(|i| (i % 5) as f64 / 5.0).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| diffuse_energy(black_box(&w), black_box(&x0), 8))
        });
    }
    group.finish();
}

fn bench_stacked(c: &mut Criterion) {
    let w = build_metropolis(&Topology::ring28plus());
    let params = AlgorithmParams::new(0.25, 0.7, 4).unwrap();
    let mut stream = RegressorStream::state_space(example1_model(28, 10, 1.2, 0.3).unwrap(), 3).unwrap();
    let phi = (1..=20).map(|k| stream.step(k).unwrap()).last().unwrap();
    let r: Vec<f64> = phi.iter().map(|p| 1.0 + 2.0 * p.norm_squared()).collect();
    let xq = vec![0.3; 28];
    c.bench_function("build_stacked_operators mn=280", |b| {
        b.iter(|| build_stacked_operators(black_box(&w), &params, &phi, &r, &xq).unwrap())
    });
}

criterion_group!(benches, bench_network_step, bench_diffuse, bench_stacked);
criterion_main!(benches);

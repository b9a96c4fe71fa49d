use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphenergy::fixtures::{random_connected_graph, random_features, random_non_bipartite_topology};
use graphenergy::gnn::{forward, init_stack, Activation, Arch};
use graphenergy::{eigendecompose, energy_m, laplacian_apply};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators");
    for n in [50, 200] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let g = random_connected_graph(&mut rng, n, 0.05);
        let f = random_features(&mut rng, n, 4);
        group.bench_with_input(BenchmarkId::new("eigendecompose", n), &g, |b, g| {
            b.iter(|| eigendecompose(g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("laplacian_apply", n), &n, |b, _| {
            b.iter(|| laplacian_apply(&g, &f).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("energy_m6", n), &n, |b, _| {
            b.iter(|| energy_m(&g, &f, 6).unwrap())
        });
    }
    group.finish();
}

fn gnn(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let topology = random_non_bipartite_topology(&mut rng, 50, 0.08);
    let x0 = random_features(&mut rng, 50, 16);
    let mut group = c.benchmark_group("forward_depth64");
    for arch in [Arch::Gcn, Arch::Gat] {
        let stack = init_stack(arch, 64, &[16; 65], 0, Activation::Relu).unwrap();
        group.bench_function(arch.to_string(), |b| {
            b.iter(|| forward(&topology, &stack, &x0, &[0, 1, 2]).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, operators, gnn);
criterion_main!(benches);

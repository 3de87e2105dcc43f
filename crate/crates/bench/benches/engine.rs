use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mlnfuse_bench::smokers;
use mlnfuse_core::ground::{ground, ground_with, random_network, GroundingMode, GroundingOptions, RandomNetworkParams};
use mlnfuse_core::infer::{gibbs_marginals, map_inference, InferenceParams};
use mlnfuse_core::parser::parse_queries;

fn grounding(c: &mut Criterion) {
    let mut g = c.benchmark_group("grounding");
    for n in [10, 30] {
        let (kb, ev) = smokers(n);
        let q = parse_queries("Cancer", &kb).unwrap();
        for (name, mode) in [("pruned", GroundingMode::Pruned), ("naive", GroundingMode::Naive)] {
            let opts = GroundingOptions { mode, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| ground_with(&kb, &ev, &q, &opts).unwrap()));
        }
    }
    g.finish();
}

fn gibbs(c: &mut Criterion) {
    let mut g = c.benchmark_group("gibbs");
    g.sample_size(10);
    for n in [10, 30] {
        let (kb, ev) = smokers(n);
        let q = parse_queries("Cancer", &kb).unwrap();
        let net = ground(&kb, &ev, &q).unwrap();
        let params = InferenceParams { samples: 1000, chains: 2, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| gibbs_marginals(&net, &net.queries, &params).unwrap())
        });
    }
    g.finish();
}

fn maxwalksat(c: &mut Criterion) {
    let mut g = c.benchmark_group("maxwalksat");
    for atoms in [50, 200] {
        let p = RandomNetworkParams { atoms, clauses: 4 * atoms, hard: atoms / 5, ..Default::default() };
        let net = random_network(&p, 1);
        let params = InferenceParams::default();
        g.bench_with_input(BenchmarkId::from_parameter(atoms), &atoms, |b, _| {
            b.iter(|| map_inference(&net, &params).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grounding, gibbs, maxwalksat);
criterion_main!(benches);

use agency_core::agent_response::best_response;
use agency_core::bandit::{total_sample_count, MedianElimination};
use agency_core::contract_space::{enumerate_space, round_to_coarse};
use agency_core::environment::{make_arm_set, Environment, Sampling};
use agency_core::generate::{generate_instance, random_learnable_contract, GeneratorConfig};
use agency_core::oracle::grid_optimum;
use agency_core::{Instance, UtilitySpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn instance(k: usize, n: usize) -> Instance {
    let cfg = GeneratorConfig { k, n, utility: UtilitySpec::Crra { rho: 0.5 } };
    Instance::from_file(generate_instance(&cfg, 42).unwrap()).unwrap()
}

fn bench_enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_space");
    for k in [1usize, 2, 3] {
        let inst = instance(k, 2);
        let eta = 0.5 / (4.0 * k as f64) / 4.0;
        group.bench_with_input(BenchmarkId::from_parameter(k), &inst, |b, inst| {
            b.iter(|| enumerate_space(black_box(&inst.outcomes), eta, false).unwrap().len())
        });
    }
    group.finish();
}

fn bench_best_response(c: &mut Criterion) {
    let inst = instance(3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let contracts: Vec<_> = (0..256).map(|_| random_learnable_contract(&inst.outcomes, &mut rng)).collect();
    c.bench_function("best_response_x256", |b| {
        b.iter(|| contracts.iter().map(|w| best_response(&inst.agent, black_box(w)).effort).sum::<usize>())
    });
    c.bench_function("round_to_coarse_x256", |b| {
        b.iter(|| {
            contracts
                .iter()
                .map(|w| round_to_coarse(&inst.outcomes, 0.05, black_box(w)).unwrap().code.total())
                .sum::<u64>()
        })
    });
}

fn bench_median_elimination(c: &mut Criterion) {
    let inst = instance(2, 2);
    let eta = 0.06;
    let space = enumerate_space(&inst.outcomes, eta, false).unwrap();
    let env = Environment::new(inst.clone());
    let arms = make_arm_set(&env, &space, Sampling::Aggregated);
    let mut group = c.benchmark_group("median_elimination");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("aggregated", space.len()), |b| {
        b.iter(|| MedianElimination::new(0.25, 0.1).run(&arms, black_box(7)).unwrap().best)
    });
    group.finish();
    c.bench_function("total_sample_count", |b| {
        b.iter(|| total_sample_count(black_box(10_000), 6.0, 0.125, 0.1).unwrap())
    });
}

fn bench_grid_optimum(c: &mut Criterion) {
    let inst = instance(2, 3);
    let mut group = c.benchmark_group("grid_optimum");
    group.sample_size(10);
    for m in [50usize, 200] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| grid_optimum(&inst.agent, &inst.outcomes, m).unwrap().value)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_enumerate, bench_best_response, bench_median_elimination, bench_grid_optimum);
criterion_main!(benches);

//! Throughput benchmarks for the data-parallel stages, comparing the rayon
//! path (`parallel::map`, the default build) against the sequential
//! fallback (`parallel::map_seq`). Building with `--no-default-features`
//! makes `parallel::map` itself sequential; the paired benchmarks below
//! expose both paths in one run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use meaad_core::attack::{naive_attack, AttackConfig};
use meaad_core::detector::{predict, train_detector, Hyperparams, LabeledExample};
use meaad_core::embedding::QuerySample;
use meaad_core::features::assemble_context_feature;
use meaad_core::parallel;
use meaad_core::retrieval::retrieve_top_k;
use meaad_core::scenario::{generate_scenario, ScenarioConfig};
use std::collections::HashSet;

fn bench_scenario() -> (Vec<meaad_core::embedding::ExpertIndex>, Vec<QuerySample>) {
    generate_scenario(&ScenarioConfig {
        n_identities: 20,
        items_per_identity: 20,
        n_experts: 4,
        dimension: 128,
        queries_per_identity: 10,
        ..ScenarioConfig::default()
    })
    .unwrap()
}

fn retrieval(c: &mut Criterion) {
    let (indexes, queries) = bench_scenario();
    let queries = &queries[..100];
    let mut group = c.benchmark_group("retrieval_top15_x100_queries");
    group.throughput(Throughput::Elements(queries.len() as u64));
    let no_exclusions = HashSet::new();
    let run = |q: &QuerySample| {
        (0..indexes.len())
            .map(|e| {
                retrieve_top_k(&indexes[e], q.query_id, q.embedding(e), 15, &no_exclusions)
                    .unwrap()
                    .entries
                    .len()
            })
            .sum::<usize>()
    };
    group.bench_function(BenchmarkId::new("map", "parallel"), |b| {
        b.iter(|| black_box(parallel::map(queries, run)))
    });
    group.bench_function(BenchmarkId::new("map_seq", "sequential"), |b| {
        b.iter(|| black_box(parallel::map_seq(queries, run)))
    });
    group.finish();
}

fn featurize(c: &mut Criterion) {
    let (indexes, queries) = bench_scenario();
    let queries = &queries[..100];
    let mut group = c.benchmark_group("featurize_n4_k15_x100_queries");
    group.throughput(Throughput::Elements(queries.len() as u64));
    let run = |q: &QuerySample| assemble_context_feature(q, &indexes, 15).unwrap().dim();
    group.bench_function(BenchmarkId::new("map", "parallel"), |b| {
        b.iter(|| black_box(parallel::map(queries, run)))
    });
    group.bench_function(BenchmarkId::new("map_seq", "sequential"), |b| {
        b.iter(|| black_box(parallel::map_seq(queries, run)))
    });
    group.finish();
}

fn attack(c: &mut Criterion) {
    let (_, queries) = bench_scenario();
    let queries = &queries[..100];
    let config = AttackConfig::default();
    let mut group = c.benchmark_group("naive_attack_x100_queries");
    group.throughput(Throughput::Elements(queries.len() as u64));
    let run = |q: &QuerySample| naive_attack(q, &config).unwrap().n_experts();
    group.bench_function(BenchmarkId::new("map", "parallel"), |b| {
        b.iter(|| black_box(parallel::map(queries, run)))
    });
    group.bench_function(BenchmarkId::new("map_seq", "sequential"), |b| {
        b.iter(|| black_box(parallel::map_seq(queries, run)))
    });
    group.finish();
}

fn detector(c: &mut Criterion) {
    let (indexes, queries) = bench_scenario();
    let attack_cfg = AttackConfig::default();
    let attacked: Vec<QuerySample> = queries
        .iter()
        .map(|q| naive_attack(q, &attack_cfg).unwrap())
        .collect();
    let k = 15;
    let mut dataset: Vec<LabeledExample> = parallel::map(&queries, |q| LabeledExample {
        feature: assemble_context_feature(q, &indexes, k).unwrap(),
        label: 0,
    });
    dataset.extend(parallel::map(&attacked, |q| LabeledExample {
        feature: assemble_context_feature(q, &indexes, k).unwrap(),
        label: 1,
    }));

    // Training throughput at the production layer sizes (d = 540), few
    // iterations per sample so the bench stays short.
    let mut group = c.benchmark_group("detector");
    group.sample_size(10);
    group.bench_function("train_d540_batch1024_x10_iters", |b| {
        let hyper = Hyperparams {
            iterations: 10,
            ..Hyperparams::default()
        };
        b.iter(|| black_box(train_detector(&dataset, hyper, 7).unwrap().model.b3))
    });

    let hyper = Hyperparams {
        iterations: 50,
        ..Hyperparams::default()
    };
    let model = train_detector(&dataset, hyper, 7).unwrap().model;
    let flats: Vec<Vec<f64>> = dataset.iter().map(|ex| ex.feature.flat()).collect();
    group.throughput(Throughput::Elements(flats.len() as u64));
    let run = |x: &Vec<f64>| predict(&model, x, 0.5).unwrap().label as usize;
    group.bench_function(BenchmarkId::new("infer/map", "parallel"), |b| {
        b.iter(|| black_box(parallel::map(&flats, run)))
    });
    group.bench_function(BenchmarkId::new("infer/map_seq", "sequential"), |b| {
        b.iter(|| black_box(parallel::map_seq(&flats, run)))
    });
    group.finish();
}

criterion_group!(benches, retrieval, featurize, attack, detector);
criterion_main!(benches);

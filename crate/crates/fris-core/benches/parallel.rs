//! Rayon batch execution vs. the sequential fallback on representative
//! workloads: a Monte-Carlo batch of co-design solves and a batch of
//! channel assemblies. With `--no-default-features` both paths run
//! sequentially and should coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use fris_core::channel::{assemble, sample_realization};
use fris_core::config::ScenarioConfig;
use fris_core::parallel::{maybe_par_map, seq_map};
use fris_core::solver::alternating_optimize;
use std::hint::black_box;

fn bench_config() -> ScenarioConfig {
    let mut config = ScenarioConfig::default();
    config.m_y = 3;
    config.m_z = 3;
    config.n_t = 2;
    config.num_ues = 2;
    config.ue_weights = vec![0.5, 0.5];
    config.trunc_len = 9;
    // Keep a single solve short so the batch measures scheduling, not one cell.
    config.tolerances.max_outer = 5;
    config.tolerances.rcg_max_iters = 40;
    config
}

fn solve_cell(config: &ScenarioConfig, seed: u64) -> f64 {
    let realization = sample_realization(config, seed);
    let assembled = assemble(&realization, config.trunc_len).unwrap();
    alternating_optimize(&assembled, config, seed)
        .unwrap()
        .final_rate()
}

fn batch_solves(c: &mut Criterion) {
    let config = bench_config();
    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("batch_solves");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let rates = seq_map(seeds.clone(), |seed| solve_cell(&config, seed));
            black_box(rates)
        })
    });
    group.bench_function("rayon", |b| {
        b.iter(|| {
            let rates = maybe_par_map(seeds.clone(), |seed| solve_cell(&config, seed));
            black_box(rates)
        })
    });
    group.finish();
}

fn batch_assembly(c: &mut Criterion) {
    let config = bench_config();
    let seeds: Vec<u64> = (0..64).collect();
    let mut group = c.benchmark_group("batch_assembly");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let norms = seq_map(seeds.clone(), |seed| {
                let realization = sample_realization(&config, seed);
                assemble(&realization, config.trunc_len).unwrap().a.norm()
            });
            black_box(norms)
        })
    });
    group.bench_function("rayon", |b| {
        b.iter(|| {
            let norms = maybe_par_map(seeds.clone(), |seed| {
                let realization = sample_realization(&config, seed);
                assemble(&realization, config.trunc_len).unwrap().a.norm()
            });
            black_box(norms)
        })
    });
    group.finish();
}

criterion_group!(benches, batch_solves, batch_assembly);
criterion_main!(benches);

//! Sequential against rayon on the two embarrassingly parallel workloads:
//! ABM replications and a welfare curve.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use goldilocks::abm::{run_simulation, SimConfig};
use goldilocks::econ::ModelParams;
use goldilocks::par::{map_with, Mode};
use goldilocks::policy::{default_grid, pinned_equilibrium};
use goldilocks::static_eq::TwoGoodMarket;

fn replications(c: &mut Criterion) {
    let cfg = SimConfig { n_consumers: 300, horizon: 60, ..SimConfig::default() };
    let seeds: Vec<u64> = (0..8).collect();
    let mut g = c.benchmark_group("abm_replications");
    g.sample_size(10);
    for mode in [Mode::Sequential, Mode::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &m| {
            b.iter(|| map_with(m, &seeds, |&s| run_simulation(&cfg.with_seed(s)).unwrap().records.len()))
        });
    }
    g.finish();
}

fn welfare_curve(c: &mut Criterion) {
    let p = ModelParams::default();
    let market = TwoGoodMarket::new(&p);
    let grid = default_grid(&p, 200).unwrap();
    let mut g = c.benchmark_group("welfare_curve");
    for mode in [Mode::Sequential, Mode::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &m| {
            b.iter(|| map_with(m, &grid, |&d| pinned_equilibrium(&market, d).map(|e| e.welfare)))
        });
    }
    g.finish();
}

criterion_group!(benches, replications, welfare_curve);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use deuteron_epr::exec::Executor;
use deuteron_epr::simulation::{simulate, ExperimentConfig};

fn config(n_events: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_events,
        streams: 16,
        ..ExperimentConfig::default()
    }
}

fn bench_executors(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for n in [10_000u64, 100_000] {
        let cfg = config(n);
        let settings = cfg.resolved_settings().unwrap().len() as u64;
        group.throughput(Throughput::Elements(n * settings));
        for (name, exec) in [("sequential", Executor::Sequential), ("parallel", Executor::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| {
                b.iter(|| simulate(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_executors);
criterion_main!(benches);
